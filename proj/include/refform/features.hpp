#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "refform/corpus.hpp"
#include "refform/error.hpp"
#include "refform/io.hpp"

namespace refform {

enum class FeatureKind { Categorical, Ordinal, Binary };

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::Binary;
  std::vector<std::string> domain;  // Categorical only, in one-hot column order
  int max = 1;                      // Ordinal clamp
  std::string description;

  // Number of encoded columns.
  std::size_t width() const { return kind == FeatureKind::Categorical ? domain.size() : 1; }

  bool operator==(const FeatureSpec&) const = default;
};

inline constexpr int kDefaultRecencyClamp = 50;
inline constexpr int kDefaultChainIndexClamp = 10;
inline constexpr int kDefaultCompetitorsClamp = 10;

inline const std::vector<std::string>& default_sem_categories() {
  static const std::vector<std::string> cats = {"human", "city",         "country", "river",
                                                "mountain", "organization", "object",  "other"};
  return cats;
}

struct FeatureConfig {
  std::string system_name = "custom";
  std::vector<std::string> features;
  bool subsequent_only = false;
  std::map<std::string, int> clamps = {{"recency_tokens", kDefaultRecencyClamp},
                                       {"chain_mention_index", kDefaultChainIndexClamp},
                                       {"competitors", kDefaultCompetitorsClamp}};
  std::vector<std::string> sem_categories = default_sem_categories();

  int clamp(const std::string& name) const {
    auto it = clamps.find(name);
    require(it != clamps.end(), "no clamp configured for " + name);
    return it->second;
  }

  bool operator==(const FeatureConfig&) const = default;
};

inline std::vector<FeatureSpec> builtin_registry(const FeatureConfig& cfg = {}) {
  using K = FeatureKind;
  return {
      {"gram_role", K::Categorical, {"subject", "object", "determiner", "other"}, 1,
       "grammatical role of the mention"},
      {"sem_category", K::Categorical, cfg.sem_categories, 1,
       "semantic category of the referent; unlisted categories map to 'other'"},
      {"sent_distance_cat", K::Categorical, {"first", "same", "previous", "far"}, 1,
       "sentences back to the nearest same-chain antecedent: none, 0, 1, 2+"},
      {"first_mention", K::Binary, {}, 1, "first mention of its chain in the document"},
      {"recency_tokens", K::Ordinal, {}, cfg.clamp("recency_tokens"),
       "tokens between the antecedent's end and this mention's start, clamped; clamp value when no antecedent"},
      {"prev_form", K::Categorical, {"none", "description", "name", "pronoun"}, 1,
       "form of the previous mention in the chain"},
      {"par_initial", K::Binary, {}, 1, "mention lies in the first sentence of its paragraph"},
      {"sent_initial", K::Binary, {}, 1, "mention starts its sentence"},
      {"chain_mention_index", K::Ordinal, {}, cfg.clamp("chain_mention_index"),
       "0-based position of the mention within its chain, clamped"},
      {"competitors", K::Ordinal, {}, cfg.clamp("competitors"),
       "other chains mentioned in the same or previous sentence, clamped"},
  };
}

inline std::vector<std::string> registry_names(const std::vector<FeatureSpec>& reg) {
  std::vector<std::string> out;
  for (const auto& s : reg) out.push_back(s.name);
  return out;
}

inline const FeatureSpec& find_spec(const std::vector<FeatureSpec>& reg, const std::string& name) {
  for (const auto& s : reg)
    if (s.name == name) return s;
  fail("unknown feature '" + name + "'");
}

// Resolves the config's selection against the registry. Reports every
// unknown name at once.
inline std::vector<FeatureSpec> select_features(const FeatureConfig& cfg) {
  const auto reg = builtin_registry(cfg);
  std::vector<std::string> unknown;
  std::vector<FeatureSpec> out;
  std::set<std::string> seen;
  for (const auto& name : cfg.features) {
    auto it = std::find_if(reg.begin(), reg.end(), [&](const FeatureSpec& s) { return s.name == name; });
    if (it == reg.end()) {
      unknown.push_back(name);
      continue;
    }
    require(seen.insert(name).second, "feature '" + name + "' selected twice");
    out.push_back(*it);
  }
  if (!unknown.empty()) fail("unknown feature name(s): " + io::join(unknown, ", "));
  require(!out.empty(), "feature config selects no features");
  return out;
}

// ---------------------------------------------------------------------------
// Config file: `key = value` lines, '#' comments.

inline bool parse_bool(const std::string& v, const std::string& where) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(where + ": expected a boolean, got '" + v + "'");
}

inline FeatureConfig parse_feature_config(const std::vector<std::string>& lines,
                                          const std::string& source = "<config>") {
  FeatureConfig cfg;
  std::size_t line_no = 0;
  for (const auto& raw : lines) {
    ++line_no;
    auto line = raw.substr(0, raw.find('#'));
    if (io::trim(line).empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    const auto eq = line.find('=');
    require(eq != std::string::npos, where + ": expected 'key = value'");
    const auto key = io::trim(line.substr(0, eq));
    const auto value = io::trim(line.substr(eq + 1));
    auto list = [&] {
      std::vector<std::string> out;
      for (const auto& item : io::split(value, ','))
        if (auto t = io::trim(item); !t.empty()) out.push_back(t);
      return out;
    };
    if (key == "system_name") {
      cfg.system_name = value;
    } else if (key == "features") {
      cfg.features = list();
    } else if (key == "subsequent_only") {
      cfg.subsequent_only = parse_bool(value, where);
    } else if (key == "clamps") {
      for (const auto& item : list()) {
        const auto colon = item.find(':');
        require(colon != std::string::npos, where + ": clamp entries are name:value");
        const auto name = io::trim(item.substr(0, colon));
        require(cfg.clamps.count(name) > 0, where + ": '" + name + "' is not a clamped feature");
        int v = 0;
        try {
          v = std::stoi(item.substr(colon + 1));
        } catch (const std::exception&) {
          fail(where + ": bad clamp value in '" + item + "'");
        }
        require(v >= 1, where + ": clamp must be >= 1");
        cfg.clamps[name] = v;
      }
    } else if (key == "sem_categories") {
      cfg.sem_categories = list();
      require(!cfg.sem_categories.empty(), where + ": sem_categories is empty");
      require(std::set<std::string>(cfg.sem_categories.begin(), cfg.sem_categories.end()).size() ==
                  cfg.sem_categories.size(),
              where + ": sem_categories has duplicates");
      if (std::find(cfg.sem_categories.begin(), cfg.sem_categories.end(), "other") == cfg.sem_categories.end())
        cfg.sem_categories.push_back("other");
    } else {
      fail(where + ": unknown key '" + key + "'");
    }
  }
  select_features(cfg);
  return cfg;
}

inline FeatureConfig load_feature_config(const std::filesystem::path& path) {
  return parse_feature_config(io::read_lines(path), path.string());
}

inline std::string format_feature_config(const FeatureConfig& cfg) {
  std::string out = "system_name = " + cfg.system_name + "\n";
  out += "features = " + io::join(cfg.features, ", ") + "\n";
  out += std::string("subsequent_only = ") + (cfg.subsequent_only ? "true" : "false") + "\n";
  std::vector<std::string> cl;
  for (const auto& [k, v] : cfg.clamps) cl.push_back(k + ":" + std::to_string(v));
  out += "clamps = " + io::join(cl, ", ") + "\n";
  out += "sem_categories = " + io::join(cfg.sem_categories, ", ") + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Feature table

struct FeatureRow {
  std::string doc_id;
  std::string mention_id;
  RefForm gold = RefForm::Name;
  // Categorical: domain index; Ordinal: clamped value; Binary: 0/1.
  std::vector<int> values;

  bool operator==(const FeatureRow&) const = default;
};

struct FeatureTable {
  std::string system_name;
  std::vector<FeatureSpec> specs;
  std::vector<FeatureRow> rows;

  bool operator==(const FeatureTable&) const = default;

  std::size_t feature_index(const std::string& name) const {
    for (std::size_t i = 0; i < specs.size(); ++i)
      if (specs[i].name == name) return i;
    fail("feature table has no feature '" + name + "'");
  }

  std::string value_label(std::size_t row, std::size_t feature) const {
    const auto& s = specs[feature];
    const int v = rows[row].values[feature];
    return s.kind == FeatureKind::Categorical ? s.domain[static_cast<std::size_t>(v)] : std::to_string(v);
  }

  // [begin, end) row ranges of consecutive rows sharing a doc_id.
  std::vector<std::pair<std::size_t, std::size_t>> sequences() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t b = 0;
    for (std::size_t i = 1; i <= rows.size(); ++i) {
      if (i == rows.size() || rows[i].doc_id != rows[b].doc_id) {
        if (i > b) out.emplace_back(b, i);
        b = i;
      }
    }
    return out;
  }
};

namespace detail {

inline int domain_index(const FeatureSpec& spec, const std::string& value) {
  auto it = std::find(spec.domain.begin(), spec.domain.end(), value);
  if (it == spec.domain.end()) return -1;
  return static_cast<int>(it - spec.domain.begin());
}

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// All registry features of one document, one map per mention (document order).
inline std::vector<std::map<std::string, int>> document_features(const Document& doc, const FeatureConfig& cfg,
                                                                 const std::vector<FeatureSpec>& reg) {
  const auto sents = doc.sentence_index();
  const auto& sem = find_spec(reg, "sem_category");
  const int other_sem = domain_index(sem, "other");
  const int recency_max = cfg.clamp("recency_tokens");
  const int index_max = cfg.clamp("chain_mention_index");
  const int comp_max = cfg.clamp("competitors");

  std::map<std::string, std::size_t> last_in_chain;
  std::map<std::string, int> chain_count;
  std::vector<std::map<std::string, int>> out;
  out.reserve(doc.mentions.size());
  for (std::size_t i = 0; i < doc.mentions.size(); ++i) {
    const Mention& m = doc.mentions[i];
    require(m.form != RefForm::Empty,
            "doc_id " + doc.doc_id + " mention " + m.mention_id +
                ": empty-form mentions cannot be featurized (ingest without --include-empty)");
    std::map<std::string, int> f;
    f["gram_role"] = static_cast<int>(m.gram_role);
    const int s = domain_index(sem, lower(m.sem_category));
    f["sem_category"] = s >= 0 ? s : other_sem;

    const auto prev = last_in_chain.find(m.chain_id);
    const auto& si = sents[static_cast<std::size_t>(m.sent_index)];
    if (prev == last_in_chain.end()) {
      f["sent_distance_cat"] = 0;
      f["first_mention"] = 1;
      f["recency_tokens"] = recency_max;
      f["prev_form"] = 0;
    } else {
      const Mention& a = doc.mentions[prev->second];
      const int gap = m.sent_index - a.sent_index;
      f["sent_distance_cat"] = gap == 0 ? 1 : gap == 1 ? 2 : 3;
      f["first_mention"] = 0;
      const int a_end = sents[static_cast<std::size_t>(a.sent_index)].token_offset + a.token_end;
      const int dist = std::max(0, si.token_offset + m.token_start - a_end);
      f["recency_tokens"] = std::min(dist, recency_max);
      f["prev_form"] = 1 + static_cast<int>(a.form);
    }
    f["par_initial"] = si.index_in_paragraph == 0 ? 1 : 0;
    f["sent_initial"] = m.token_start == 0 ? 1 : 0;
    f["chain_mention_index"] = std::min(chain_count[m.chain_id], index_max);

    std::set<std::string> others;
    for (const auto& o : doc.mentions)
      if (o.chain_id != m.chain_id && (o.sent_index == m.sent_index || o.sent_index == m.sent_index - 1))
        others.insert(o.chain_id);
    f["competitors"] = std::min(static_cast<int>(others.size()), comp_max);

    last_in_chain[m.chain_id] = i;
    ++chain_count[m.chain_id];
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace detail

// One row per mention in document order. With subsequent_only the first
// mention of each chain is dropped after its features are computed.
inline FeatureTable extract(const Corpus& corpus, const FeatureConfig& cfg) {
  FeatureTable table;
  table.system_name = cfg.system_name;
  table.specs = select_features(cfg);
  const auto reg = builtin_registry(cfg);
  for (const auto& doc : corpus.documents) {
    const auto feats = detail::document_features(doc, cfg, reg);
    for (std::size_t i = 0; i < doc.mentions.size(); ++i) {
      if (cfg.subsequent_only && feats[i].at("first_mention") == 1) continue;
      FeatureRow row{doc.doc_id, doc.mentions[i].mention_id, doc.mentions[i].form, {}};
      for (const auto& s : table.specs) row.values.push_back(feats[i].at(s.name));
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

inline std::string feature_table_tsv(const FeatureTable& t) {
  std::string out = "doc_id\tmention_id\tgold";
  for (const auto& s : t.specs) out += "\t" + s.name;
  out += "\n";
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    out += t.rows[r].doc_id + "\t" + t.rows[r].mention_id + "\t" + std::string(to_string(t.rows[r].gold));
    for (std::size_t f = 0; f < t.specs.size(); ++f) out += "\t" + t.value_label(r, f);
    out += "\n";
  }
  return out;
}

// Reads a TSV written by feature_table_tsv; the header must name exactly the
// features the config selects, in order.
inline FeatureTable parse_feature_table(const std::vector<std::string>& lines, const FeatureConfig& cfg,
                                        const std::string& source = "<features>") {
  FeatureTable t;
  t.system_name = cfg.system_name;
  t.specs = select_features(cfg);
  require(!lines.empty(), source + ": empty feature table");
  const auto header = io::split(lines[0], '\t');
  std::vector<std::string> expected = {"doc_id", "mention_id", "gold"};
  for (const auto& s : t.specs) expected.push_back(s.name);
  require(header == expected, source + ": header does not match the feature config (expected " +
                                  io::join(expected, ",") + ")");
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (io::trim(lines[ln]).empty()) continue;
    const std::string where = source + ":" + std::to_string(ln + 1);
    const auto cols = io::split(lines[ln], '\t');
    require(cols.size() == expected.size(), where + ": wrong column count");
    auto gold = parse_form(cols[2]);
    require(gold.has_value() && *gold != RefForm::Empty, where + ": bad gold label '" + cols[2] + "'");
    FeatureRow row{cols[0], cols[1], *gold, {}};
    for (std::size_t f = 0; f < t.specs.size(); ++f) {
      const auto& s = t.specs[f];
      const auto& cell = cols[3 + f];
      int v = 0;
      if (s.kind == FeatureKind::Categorical) {
        v = detail::domain_index(s, cell);
        require(v >= 0, where + ": '" + cell + "' is not in the domain of " + s.name);
      } else {
        try {
          v = std::stoi(cell);
        } catch (const std::exception&) {
          fail(where + ": non-integer value '" + cell + "' for " + s.name);
        }
        const int hi = s.kind == FeatureKind::Binary ? 1 : s.max;
        require(v >= 0 && v <= hi, where + ": value out of range for " + s.name);
      }
      row.values.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

// ---------------------------------------------------------------------------
// Numeric encoding

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }

  bool operator==(const Matrix&) const = default;
};

struct FeatureBlock {
  std::string feature;
  std::size_t offset = 0;
  std::size_t width = 0;
  bool operator==(const FeatureBlock&) const = default;
};

struct ColumnMap {
  std::vector<std::string> columns;  // "feature=value" for one-hot, else feature name
  std::vector<FeatureBlock> blocks;

  std::size_t size() const { return columns.size(); }
  bool operator==(const ColumnMap&) const = default;
};

inline ColumnMap column_map(const std::vector<FeatureSpec>& specs) {
  ColumnMap cm;
  for (const auto& s : specs) {
    cm.blocks.push_back({s.name, cm.columns.size(), s.width()});
    if (s.kind == FeatureKind::Categorical) {
      for (const auto& v : s.domain) cm.columns.push_back(s.name + "=" + v);
    } else {
      cm.columns.push_back(s.name);
    }
  }
  return cm;
}

struct EncodedTable {
  Matrix x;
  std::vector<int> y;  // canonical RefForm index
  ColumnMap columns;
};

inline void encode_row(const std::vector<FeatureSpec>& specs, const std::vector<int>& values, std::span<double> out) {
  std::size_t c = 0;
  for (std::size_t f = 0; f < specs.size(); ++f) {
    const auto& s = specs[f];
    switch (s.kind) {
      case FeatureKind::Categorical:
        for (std::size_t k = 0; k < s.domain.size(); ++k) out[c + k] = values[f] == static_cast<int>(k) ? 1.0 : 0.0;
        break;
      case FeatureKind::Ordinal: out[c] = static_cast<double>(values[f]) / static_cast<double>(s.max); break;
      case FeatureKind::Binary: out[c] = values[f] ? 1.0 : 0.0; break;
    }
    c += s.width();
  }
}

inline EncodedTable encode(const FeatureTable& t) {
  require(!t.rows.empty(), "encode: feature table is empty");
  EncodedTable e;
  e.columns = column_map(t.specs);
  e.x = Matrix(t.rows.size(), e.columns.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    encode_row(t.specs, t.rows[r].values, e.x.row(r));
    e.y.push_back(static_cast<int>(form_index(t.rows[r].gold)));
  }
  return e;
}

}  // namespace refform
