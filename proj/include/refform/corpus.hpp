#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "refform/error.hpp"
#include "refform/io.hpp"
#include "refform/random.hpp"

namespace refform {

// Classification labels in canonical order. The order is the global
// tie-break for every argmax in the toolkit. Empty only exists during
// ingestion and is filtered before classification.
enum class RefForm { Description = 0, Name = 1, Pronoun = 2, Empty = 3 };

inline constexpr std::size_t kNumForms = 3;
inline constexpr std::array<RefForm, kNumForms> kForms = {RefForm::Description, RefForm::Name,
                                                          RefForm::Pronoun};

inline std::string_view to_string(RefForm f) {
  switch (f) {
    case RefForm::Description: return "description";
    case RefForm::Name: return "name";
    case RefForm::Pronoun: return "pronoun";
    case RefForm::Empty: return "empty";
  }
  return "?";
}

inline std::optional<RefForm> parse_form(std::string_view s) {
  if (s == "description") return RefForm::Description;
  if (s == "name") return RefForm::Name;
  if (s == "pronoun") return RefForm::Pronoun;
  if (s == "empty") return RefForm::Empty;
  return std::nullopt;
}

inline std::size_t form_index(RefForm f) { return static_cast<std::size_t>(f); }

enum class GramRole { Subject = 0, Object = 1, Determiner = 2, Other = 3 };

inline std::string_view to_string(GramRole r) {
  switch (r) {
    case GramRole::Subject: return "subject";
    case GramRole::Object: return "object";
    case GramRole::Determiner: return "determiner";
    case GramRole::Other: return "other";
  }
  return "?";
}

inline std::optional<GramRole> parse_gram_role(std::string_view s) {
  if (s == "subject") return GramRole::Subject;
  if (s == "object") return GramRole::Object;
  if (s == "determiner") return GramRole::Determiner;
  if (s == "other") return GramRole::Other;
  return std::nullopt;
}

struct Mention {
  std::string mention_id;
  std::string chain_id;
  int par_index = 0;
  int sent_index = 0;  // document-global
  int token_start = 0;  // sentence-local, half-open
  int token_end = 0;
  RefForm form = RefForm::Name;
  GramRole gram_role = GramRole::Other;
  std::string sem_category;
  std::string canonical_name;
  std::string surface;

  bool operator==(const Mention&) const = default;
};

using Sentence = std::vector<std::string>;
using Paragraph = std::vector<Sentence>;

struct Document {
  std::string doc_id;
  std::string genre;
  std::vector<Paragraph> paragraphs;
  std::vector<Mention> mentions;

  bool operator==(const Document&) const = default;

  std::size_t sentence_count() const {
    std::size_t n = 0;
    for (const auto& p : paragraphs) n += p.size();
    return n;
  }

  std::size_t token_count() const {
    std::size_t n = 0;
    for (const auto& p : paragraphs)
      for (const auto& s : p) n += s.size();
    return n;
  }

  // Per global sentence: owning paragraph, index within it, and offset of
  // its first token in the document-wide token stream.
  struct SentenceInfo {
    int paragraph = 0;
    int index_in_paragraph = 0;
    int token_offset = 0;
    int length = 0;
  };

  std::vector<SentenceInfo> sentence_index() const {
    std::vector<SentenceInfo> out;
    int offset = 0;
    for (std::size_t p = 0; p < paragraphs.size(); ++p) {
      for (std::size_t s = 0; s < paragraphs[p].size(); ++s) {
        const int len = static_cast<int>(paragraphs[p][s].size());
        out.push_back({static_cast<int>(p), static_cast<int>(s), offset, len});
        offset += len;
      }
    }
    return out;
  }
};

struct Corpus {
  std::string name;
  std::vector<Document> documents;

  bool operator==(const Corpus&) const = default;

  std::size_t mention_count() const {
    std::size_t n = 0;
    for (const auto& d : documents) n += d.mentions.size();
    return n;
  }
};

// ---------------------------------------------------------------------------
// JSONL ingestion

namespace detail {

inline const nlohmann::json& field(const nlohmann::json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(where + ": missing field '" + key + "'");
  return *it;
}

template <typename T>
T get_as(const nlohmann::json& obj, const char* key, const std::string& where) {
  const auto& v = field(obj, key, where);
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(where + ": field '" + key + "' has the wrong type");
  }
}

inline void sort_mentions(Document& doc) {
  std::stable_sort(doc.mentions.begin(), doc.mentions.end(), [](const Mention& a, const Mention& b) {
    return std::tie(a.sent_index, a.token_start) < std::tie(b.sent_index, b.token_start);
  });
}

}  // namespace detail

// Checks every structural invariant of a document; `where` prefixes messages.
inline void validate_document(const Document& doc, const std::string& where) {
  require(!doc.doc_id.empty(), where + ": empty doc_id");
  const auto sents = doc.sentence_index();
  std::set<std::string> ids;
  std::map<std::string, std::pair<std::string, std::string>> chains;
  for (const auto& m : doc.mentions) {
    const std::string at = where + " (doc_id " + doc.doc_id + ", mention " + m.mention_id + ")";
    require(!m.mention_id.empty(), at + ": empty mention_id");
    require(ids.insert(m.mention_id).second, at + ": duplicate mention_id");
    require(!m.chain_id.empty(), at + ": empty chain_id");
    require(m.sent_index >= 0 && m.sent_index < static_cast<int>(sents.size()),
            at + ": sent_index " + std::to_string(m.sent_index) + " out of range");
    const auto& s = sents[static_cast<std::size_t>(m.sent_index)];
    require(m.par_index == s.paragraph, at + ": par_index " + std::to_string(m.par_index) +
                                            " does not contain sentence " + std::to_string(m.sent_index));
    require(m.token_start >= 0 && m.token_start < m.token_end, at + ": empty or negative token span");
    require(m.token_end <= s.length, at + ": token_end " + std::to_string(m.token_end) +
                                         " exceeds sentence length " + std::to_string(s.length));
    auto [it, inserted] = chains.emplace(m.chain_id, std::make_pair(m.canonical_name, m.sem_category));
    if (!inserted) {
      require(it->second.first == m.canonical_name,
              at + ": canonical_name differs within chain " + m.chain_id);
      require(it->second.second == m.sem_category, at + ": sem_category differs within chain " + m.chain_id);
    }
  }
}

inline Document document_from_json(const nlohmann::json& j, const std::string& where) {
  require(j.is_object(), where + ": record is not a JSON object");
  Document doc;
  doc.doc_id = detail::get_as<std::string>(j, "doc_id", where);
  const std::string at = where + " (doc_id " + doc.doc_id + ")";
  doc.genre = detail::get_as<std::string>(j, "genre", at);
  doc.paragraphs = detail::get_as<std::vector<Paragraph>>(j, "paragraphs", at);
  const auto& ms = detail::field(j, "mentions", at);
  require(ms.is_array(), at + ": 'mentions' is not an array");
  for (const auto& mj : ms) {
    require(mj.is_object(), at + ": mention is not an object");
    Mention m;
    m.mention_id = detail::get_as<std::string>(mj, "mention_id", at);
    const std::string mat = at + " mention " + m.mention_id;
    m.chain_id = detail::get_as<std::string>(mj, "chain_id", mat);
    m.par_index = detail::get_as<int>(mj, "par_index", mat);
    m.sent_index = detail::get_as<int>(mj, "sent_index", mat);
    m.token_start = detail::get_as<int>(mj, "token_start", mat);
    m.token_end = detail::get_as<int>(mj, "token_end", mat);
    const auto form = detail::get_as<std::string>(mj, "form", mat);
    auto f = parse_form(form);
    require(f.has_value(), mat + ": unknown form label '" + form + "'");
    m.form = *f;
    const auto role = detail::get_as<std::string>(mj, "gram_role", mat);
    auto r = parse_gram_role(role);
    require(r.has_value(), mat + ": unknown gram_role '" + role + "'");
    m.gram_role = *r;
    m.sem_category = detail::get_as<std::string>(mj, "sem_category", mat);
    m.canonical_name = detail::get_as<std::string>(mj, "canonical_name", mat);
    m.surface = detail::get_as<std::string>(mj, "surface", mat);
    doc.mentions.push_back(std::move(m));
  }
  validate_document(doc, where);
  detail::sort_mentions(doc);
  return doc;
}

inline nlohmann::ordered_json document_to_json(const Document& doc) {
  nlohmann::ordered_json j;
  j["doc_id"] = doc.doc_id;
  j["genre"] = doc.genre;
  j["paragraphs"] = doc.paragraphs;
  auto ms = nlohmann::ordered_json::array();
  for (const auto& m : doc.mentions) {
    nlohmann::ordered_json mj;
    mj["mention_id"] = m.mention_id;
    mj["chain_id"] = m.chain_id;
    mj["par_index"] = m.par_index;
    mj["sent_index"] = m.sent_index;
    mj["token_start"] = m.token_start;
    mj["token_end"] = m.token_end;
    mj["form"] = to_string(m.form);
    mj["gram_role"] = to_string(m.gram_role);
    mj["sem_category"] = m.sem_category;
    mj["canonical_name"] = m.canonical_name;
    mj["surface"] = m.surface;
    ms.push_back(std::move(mj));
  }
  j["mentions"] = std::move(ms);
  return j;
}

inline void drop_empty_mentions(Document& doc) {
  std::erase_if(doc.mentions, [](const Mention& m) { return m.form == RefForm::Empty; });
}

// Parses JSONL text, one document per non-blank line.
inline Corpus parse_corpus_text(std::string_view text, std::string name, bool include_empty,
                                const std::string& source = "<memory>") {
  Corpus corpus;
  corpus.name = std::move(name);
  std::set<std::string> seen;
  std::size_t line_no = 0;
  for (const auto& line : io::split(text, '\n')) {
    ++line_no;
    if (io::trim(line).empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      fail(where + ": malformed JSON (" + e.what() + ")");
    }
    Document doc = document_from_json(j, where);
    require(seen.insert(doc.doc_id).second, where + ": duplicate doc_id " + doc.doc_id);
    if (!include_empty) drop_empty_mentions(doc);
    corpus.documents.push_back(std::move(doc));
  }
  require(!corpus.documents.empty(), source + ": schema error: corpus contains no documents");
  return corpus;
}

inline Corpus parse_corpus(const std::filesystem::path& path, bool include_empty = false) {
  if (!std::filesystem::exists(path)) fail("corpus file not found: " + path.string());
  return parse_corpus_text(io::read_file(path), path.stem().string(), include_empty, path.string());
}

inline std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& d : corpus.documents) {
    out += document_to_json(d).dump();
    out += '\n';
  }
  return out;
}

inline void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  io::write_file_atomic(path, serialize_corpus(corpus));
}

// ---------------------------------------------------------------------------
// Statistics

struct CorpusStats {
  std::size_t n_docs = 0;
  double mean_words = 0;
  double mean_sentences = 0;
  double mean_paragraphs = 0;
  double mean_referents = 0;
  std::size_t n_mentions = 0;
  // Indexed by RefForm, Empty last. Percent of retained mentions.
  std::array<double, 4> form_percent{};
  std::array<std::size_t, 4> form_count{};

  double percent(RefForm f) const { return form_percent[form_index(f)]; }
};

inline CorpusStats compute_stats(const Corpus& corpus) {
  require(!corpus.documents.empty(), "compute_stats: corpus is empty");
  CorpusStats st;
  st.n_docs = corpus.documents.size();
  double words = 0, sents = 0, pars = 0, refs = 0;
  for (const auto& d : corpus.documents) {
    words += static_cast<double>(d.token_count());
    sents += static_cast<double>(d.sentence_count());
    pars += static_cast<double>(d.paragraphs.size());
    std::set<std::string> chains;
    for (const auto& m : d.mentions) {
      chains.insert(m.chain_id);
      ++st.form_count[form_index(m.form)];
      ++st.n_mentions;
    }
    refs += static_cast<double>(chains.size());
  }
  const double n = static_cast<double>(st.n_docs);
  st.mean_words = words / n;
  st.mean_sentences = sents / n;
  st.mean_paragraphs = pars / n;
  st.mean_referents = refs / n;
  if (st.n_mentions > 0) {
    for (std::size_t i = 0; i < 4; ++i)
      st.form_percent[i] = 100.0 * static_cast<double>(st.form_count[i]) / static_cast<double>(st.n_mentions);
  }
  return st;
}

inline nlohmann::ordered_json stats_to_json(const CorpusStats& st) {
  nlohmann::ordered_json j;
  j["n_docs"] = st.n_docs;
  j["mean_words_per_doc"] = st.mean_words;
  j["mean_sentences_per_doc"] = st.mean_sentences;
  j["mean_paragraphs_per_doc"] = st.mean_paragraphs;
  j["mean_referents_per_doc"] = st.mean_referents;
  j["n_mentions"] = st.n_mentions;
  nlohmann::ordered_json pct;
  for (RefForm f : {RefForm::Description, RefForm::Name, RefForm::Pronoun, RefForm::Empty})
    pct[std::string(to_string(f))] = st.percent(f);
  j["form_percent"] = std::move(pct);
  return j;
}

inline std::string stats_table(const CorpusStats& st) {
  std::string out;
  auto row = [&](const std::string& k, const std::string& v) { out += k + std::string(28 - k.size(), ' ') + v + "\n"; };
  row("number of documents", std::to_string(st.n_docs));
  row("word/doc (mean)", io::fixed(st.mean_words, 2));
  row("sent/doc (mean)", io::fixed(st.mean_sentences, 2));
  row("par/doc (mean)", io::fixed(st.mean_paragraphs, 2));
  row("referent/doc (mean)", io::fixed(st.mean_referents, 2));
  row("number of RE", std::to_string(st.n_mentions));
  for (RefForm f : {RefForm::Description, RefForm::Name, RefForm::Pronoun, RefForm::Empty})
    row(std::string(to_string(f)) + " %", io::fixed(st.percent(f), 2) + "%");
  return out;
}

// ---------------------------------------------------------------------------
// Splitting

struct SplitSpec {
  double train = 0.85;
  double dev = 0.05;
  double test = 0.10;
  std::uint64_t seed = 0;

  void validate() const {
    for (double r : {train, dev, test})
      require(r > 0.0 && r < 1.0, "split ratios must each lie in (0, 1)");
    require(std::abs(train + dev + test - 1.0) <= 1e-9, "split ratios must sum to 1");
  }
};

struct CorpusSplit {
  Corpus train;
  Corpus dev;
  Corpus test;
};

namespace detail {

inline Corpus subset(const Corpus& c, const std::string& suffix, const std::vector<std::size_t>& idx) {
  Corpus out;
  out.name = c.name + "." + suffix;
  for (auto i : idx) out.documents.push_back(c.documents[i]);
  return out;
}

}  // namespace detail

// Document-wise split. dev and test sizes are round(n * ratio); train takes
// the remainder. Each part keeps the corpus's original document order.
inline CorpusSplit split_corpus(const Corpus& corpus, const SplitSpec& spec) {
  spec.validate();
  const std::size_t n = corpus.documents.size();
  require(n >= 3, "split_corpus: need at least 3 documents, got " + std::to_string(n));
  const auto n_dev = static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.dev));
  const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.test));
  require(n_dev >= 1 && n_test >= 1,
          "split_corpus: corpus too small for a non-empty dev and test split (" + std::to_string(n) + " docs)");
  require(n_dev + n_test <= n, "split_corpus: dev and test exceed the corpus size");

  Rng rng(spec.seed, 0x5917);
  auto perm = rng.permutation(n);
  std::vector<std::size_t> train(perm.begin(), perm.end() - static_cast<std::ptrdiff_t>(n_dev + n_test));
  std::vector<std::size_t> dev(perm.end() - static_cast<std::ptrdiff_t>(n_dev + n_test),
                               perm.end() - static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> test(perm.end() - static_cast<std::ptrdiff_t>(n_test), perm.end());
  for (auto* v : {&train, &dev, &test}) std::sort(v->begin(), v->end());
  return {detail::subset(corpus, "train", train), detail::subset(corpus, "dev", dev),
          detail::subset(corpus, "test", test)};
}

// Explicit doc_id -> split assignment (two-column TSV: doc_id, train|dev|test).
// Every document must be assigned exactly once.
inline CorpusSplit split_by_assignment(const Corpus& corpus, const std::vector<std::string>& tsv_lines,
                                       const std::string& source = "<assignment>") {
  std::map<std::string, std::string> assign;
  std::size_t line_no = 0;
  for (const auto& raw : tsv_lines) {
    ++line_no;
    const auto line = io::trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto cols = io::split(line, '\t');
    const std::string where = source + ":" + std::to_string(line_no);
    require(cols.size() == 2, where + ": expected 2 tab-separated columns");
    const auto part = io::trim(cols[1]);
    require(part == "train" || part == "dev" || part == "test", where + ": unknown split '" + part + "'");
    require(assign.emplace(io::trim(cols[0]), part).second, where + ": doc_id assigned twice");
  }
  std::vector<std::size_t> train, dev, test;
  std::set<std::string> known;
  for (std::size_t i = 0; i < corpus.documents.size(); ++i) {
    const auto& id = corpus.documents[i].doc_id;
    known.insert(id);
    auto it = assign.find(id);
    require(it != assign.end(), source + ": no split assigned for doc_id " + id);
    (it->second == "train" ? train : it->second == "dev" ? dev : test).push_back(i);
  }
  for (const auto& [id, part] : assign)
    require(known.count(id) > 0, source + ": doc_id " + id + " not present in the corpus");
  return {detail::subset(corpus, "train", train), detail::subset(corpus, "dev", dev),
          detail::subset(corpus, "test", test)};
}

}  // namespace refform
