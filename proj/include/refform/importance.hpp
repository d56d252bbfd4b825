#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "refform/error.hpp"
#include "refform/evaluation.hpp"
#include "refform/io.hpp"
#include "refform/model.hpp"
#include "refform/random.hpp"

namespace refform {

enum class ImportanceMetric { Accuracy, MacroF1 };

inline std::string to_string(ImportanceMetric m) { return m == ImportanceMetric::Accuracy ? "accuracy" : "macro_f1"; }

inline ImportanceMetric parse_importance_metric(const std::string& s) {
  if (s == "accuracy") return ImportanceMetric::Accuracy;
  if (s == "macro_f1") return ImportanceMetric::MacroF1;
  fail("unknown importance metric '" + s + "' (expected accuracy or macro_f1)");
}

struct FeatureImportance {
  std::string feature;
  double mean = 0.0;
  std::vector<double> per_repeat;
};

struct ImportanceRanking {
  ImportanceMetric metric = ImportanceMetric::MacroF1;
  int n_repeats = 0;
  std::uint64_t seed = 0;
  double baseline = 0.0;
  std::vector<FeatureImportance> entries;  // descending mean importance

  std::vector<std::string> order() const {
    std::vector<std::string> out;
    for (const auto& e : entries) out.push_back(e.feature);
    return out;
  }
};

inline double score_table(const TrainedModel& model, const FeatureTable& table, ImportanceMetric metric) {
  std::vector<GoldLabel> gold;
  for (const auto& r : table.rows) gold.push_back({r.doc_id, r.mention_id, r.gold});
  const EvalReport rep = evaluate(predict(model, table), gold);
  return metric == ImportanceMetric::Accuracy ? rep.accuracy : rep.macro_f1;
}

// Metric after replacing feature `feature` of row i with that of row perm[i].
// All one-hot columns of the feature move together.
inline double permuted_metric(const TrainedModel& model, const FeatureTable& table, std::size_t feature,
                              const std::vector<std::size_t>& perm, ImportanceMetric metric) {
  FeatureTable shuffled = table;
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    shuffled.rows[i].values[feature] = table.rows[perm[i]].values[feature];
  return score_table(model, shuffled, metric);
}

// Importance = baseline metric - permuted metric, averaged over repeats.
// Repeat r uses one permutation drawn from (seed, r), shared by all features.
// `jobs` > 1 spreads features over threads; results do not depend on it.
inline ImportanceRanking permutation_importance(const TrainedModel& model, const FeatureTable& table,
                                                ImportanceMetric metric, int n_repeats, std::uint64_t seed,
                                                int jobs = 1) {
  require(n_repeats >= 1, "permutation_importance: n_repeats must be >= 1");
  require(!table.rows.empty(), "permutation_importance: empty table");
  require(column_map(table.specs) == model.columns, "permutation_importance: table columns do not match the model");

  ImportanceRanking out;
  out.metric = metric;
  out.n_repeats = n_repeats;
  out.seed = seed;
  out.baseline = score_table(model, table, metric);

  std::vector<std::vector<std::size_t>> perms;
  for (int r = 0; r < n_repeats; ++r) perms.push_back(Rng(seed, static_cast<std::uint64_t>(r)).permutation(table.rows.size()));

  const std::size_t n_features = table.specs.size();
  std::vector<FeatureImportance> results(n_features);
  auto work = [&](std::size_t f) {
    auto& fi = results[f];
    fi.feature = table.specs[f].name;
    for (const auto& perm : perms) fi.per_repeat.push_back(out.baseline - permuted_metric(model, table, f, perm, metric));
    double s = 0.0;
    for (double v : fi.per_repeat) s += v;
    fi.mean = s / static_cast<double>(n_repeats);
  };
  const auto n_threads = static_cast<std::size_t>(std::max(1, jobs));
  if (n_threads == 1) {
    for (std::size_t f = 0; f < n_features; ++f) work(f);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t f = t; f < n_features; f += n_threads) work(f);
      });
    for (auto& th : pool) th.join();
  }
  out.entries = std::move(results);
  std::stable_sort(out.entries.begin(), out.entries.end(),
                   [](const FeatureImportance& a, const FeatureImportance& b) { return a.mean > b.mean; });
  return out;
}

inline std::string importance_csv(const ImportanceRanking& r) {
  std::string out = "feature,mean";
  for (int i = 1; i <= r.n_repeats; ++i) out += ",repeat_" + std::to_string(i);
  out += "\n";
  for (const auto& e : r.entries) {
    out += e.feature + "," + io::fixed(e.mean, 6);
    for (double v : e.per_repeat) out += "," + io::fixed(v, 6);
    out += "\n";
  }
  return out;
}

// Long format for plotting: one row per (feature, repeat).
inline std::string importance_long_csv(const ImportanceRanking& r) {
  std::string out = "feature,rank,repeat,importance\n";
  for (std::size_t i = 0; i < r.entries.size(); ++i)
    for (std::size_t k = 0; k < r.entries[i].per_repeat.size(); ++k)
      out += r.entries[i].feature + "," + std::to_string(i + 1) + "," + std::to_string(k + 1) + "," +
             io::fixed(r.entries[i].per_repeat[k], 6) + "\n";
  return out;
}

inline ImportanceRanking parse_importance_csv(const std::vector<std::string>& lines,
                                              const std::string& source = "<ranking>") {
  require(!lines.empty(), source + ": empty ranking file");
  const auto header = io::split(lines[0], ',');
  require(header.size() >= 2 && header[0] == "feature" && header[1] == "mean", source + ": bad ranking header");
  ImportanceRanking r;
  r.n_repeats = static_cast<int>(header.size()) - 2;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (io::trim(lines[ln]).empty()) continue;
    const auto cols = io::split(lines[ln], ',');
    require(cols.size() == header.size(), source + ":" + std::to_string(ln + 1) + ": wrong column count");
    FeatureImportance fi;
    fi.feature = cols[0];
    try {
      fi.mean = std::stod(cols[1]);
      for (std::size_t i = 2; i < cols.size(); ++i) fi.per_repeat.push_back(std::stod(cols[i]));
    } catch (const std::exception&) {
      fail(source + ":" + std::to_string(ln + 1) + ": non-numeric importance");
    }
    r.entries.push_back(std::move(fi));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Cross-corpus comparison

struct ImportanceComparison {
  std::vector<std::string> corpora;
  std::vector<std::string> features;             // union, in first-seen rank order
  std::vector<std::vector<std::optional<int>>> ranks;  // [feature][corpus], 1-based
  std::vector<std::size_t> overlap;              // overlap[k-1]: features in every top-k
};

inline std::size_t top_k_overlap(const std::vector<std::vector<std::string>>& orders, std::size_t k) {
  std::set<std::string> common(orders[0].begin(), orders[0].begin() + static_cast<std::ptrdiff_t>(std::min(k, orders[0].size())));
  for (std::size_t i = 1; i < orders.size(); ++i) {
    std::set<std::string> top(orders[i].begin(), orders[i].begin() + static_cast<std::ptrdiff_t>(std::min(k, orders[i].size())));
    std::set<std::string> keep;
    for (const auto& f : common)
      if (top.count(f)) keep.insert(f);
    common = std::move(keep);
  }
  return common.size();
}

inline ImportanceComparison importance_report(const std::vector<std::pair<std::string, ImportanceRanking>>& rankings) {
  require(rankings.size() >= 2, "importance_report: need at least 2 rankings");
  ImportanceComparison c;
  std::vector<std::vector<std::string>> orders;
  std::size_t max_k = 0;
  for (const auto& [name, r] : rankings) {
    c.corpora.push_back(name);
    orders.push_back(r.order());
    max_k = std::max(max_k, orders.back().size());
    for (const auto& f : orders.back())
      if (std::find(c.features.begin(), c.features.end(), f) == c.features.end()) c.features.push_back(f);
  }
  for (const auto& f : c.features) {
    std::vector<std::optional<int>> row;
    for (const auto& o : orders) {
      auto it = std::find(o.begin(), o.end(), f);
      row.push_back(it == o.end() ? std::nullopt : std::optional<int>(static_cast<int>(it - o.begin()) + 1));
    }
    c.ranks.push_back(std::move(row));
  }
  for (std::size_t k = 1; k <= max_k; ++k) c.overlap.push_back(top_k_overlap(orders, k));
  return c;
}

inline std::string comparison_csv(const ImportanceComparison& c) {
  std::string out = "feature";
  for (const auto& n : c.corpora) out += ",rank_" + n;
  out += "\n";
  for (std::size_t f = 0; f < c.features.size(); ++f) {
    out += c.features[f];
    for (const auto& r : c.ranks[f]) out += "," + (r ? std::to_string(*r) : std::string("NA"));
    out += "\n";
  }
  out += "\nk,top_k_overlap\n";
  for (std::size_t k = 0; k < c.overlap.size(); ++k) out += std::to_string(k + 1) + "," + std::to_string(c.overlap[k]) + "\n";
  return out;
}

}  // namespace refform
