#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "refform/error.hpp"
#include "refform/evaluation.hpp"
#include "refform/io.hpp"
#include "refform/stat_analysis.hpp"

// Cross-model, cross-corpus analysis over a table of scores.
namespace refform {

inline constexpr std::array<const char*, 3> kMetrics = {"accuracy", "macro_f1", "weighted_f1"};

// Scores are percentages, as printed in result tables.
struct ScoreRow {
  std::string model;
  std::string corpus;
  long long n = 0;  // test-set size
  std::array<double, 3> values{};  // accuracy, macro_f1, weighted_f1
};

inline std::size_t metric_index(const std::string& metric) {
  for (std::size_t i = 0; i < kMetrics.size(); ++i)
    if (metric == kMetrics[i]) return i;
  fail("unknown metric '" + metric + "'");
}

inline std::vector<ScoreRow> parse_scores_csv(const std::vector<std::string>& lines,
                                              const std::string& source = "<scores>") {
  const std::vector<std::string> header = {"model", "corpus", "n", "accuracy", "macro_f1", "weighted_f1"};
  require(!lines.empty(), source + ": empty scores file");
  require(io::split(io::trim(lines[0]), ',') == header, source + ": header must be " + io::join(header, ","));
  std::vector<ScoreRow> rows;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    const auto line = io::trim(lines[ln]);
    if (line.empty() || line[0] == '#') continue;
    const std::string where = source + ":" + std::to_string(ln + 1);
    const auto cols = io::split(line, ',');
    require(cols.size() == header.size(), where + ": expected 6 columns");
    ScoreRow r{cols[0], cols[1], 0, {}};
    try {
      r.n = std::stoll(cols[2]);
      for (std::size_t k = 0; k < 3; ++k) r.values[k] = std::stod(cols[3 + k]);
    } catch (const std::exception&) {
      fail(where + ": non-numeric value");
    }
    require(r.n >= 1, where + ": n must be >= 1");
    rows.push_back(std::move(r));
  }
  require(!rows.empty(), source + ": no score rows");
  return rows;
}

inline ScoreRow score_row_from_report(const std::string& model, const std::string& corpus, const EvalReport& r) {
  return {model, corpus, static_cast<long long>(r.n), {100.0 * r.accuracy, 100.0 * r.macro_f1, 100.0 * r.weighted_f1}};
}

// Dense model x corpus view; both axes keep first-seen order.
struct ScoreTable {
  std::vector<std::string> models;
  std::vector<std::string> corpora;
  std::map<std::pair<std::string, std::string>, ScoreRow> cells;

  const ScoreRow& at(const std::string& model, const std::string& corpus) const {
    auto it = cells.find({model, corpus});
    require(it != cells.end(), "no score for model " + model + " on corpus " + corpus);
    return it->second;
  }

  std::vector<double> column(const std::string& corpus, std::size_t metric) const {
    std::vector<double> v;
    for (const auto& m : models) v.push_back(at(m, corpus).values[metric]);
    return v;
  }
};

inline ScoreTable score_table(const std::vector<ScoreRow>& rows) {
  ScoreTable t;
  for (const auto& r : rows) {
    if (std::find(t.models.begin(), t.models.end(), r.model) == t.models.end()) t.models.push_back(r.model);
    if (std::find(t.corpora.begin(), t.corpora.end(), r.corpus) == t.corpora.end()) t.corpora.push_back(r.corpus);
    require(t.cells.emplace(std::make_pair(r.model, r.corpus), r).second,
            "duplicate score for model " + r.model + " on corpus " + r.corpus);
  }
  for (const auto& m : t.models)
    for (const auto& c : t.corpora) t.at(m, c);
  return t;
}

struct CorrelationCell {
  std::string corpus_a;
  std::string corpus_b;
  std::array<stats::CorrelationResult, 3> by_metric;
};

// Spearman over models for every pair of corpora.
inline std::vector<CorrelationCell> correlation_table(const ScoreTable& t) {
  require(t.corpora.size() >= 2, "correlation needs scores on at least 2 corpora");
  std::vector<CorrelationCell> out;
  for (std::size_t a = 0; a < t.corpora.size(); ++a)
    for (std::size_t b = a + 1; b < t.corpora.size(); ++b) {
      CorrelationCell cell{t.corpora[a], t.corpora[b], {}};
      for (std::size_t k = 0; k < 3; ++k)
        cell.by_metric[k] = stats::spearman(t.column(t.corpora[a], k), t.column(t.corpora[b], k));
      out.push_back(std::move(cell));
    }
  return out;
}

inline std::string correlation_csv(const std::vector<CorrelationCell>& cells) {
  std::string out = "corpora,stat,accuracy,macro_f1,weighted_f1\n";
  for (const auto& c : cells) {
    const std::string pair = c.corpus_a + "/" + c.corpus_b;
    out += pair + ",r_s";
    for (const auto& r : c.by_metric) out += "," + io::fixed(r.r_s, 4);
    out += "\n" + pair + ",p";
    for (const auto& r : c.by_metric) out += "," + io::fixed(r.p_value, 4);
    out += "\n";
  }
  return out;
}

struct BFCell {
  std::string corpus;
  std::string model_a;
  std::string model_b;
  stats::BFResult result;
};

// Pairwise accuracy Bayes factors per corpus; counts are round(acc * n).
inline std::vector<BFCell> bf_matrix(const ScoreTable& t, stats::BetaPrior prior = {}) {
  require(t.models.size() >= 2, "bayes factor comparison needs at least 2 models");
  std::vector<BFCell> out;
  for (const auto& c : t.corpora)
    for (std::size_t a = 0; a < t.models.size(); ++a)
      for (std::size_t b = a + 1; b < t.models.size(); ++b) {
        const auto& ra = t.at(t.models[a], c);
        const auto& rb = t.at(t.models[b], c);
        const auto ka = stats::count_from_accuracy(ra.values[0] / 100.0, ra.n);
        const auto kb = stats::count_from_accuracy(rb.values[0] / 100.0, rb.n);
        out.push_back({c, t.models[a], t.models[b], stats::bayes_factor_accuracy(ka, ra.n, kb, rb.n, prior)});
      }
  return out;
}

inline std::string bf_csv(const std::vector<BFCell>& cells) {
  std::string out = "corpus,model_a,model_b,k_a,n_a,k_b,n_b,bf10,log_bf10,prob_diff,direction,band\n";
  for (const auto& c : cells) {
    const auto& r = c.result;
    out += c.corpus + "," + c.model_a + "," + c.model_b + "," + std::to_string(r.k1) + "," + std::to_string(r.n1) +
           "," + std::to_string(r.k2) + "," + std::to_string(r.n2) + "," +
           (std::isfinite(r.bf10) ? io::fixed(r.bf10, 6) : std::string("inf")) + "," + io::fixed(r.log_bf10, 6) +
           "," + io::fixed(r.prob_diff, 6) + "," + r.direction + "," + r.band + "\n";
  }
  return out;
}

// One ranking line per metric and corpus, e.g. "accuracy msr: A > B = C".
inline std::string rankings_text(const ScoreTable& t) {
  std::string out;
  for (std::size_t k = 0; k < 3; ++k)
    for (const auto& c : t.corpora) {
      std::vector<std::pair<std::string, double>> scores;
      for (const auto& m : t.models) scores.emplace_back(m, t.at(m, c).values[k]);
      out += std::string(kMetrics[k]) + " " + c + ": " + rank_models(scores, kMetrics[k]).to_string() + "\n";
    }
  return out;
}

}  // namespace refform
