#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "refform/corpus.hpp"
#include "refform/error.hpp"
#include "refform/io.hpp"
#include "refform/prediction.hpp"

namespace refform {

struct GoldLabel {
  std::string doc_id;
  std::string mention_id;
  RefForm form = RefForm::Name;
};

// Gold labels of every classifiable mention, optionally without the first
// mention of each chain.
inline std::vector<GoldLabel> gold_labels(const Corpus& corpus, bool subsequent_only = false) {
  std::vector<GoldLabel> out;
  for (const auto& d : corpus.documents) {
    std::set<std::string> seen_chains;
    for (const auto& m : d.mentions) {
      const bool first = seen_chains.insert(m.chain_id).second;
      if (m.form == RefForm::Empty || (subsequent_only && first)) continue;
      out.push_back({d.doc_id, m.mention_id, m.form});
    }
  }
  return out;
}

// rows: gold, columns: predicted, both in canonical order.
using Confusion = std::array<std::array<std::size_t, kNumForms>, kNumForms>;

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct EvalReport {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double weighted_f1 = 0.0;
  std::array<ClassScores, kNumForms> per_class{};
  std::size_t n = 0;
  Confusion confusion{};
};

// 0/0 is defined as 0 for precision, recall and F1.
inline double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

inline double f1_score(double precision, double recall) {
  return ratio(2.0 * precision * recall, precision + recall);
}

namespace detail {

inline std::string mention_key(const std::string& doc_id, const std::string& mention_id) {
  return doc_id + '\x1f' + mention_id;
}

inline std::string list_ids(const std::vector<std::string>& ids) {
  constexpr std::size_t kShown = 20;
  std::vector<std::string> shown(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(std::min(ids.size(), kShown)));
  std::string s = io::join(shown, ", ");
  if (ids.size() > kShown) s += ", ... (" + std::to_string(ids.size()) + " total)";
  return s;
}

}  // namespace detail

inline Confusion confusion_matrix(const std::vector<Prediction>& preds, const std::vector<GoldLabel>& gold) {
  std::map<std::string, RefForm> by_key;
  std::vector<std::string> dup, extra, missing;
  for (const auto& p : preds) {
    const auto key = detail::mention_key(p.doc_id, p.mention_id);
    if (!by_key.emplace(key, p.predicted).second) dup.push_back(p.doc_id + "/" + p.mention_id);
  }
  if (!dup.empty()) fail("duplicate predictions for mention_id(s): " + detail::list_ids(dup));
  Confusion cm{};
  std::set<std::string> gold_keys;
  for (const auto& g : gold) {
    const auto key = detail::mention_key(g.doc_id, g.mention_id);
    gold_keys.insert(key);
    auto it = by_key.find(key);
    if (it == by_key.end()) {
      missing.push_back(g.doc_id + "/" + g.mention_id);
      continue;
    }
    ++cm[form_index(g.form)][form_index(it->second)];
  }
  if (!missing.empty()) fail("missing predictions for mention_id(s): " + detail::list_ids(missing));
  for (const auto& p : preds)
    if (!gold_keys.count(detail::mention_key(p.doc_id, p.mention_id))) extra.push_back(p.doc_id + "/" + p.mention_id);
  if (!extra.empty()) fail("predictions for mention_id(s) absent from gold: " + detail::list_ids(extra));
  return cm;
}

inline EvalReport report_from_confusion(const Confusion& cm) {
  EvalReport r;
  r.confusion = cm;
  std::size_t correct = 0;
  for (std::size_t g = 0; g < kNumForms; ++g)
    for (std::size_t p = 0; p < kNumForms; ++p) {
      r.n += cm[g][p];
      if (g == p) correct += cm[g][p];
    }
  r.accuracy = ratio(static_cast<double>(correct), static_cast<double>(r.n));
  for (std::size_t k = 0; k < kNumForms; ++k) {
    std::size_t row = 0, col = 0;
    for (std::size_t j = 0; j < kNumForms; ++j) {
      row += cm[k][j];
      col += cm[j][k];
    }
    auto& c = r.per_class[k];
    c.support = row;
    c.precision = ratio(static_cast<double>(cm[k][k]), static_cast<double>(col));
    c.recall = ratio(static_cast<double>(cm[k][k]), static_cast<double>(row));
    c.f1 = f1_score(c.precision, c.recall);
    r.macro_f1 += c.f1 / static_cast<double>(kNumForms);
    r.weighted_f1 += c.f1 * ratio(static_cast<double>(row), static_cast<double>(r.n));
  }
  return r;
}

inline EvalReport evaluate(const std::vector<Prediction>& preds, const std::vector<GoldLabel>& gold) {
  return report_from_confusion(confusion_matrix(preds, gold));
}

inline nlohmann::ordered_json report_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["accuracy"] = r.accuracy;
  j["macro_f1"] = r.macro_f1;
  j["weighted_f1"] = r.weighted_f1;
  nlohmann::ordered_json pc;
  for (std::size_t k = 0; k < kNumForms; ++k) {
    const auto& c = r.per_class[k];
    pc[std::string(to_string(kForms[k]))] = {
        {"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1}, {"support", c.support}};
  }
  j["per_class"] = std::move(pc);
  j["n"] = r.n;
  j["confusion"] = r.confusion;
  return j;
}

inline EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  try {
    r.accuracy = j.at("accuracy").get<double>();
    r.macro_f1 = j.at("macro_f1").get<double>();
    r.weighted_f1 = j.at("weighted_f1").get<double>();
    r.n = j.at("n").get<std::size_t>();
    for (std::size_t k = 0; k < kNumForms; ++k) {
      const auto& c = j.at("per_class").at(std::string(to_string(kForms[k])));
      r.per_class[k] = {c.at("precision").get<double>(), c.at("recall").get<double>(), c.at("f1").get<double>(),
                        c.at("support").get<std::size_t>()};
    }
    if (j.contains("confusion")) r.confusion = j.at("confusion").get<Confusion>();
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("malformed evaluation report: ") + e.what());
  }
  return r;
}

// Plain-text rendering: overall scores, then per-class P/R/F, all x100.
inline std::string report_table(const EvalReport& r) {
  auto pct = [](double v) { return io::fixed(100.0 * v, 2); };
  std::string out = "Acc.    F1      wF1     n\n";
  out += pct(r.accuracy) + "   " + pct(r.macro_f1) + "   " + pct(r.weighted_f1) + "   " + std::to_string(r.n) + "\n\n";
  out += "Category       P       R       F       support\n";
  for (std::size_t k = 0; k < kNumForms; ++k) {
    const auto& c = r.per_class[k];
    std::string name(to_string(kForms[k]));
    name.resize(15, ' ');
    out += name + pct(c.precision) + "   " + pct(c.recall) + "   " + pct(c.f1) + "   " + std::to_string(c.support) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Model ranking

struct RankedModel {
  std::string name;
  double score = 0.0;
  int rank = 0;  // competition ranking: exact ties share the rank
};

struct Ranking {
  std::string metric;
  std::vector<RankedModel> entries;

  // "A > B = C > D"; tied models keep their input order.
  std::string to_string() const {
    std::string s;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (i) s += entries[i].rank == entries[i - 1].rank ? " = " : " > ";
      s += entries[i].name;
    }
    return s;
  }
};

inline Ranking rank_models(const std::vector<std::pair<std::string, double>>& scores, std::string metric) {
  require(scores.size() >= 2, "rank_models: need at least 2 models");
  Ranking r{std::move(metric), {}};
  for (const auto& [name, v] : scores) r.entries.push_back({name, v, 0});
  std::stable_sort(r.entries.begin(), r.entries.end(),
                   [](const RankedModel& a, const RankedModel& b) { return a.score > b.score; });
  for (std::size_t i = 0; i < r.entries.size(); ++i)
    r.entries[i].rank =
        (i > 0 && r.entries[i].score == r.entries[i - 1].score) ? r.entries[i - 1].rank : static_cast<int>(i + 1);
  return r;
}

}  // namespace refform
