#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "refform/error.hpp"
#include "refform/features.hpp"
#include "refform/io.hpp"
#include "refform/prediction.hpp"

// Interchange TSV for predictions. Any model, including ones trained outside
// this toolkit, is scored by emitting this format.
namespace refform {

inline const std::vector<std::string>& prediction_header() {
  static const std::vector<std::string> h = {"doc_id",        "mention_id", "gold",     "predicted",
                                             "p_description", "p_name",     "p_pronoun"};
  return h;
}

struct PredictionRow {
  Prediction prediction;
  RefForm gold = RefForm::Name;
};

inline std::string prediction_tsv(const std::vector<Prediction>& preds, const FeatureTable& table) {
  require(preds.size() == table.rows.size(), "prediction count does not match the feature table");
  std::string out = io::join(prediction_header(), "\t") + "\n";
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& p = preds[i];
    out += p.doc_id + "\t" + p.mention_id + "\t" + std::string(to_string(table.rows[i].gold)) + "\t" +
           std::string(to_string(p.predicted));
    for (double v : p.probs) out += "\t" + io::fixed(v, 6);
    out += "\n";
  }
  return out;
}

inline std::vector<PredictionRow> parse_prediction_tsv(const std::vector<std::string>& lines,
                                                       const std::string& source = "<predictions>") {
  require(!lines.empty(), source + ": empty prediction file");
  require(io::split(lines[0], '\t') == prediction_header(),
          source + ": header must be " + io::join(prediction_header(), ","));
  std::vector<PredictionRow> rows;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (io::trim(lines[ln]).empty()) continue;
    const std::string where = source + ":" + std::to_string(ln + 1);
    const auto cols = io::split(lines[ln], '\t');
    require(cols.size() == prediction_header().size(), where + ": expected 7 columns");
    auto gold = parse_form(cols[2]);
    auto pred = parse_form(cols[3]);
    require(gold && *gold != RefForm::Empty, where + ": bad gold label '" + cols[2] + "'");
    require(pred && *pred != RefForm::Empty, where + ": bad predicted label '" + cols[3] + "'");
    PredictionRow row;
    row.gold = *gold;
    row.prediction.doc_id = cols[0];
    row.prediction.mention_id = cols[1];
    row.prediction.predicted = *pred;
    double sum = 0.0;
    for (std::size_t k = 0; k < kNumForms; ++k) {
      double v = 0.0;
      try {
        std::size_t used = 0;
        v = std::stod(cols[4 + k], &used);
        require(used == cols[4 + k].size(), "");
      } catch (const std::exception&) {
        fail(where + ": bad probability '" + cols[4 + k] + "'");
      }
      require(std::isfinite(v) && v >= 0.0, where + ": probabilities must be finite and non-negative");
      row.prediction.probs[k] = v;
      sum += v;
    }
    require(std::abs(sum - 1.0) <= 1e-4, where + ": probabilities sum to " + io::fixed(sum, 6) + ", not 1");
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace refform
