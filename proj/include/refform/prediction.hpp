#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "refform/corpus.hpp"

namespace refform {

using Probs = std::array<double, kNumForms>;

struct Prediction {
  std::string doc_id;
  std::string mention_id;
  RefForm predicted = RefForm::Description;
  Probs probs{};

  bool operator==(const Prediction&) const = default;
};

// First maximum wins, so ties resolve in canonical label order.
inline std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

inline RefForm argmax_form(const Probs& p) { return kForms[argmax(p)]; }

inline double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

inline Probs softmax(const Probs& scores) {
  const double lse = log_sum_exp(scores);
  Probs p{};
  for (std::size_t k = 0; k < kNumForms; ++k) p[k] = std::exp(scores[k] - lse);
  return p;
}

inline Probs normalized(Probs p) {
  double s = 0.0;
  for (double v : p) s += v;
  if (s <= 0.0) return {1.0 / 3, 1.0 / 3, 1.0 / 3};
  for (double& v : p) v /= s;
  return p;
}

inline Prediction make_prediction(std::string doc_id, std::string mention_id, const Probs& probs) {
  return {std::move(doc_id), std::move(mention_id), argmax_form(probs), probs};
}

}  // namespace refform
