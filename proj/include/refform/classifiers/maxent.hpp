#pragma once

#include <cmath>
#include <vector>

#include <json.hpp>

#include "refform/error.hpp"
#include "refform/features.hpp"
#include "refform/prediction.hpp"

// Multinomial logistic regression trained by full-batch gradient descent on
// the L2-regularized mean cross-entropy.
namespace refform::maxent {

struct Params {
  double lr = 0.2;
  int epochs = 1000;
  double l2 = 1e-4;

  void validate() const {
    require(lr > 0.0, "maxent: lr must be > 0");
    require(epochs >= 1, "maxent: epochs must be >= 1");
    require(l2 >= 0.0, "maxent: l2 must be >= 0");
  }
};

struct Model {
  std::size_t dim = 0;
  std::vector<double> weights;  // kNumForms x dim, row-major
  Probs bias{};
  std::vector<double> loss_history;

  Probs scores(std::span<const double> x) const {
    Probs s = bias;
    for (std::size_t k = 0; k < kNumForms; ++k)
      for (std::size_t j = 0; j < dim; ++j) s[k] += weights[k * dim + j] * x[j];
    return s;
  }

  bool operator==(const Model&) const = default;
};

// (1/n) sum -log p(y|x) + (l2/2) ||W||^2; the bias is not regularized.
inline double loss(const Model& m, const Matrix& x, const std::vector<int>& y, double l2) {
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows; ++i) {
    const Probs s = m.scores(x.row(i));
    total += log_sum_exp(s) - s[static_cast<std::size_t>(y[i])];
  }
  double reg = 0.0;
  for (double w : m.weights) reg += w * w;
  return total / static_cast<double>(x.rows) + 0.5 * l2 * reg;
}

struct Gradient {
  std::vector<double> weights;
  Probs bias{};
};

inline Gradient gradient(const Model& m, const Matrix& x, const std::vector<int>& y, double l2) {
  Gradient g{std::vector<double>(m.weights.size(), 0.0), {}};
  const double inv_n = 1.0 / static_cast<double>(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const auto row = x.row(i);
    Probs p = softmax(m.scores(row));
    p[static_cast<std::size_t>(y[i])] -= 1.0;
    for (std::size_t k = 0; k < kNumForms; ++k) {
      g.bias[k] += p[k] * inv_n;
      for (std::size_t j = 0; j < m.dim; ++j) g.weights[k * m.dim + j] += p[k] * row[j] * inv_n;
    }
  }
  for (std::size_t i = 0; i < m.weights.size(); ++i) g.weights[i] += l2 * m.weights[i];
  return g;
}

inline Model train(const EncodedTable& data, const Params& p) {
  p.validate();
  require(data.x.rows > 0, "maxent: empty training table");
  Model m;
  m.dim = data.x.cols;
  m.weights.assign(kNumForms * m.dim, 0.0);
  for (int epoch = 0; epoch < p.epochs; ++epoch) {
    const Gradient g = gradient(m, data.x, data.y, p.l2);
    for (std::size_t i = 0; i < m.weights.size(); ++i) m.weights[i] -= p.lr * g.weights[i];
    for (std::size_t k = 0; k < kNumForms; ++k) m.bias[k] -= p.lr * g.bias[k];
    const double l = loss(m, data.x, data.y, p.l2);
    if (!std::isfinite(l))
      fail("maxent: loss became non-finite at epoch " + std::to_string(epoch + 1) + "; use a smaller lr");
    m.loss_history.push_back(l);
  }
  return m;
}

inline Probs predict_row(const Model& m, std::span<const double> x) { return softmax(m.scores(x)); }

inline nlohmann::json to_json(const Model& m) {
  return {{"dim", m.dim}, {"weights", m.weights}, {"bias", m.bias}};
}

inline Model from_json(const nlohmann::json& j) {
  Model m;
  m.dim = j.at("dim").get<std::size_t>();
  m.weights = j.at("weights").get<std::vector<double>>();
  m.bias = j.at("bias").get<Probs>();
  require(m.weights.size() == kNumForms * m.dim, "maxent: inconsistent model file");
  return m;
}

}  // namespace refform::maxent
