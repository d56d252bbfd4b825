#pragma once

#include <cmath>
#include <numeric>
#include <vector>

#include <json.hpp>

#include "refform/error.hpp"
#include "refform/features.hpp"
#include "refform/prediction.hpp"
#include "refform/random.hpp"

// Feed-forward network input -> 16 -> 8 -> 3 with ReLU hidden layers and a
// softmax output, trained by seeded mini-batch gradient descent.
namespace refform::mlp {

struct Params {
  std::vector<int> hidden = {16, 8};
  int epochs = 50;
  int batch = 50;
  double lr = 0.1;
  std::uint64_t seed = 13;

  void validate() const {
    require(!hidden.empty(), "mlp: need at least one hidden layer");
    for (int h : hidden) require(h >= 1, "mlp: hidden sizes must be >= 1");
    require(epochs >= 1, "mlp: epochs must be >= 1");
    require(batch >= 1, "mlp: batch must be >= 1");
    require(lr > 0.0, "mlp: lr must be > 0");
  }
};

struct Layer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> w;  // out x in, row-major
  std::vector<double> b;

  bool operator==(const Layer&) const = default;
};

struct Model {
  std::vector<Layer> layers;  // last layer produces class scores

  bool operator==(const Model&) const = default;
};

// Per-layer activations for one input; acts[0] is the input, acts.back()
// the raw output scores.
inline std::vector<std::vector<double>> forward(const Model& m, std::span<const double> x) {
  std::vector<std::vector<double>> acts;
  acts.emplace_back(x.begin(), x.end());
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const auto& L = m.layers[l];
    std::vector<double> z(L.out);
    for (std::size_t o = 0; o < L.out; ++o) {
      double s = L.b[o];
      for (std::size_t i = 0; i < L.in; ++i) s += L.w[o * L.in + i] * acts.back()[i];
      z[o] = (l + 1 < m.layers.size()) ? std::max(0.0, s) : s;
    }
    acts.push_back(std::move(z));
  }
  return acts;
}

inline Probs scores(const Model& m, std::span<const double> x) {
  const auto a = forward(m, x);
  return {a.back()[0], a.back()[1], a.back()[2]};
}

inline Model init(std::size_t input_dim, const Params& p) {
  Model m;
  Rng rng(p.seed, 0x317);
  std::size_t in = input_dim;
  std::vector<std::size_t> sizes(p.hidden.begin(), p.hidden.end());
  sizes.push_back(kNumForms);
  for (std::size_t out : sizes) {
    Layer L{in, out, std::vector<double>(in * out), std::vector<double>(out, 0.0)};
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));  // Glorot uniform
    for (double& w : L.w) w = rng.uniform(-limit, limit);
    m.layers.push_back(std::move(L));
    in = out;
  }
  return m;
}

// Mean cross-entropy over the given rows.
inline double loss(const Model& m, const Matrix& x, const std::vector<int>& y, std::span<const std::size_t> rows) {
  double total = 0.0;
  for (auto r : rows) {
    const Probs s = scores(m, x.row(r));
    total += log_sum_exp(s) - s[static_cast<std::size_t>(y[r])];
  }
  return total / static_cast<double>(rows.size());
}

// Gradient of `loss` with respect to every parameter, same layout as Model.
inline Model gradient(const Model& m, const Matrix& x, const std::vector<int>& y, std::span<const std::size_t> rows) {
  Model g = m;
  for (auto& L : g.layers) {
    std::fill(L.w.begin(), L.w.end(), 0.0);
    std::fill(L.b.begin(), L.b.end(), 0.0);
  }
  const double inv_n = 1.0 / static_cast<double>(rows.size());
  for (auto r : rows) {
    const auto acts = forward(m, x.row(r));
    Probs p = softmax({acts.back()[0], acts.back()[1], acts.back()[2]});
    std::vector<double> delta(p.begin(), p.end());
    delta[static_cast<std::size_t>(y[r])] -= 1.0;
    for (std::size_t l = m.layers.size(); l-- > 0;) {
      const auto& L = m.layers[l];
      auto& G = g.layers[l];
      const auto& input = acts[l];
      for (std::size_t o = 0; o < L.out; ++o) {
        G.b[o] += delta[o] * inv_n;
        for (std::size_t i = 0; i < L.in; ++i) G.w[o * L.in + i] += delta[o] * input[i] * inv_n;
      }
      if (l == 0) break;
      std::vector<double> prev(L.in, 0.0);
      for (std::size_t i = 0; i < L.in; ++i) {
        if (input[i] <= 0.0) continue;  // ReLU derivative
        for (std::size_t o = 0; o < L.out; ++o) prev[i] += L.w[o * L.in + i] * delta[o];
      }
      delta = std::move(prev);
    }
  }
  return g;
}

inline Model train(const EncodedTable& data, const Params& p) {
  p.validate();
  require(data.x.rows > 0, "mlp: empty training table");
  Model m = init(data.x.cols, p);
  Rng rng(p.seed, 0x5a1e);
  std::vector<std::size_t> order(data.x.rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(p.batch);
  for (int epoch = 0; epoch < p.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t b = 0; b < order.size(); b += batch) {
      const std::span<const std::size_t> rows(order.data() + b, std::min(batch, order.size() - b));
      const Model g = gradient(m, data.x, data.y, rows);
      for (std::size_t l = 0; l < m.layers.size(); ++l) {
        for (std::size_t i = 0; i < m.layers[l].w.size(); ++i) m.layers[l].w[i] -= p.lr * g.layers[l].w[i];
        for (std::size_t i = 0; i < m.layers[l].b.size(); ++i) m.layers[l].b[i] -= p.lr * g.layers[l].b[i];
      }
    }
    const double l = loss(m, data.x, data.y, order);
    if (!std::isfinite(l))
      fail("mlp: loss became non-finite at epoch " + std::to_string(epoch + 1) + "; use a smaller lr");
  }
  return m;
}

inline Probs predict_row(const Model& m, std::span<const double> x) { return softmax(scores(m, x)); }

inline nlohmann::json to_json(const Model& m) {
  auto layers = nlohmann::json::array();
  for (const auto& L : m.layers) layers.push_back({{"in", L.in}, {"out", L.out}, {"w", L.w}, {"b", L.b}});
  return {{"layers", std::move(layers)}};
}

inline Model from_json(const nlohmann::json& j) {
  Model m;
  for (const auto& lj : j.at("layers")) {
    Layer L{lj.at("in").get<std::size_t>(), lj.at("out").get<std::size_t>(), lj.at("w").get<std::vector<double>>(),
            lj.at("b").get<std::vector<double>>()};
    require(L.w.size() == L.in * L.out && L.b.size() == L.out, "mlp: inconsistent layer shape");
    m.layers.push_back(std::move(L));
  }
  require(!m.layers.empty() && m.layers.back().out == kNumForms, "mlp: model must end in a 3-way output layer");
  return m;
}

}  // namespace refform::mlp
