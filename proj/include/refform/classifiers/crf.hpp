#pragma once

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "refform/error.hpp"
#include "refform/features.hpp"
#include "refform/prediction.hpp"
#include "refform/random.hpp"

// Linear-chain CRF over the three labels: unary scores linear in the encoded
// features plus a 3x3 transition matrix. Trained by SGD over sequences on
// the L2-regularized negative log-likelihood.
namespace refform::crf {

enum class Decoding { Posterior, Viterbi };

struct Params {
  int iterations = 3000;  // passes over the training sequences
  double lr = 0.1;
  double l2 = 1e-4;
  double decay = 0.01;  // lr_epoch = lr / (1 + decay * epoch)
  std::uint64_t seed = 7;
  Decoding decoding = Decoding::Posterior;

  void validate() const {
    require(iterations >= 1, "crf: iterations must be >= 1");
    require(lr > 0.0, "crf: lr must be > 0");
    require(l2 >= 0.0, "crf: l2 must be >= 0");
    require(decay >= 0.0, "crf: decay must be >= 0");
  }
};

using Transitions = std::array<std::array<double, kNumForms>, kNumForms>;  // [prev][next]

struct Model {
  std::size_t dim = 0;
  std::vector<double> weights;  // kNumForms x dim
  Probs bias{};
  Transitions transitions{};
  Decoding decoding = Decoding::Posterior;

  bool operator==(const Model&) const = default;
};

inline Probs unary(const Model& m, std::span<const double> x) {
  Probs s = m.bias;
  for (std::size_t k = 0; k < kNumForms; ++k)
    for (std::size_t j = 0; j < m.dim; ++j) s[k] += m.weights[k * m.dim + j] * x[j];
  return s;
}

// ---------------------------------------------------------------------------
// Inference on a chain given per-position unary scores.

// alpha[t][y]: log-sum of all prefixes ending in y at t (unary at t included).
inline std::vector<Probs> forward(const std::vector<Probs>& u, const Transitions& tr) {
  std::vector<Probs> a(u.size());
  if (u.empty()) return a;
  a[0] = u[0];
  for (std::size_t t = 1; t < u.size(); ++t) {
    for (std::size_t y = 0; y < kNumForms; ++y) {
      Probs terms{};
      for (std::size_t p = 0; p < kNumForms; ++p) terms[p] = a[t - 1][p] + tr[p][y];
      a[t][y] = log_sum_exp(terms) + u[t][y];
    }
  }
  return a;
}

// beta[t][y]: log-sum of all suffixes after t given y at t (unary at t excluded).
inline std::vector<Probs> backward(const std::vector<Probs>& u, const Transitions& tr) {
  std::vector<Probs> b(u.size());
  if (u.empty()) return b;
  b.back() = {0.0, 0.0, 0.0};
  for (std::size_t t = u.size() - 1; t-- > 0;) {
    for (std::size_t y = 0; y < kNumForms; ++y) {
      Probs terms{};
      for (std::size_t n = 0; n < kNumForms; ++n) terms[n] = tr[y][n] + u[t + 1][n] + b[t + 1][n];
      b[t][y] = log_sum_exp(terms);
    }
  }
  return b;
}

inline double log_partition(const std::vector<Probs>& u, const Transitions& tr) {
  return log_sum_exp(forward(u, tr).back());
}

inline double log_partition_backward(const std::vector<Probs>& u, const Transitions& tr) {
  const auto b = backward(u, tr);
  Probs terms{};
  for (std::size_t y = 0; y < kNumForms; ++y) terms[y] = u[0][y] + b[0][y];
  return log_sum_exp(terms);
}

inline double path_score(const std::vector<Probs>& u, const Transitions& tr, const std::vector<int>& labels) {
  double s = 0.0;
  for (std::size_t t = 0; t < u.size(); ++t) {
    s += u[t][static_cast<std::size_t>(labels[t])];
    if (t > 0) s += tr[static_cast<std::size_t>(labels[t - 1])][static_cast<std::size_t>(labels[t])];
  }
  return s;
}

inline std::vector<Probs> marginals(const std::vector<Probs>& u, const Transitions& tr) {
  const auto a = forward(u, tr);
  const auto b = backward(u, tr);
  const double log_z = log_sum_exp(a.back());
  std::vector<Probs> out(u.size());
  for (std::size_t t = 0; t < u.size(); ++t)
    for (std::size_t y = 0; y < kNumForms; ++y) out[t][y] = std::exp(a[t][y] + b[t][y] - log_z);
  return out;
}

struct ViterbiResult {
  std::vector<int> path;
  double score = 0.0;
  std::vector<Probs> max_marginals;  // best score of any path through (t, y)
};

// Best-scoring label sequence; backpointer ties prefer the canonical order.
inline ViterbiResult viterbi(const std::vector<Probs>& u, const Transitions& tr) {
  const std::size_t n = u.size();
  ViterbiResult r;
  if (n == 0) return r;
  std::vector<Probs> delta(n), suffix(n);
  std::vector<std::array<int, kNumForms>> back(n);
  delta[0] = u[0];
  for (std::size_t t = 1; t < n; ++t) {
    for (std::size_t y = 0; y < kNumForms; ++y) {
      std::size_t best = 0;
      for (std::size_t p = 1; p < kNumForms; ++p)
        if (delta[t - 1][p] + tr[p][y] > delta[t - 1][best] + tr[best][y]) best = p;
      delta[t][y] = delta[t - 1][best] + tr[best][y] + u[t][y];
      back[t][y] = static_cast<int>(best);
    }
  }
  suffix[n - 1] = {0.0, 0.0, 0.0};
  for (std::size_t t = n - 1; t-- > 0;) {
    for (std::size_t y = 0; y < kNumForms; ++y) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t nx = 0; nx < kNumForms; ++nx) best = std::max(best, tr[y][nx] + u[t + 1][nx] + suffix[t + 1][nx]);
      suffix[t][y] = best;
    }
  }
  r.path.assign(n, 0);
  r.path[n - 1] = static_cast<int>(argmax(delta[n - 1]));
  r.score = delta[n - 1][static_cast<std::size_t>(r.path[n - 1])];
  for (std::size_t t = n - 1; t > 0; --t) r.path[t - 1] = back[t][static_cast<std::size_t>(r.path[t])];
  r.max_marginals.resize(n);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t y = 0; y < kNumForms; ++y) r.max_marginals[t][y] = delta[t][y] + suffix[t][y];
  return r;
}

// ---------------------------------------------------------------------------
// Training

using Sequence = std::vector<std::size_t>;  // row indices, in chain order

inline std::vector<Probs> unaries(const Model& m, const Matrix& x, const Sequence& seq) {
  std::vector<Probs> u;
  u.reserve(seq.size());
  for (auto r : seq) u.push_back(unary(m, x.row(r)));
  return u;
}

// Negative log-likelihood of one labelled sequence (no regularizer).
inline double sequence_nll(const Model& m, const Matrix& x, const std::vector<int>& y, const Sequence& seq) {
  const auto u = unaries(m, x, seq);
  std::vector<int> labels;
  for (auto r : seq) labels.push_back(y[r]);
  return log_partition(u, m.transitions) - path_score(u, m.transitions, labels);
}

struct Gradient {
  std::vector<double> weights;
  Probs bias{};
  Transitions transitions{};
};

// Gradient of sequence_nll: expected minus observed feature counts.
inline Gradient sequence_gradient(const Model& m, const Matrix& x, const std::vector<int>& y, const Sequence& seq) {
  Gradient g{std::vector<double>(m.weights.size(), 0.0), {}, {}};
  const auto u = unaries(m, x, seq);
  const auto a = forward(u, m.transitions);
  const auto b = backward(u, m.transitions);
  const double log_z = log_sum_exp(a.back());
  for (std::size_t t = 0; t < seq.size(); ++t) {
    const auto row = x.row(seq[t]);
    const auto gold = static_cast<std::size_t>(y[seq[t]]);
    for (std::size_t k = 0; k < kNumForms; ++k) {
      const double coef = std::exp(a[t][k] + b[t][k] - log_z) - (k == gold ? 1.0 : 0.0);
      g.bias[k] += coef;
      for (std::size_t j = 0; j < m.dim; ++j) g.weights[k * m.dim + j] += coef * row[j];
    }
    if (t == 0) continue;
    const auto prev_gold = static_cast<std::size_t>(y[seq[t - 1]]);
    for (std::size_t p = 0; p < kNumForms; ++p)
      for (std::size_t n = 0; n < kNumForms; ++n)
        g.transitions[p][n] += std::exp(a[t - 1][p] + m.transitions[p][n] + u[t][n] + b[t][n] - log_z);
    g.transitions[prev_gold][gold] -= 1.0;
  }
  return g;
}

inline std::vector<Sequence> table_sequences(const FeatureTable& t) {
  std::vector<Sequence> out;
  for (auto [b, e] : t.sequences()) {
    Sequence s;
    for (auto i = b; i < e; ++i) s.push_back(i);
    out.push_back(std::move(s));
  }
  return out;
}

inline Model train(const Matrix& x, const std::vector<int>& y, const std::vector<Sequence>& seqs, const Params& p) {
  p.validate();
  Model m;
  m.dim = x.cols;
  m.weights.assign(kNumForms * m.dim, 0.0);
  m.decoding = p.decoding;
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    if (seqs[i].empty()) {
      std::clog << "warning: crf: skipping empty sequence " << i << "\n";
      continue;
    }
    order.push_back(i);
  }
  require(!order.empty(), "crf: no non-empty training sequences");
  const double reg = p.l2 / static_cast<double>(order.size());
  Rng rng(p.seed, 0xc7f);
  for (int epoch = 0; epoch < p.iterations; ++epoch) {
    rng.shuffle(order);
    const double lr = p.lr / (1.0 + p.decay * epoch);
    for (auto si : order) {
      const Gradient g = sequence_gradient(m, x, y, seqs[si]);
      for (std::size_t i = 0; i < m.weights.size(); ++i) m.weights[i] -= lr * (g.weights[i] + reg * m.weights[i]);
      for (std::size_t k = 0; k < kNumForms; ++k) m.bias[k] -= lr * g.bias[k];
      for (std::size_t a = 0; a < kNumForms; ++a)
        for (std::size_t b = 0; b < kNumForms; ++b)
          m.transitions[a][b] -= lr * (g.transitions[a][b] + reg * m.transitions[a][b]);
    }
    if (!std::all_of(m.weights.begin(), m.weights.end(), [](double w) { return std::isfinite(w); }))
      fail("crf: parameters became non-finite at iteration " + std::to_string(epoch + 1) + "; use a smaller lr");
  }
  return m;
}

inline Model train(const EncodedTable& data, const std::vector<Sequence>& seqs, const Params& p) {
  require(data.x.rows > 0, "crf: empty training table");
  return train(data.x, data.y, seqs, p);
}

// Per-position label distributions for one sequence. Posterior decoding uses
// the marginals; Viterbi decoding reports normalized max-marginals, whose
// argmax follows the best path.
inline std::vector<Probs> predict_sequence(const Model& m, const Matrix& x, const Sequence& seq) {
  const auto u = unaries(m, x, seq);
  if (m.decoding == Decoding::Posterior) return marginals(u, m.transitions);
  const auto v = viterbi(u, m.transitions);
  std::vector<Probs> out;
  for (const auto& mm : v.max_marginals) out.push_back(softmax(mm));
  return out;
}

inline nlohmann::json to_json(const Model& m) {
  return {{"dim", m.dim},
          {"weights", m.weights},
          {"bias", m.bias},
          {"transitions", m.transitions},
          {"decoding", m.decoding == Decoding::Posterior ? "posterior" : "viterbi"}};
}

inline Decoding parse_decoding(const std::string& s) {
  if (s == "posterior") return Decoding::Posterior;
  if (s == "viterbi") return Decoding::Viterbi;
  fail("crf: unknown decoding '" + s + "'");
}

inline Model from_json(const nlohmann::json& j) {
  Model m;
  m.dim = j.at("dim").get<std::size_t>();
  m.weights = j.at("weights").get<std::vector<double>>();
  m.bias = j.at("bias").get<Probs>();
  m.transitions = j.at("transitions").get<Transitions>();
  m.decoding = parse_decoding(j.at("decoding").get<std::string>());
  require(m.weights.size() == kNumForms * m.dim, "crf: inconsistent model file");
  return m;
}

}  // namespace refform::crf
