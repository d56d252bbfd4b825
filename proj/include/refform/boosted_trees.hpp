#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <json.hpp>

#include "refform/error.hpp"
#include "refform/features.hpp"
#include "refform/prediction.hpp"
#include "refform/random.hpp"

// Gradient-boosted regression trees on the multiclass softmax objective,
// one tree per class per round, with second-order (Newton) leaf weights.
namespace refform::gbt {

struct Params {
  double learning_rate = 0.05;
  double min_split_loss = 0.01;  // gamma
  int max_depth = 5;
  double subsample = 0.5;
  int n_rounds = 100;
  double lambda = 1.0;            // L2 on leaf weights
  double min_child_weight = 1.0;  // minimum hessian sum per child
  std::uint64_t seed = 7;

  void validate() const {
    require(learning_rate > 0.0, "gbt: learning_rate must be > 0");
    require(min_split_loss >= 0.0, "gbt: min_split_loss must be >= 0");
    require(max_depth >= 1, "gbt: max_depth must be >= 1");
    require(subsample > 0.0 && subsample <= 1.0, "gbt: subsample must lie in (0, 1]");
    require(n_rounds >= 1, "gbt: n_rounds must be >= 1");
    require(lambda >= 0.0, "gbt: lambda must be >= 0");
    require(min_child_weight >= 0.0, "gbt: min_child_weight must be >= 0");
  }
};

struct Node {
  int column = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output, already scaled by the learning rate

  bool is_leaf() const { return column < 0; }
  bool operator==(const Node&) const = default;
};

struct RegTree {
  std::vector<Node> nodes;

  double eval(std::span<const double> x) const {
    const Node* n = &nodes[0];
    while (!n->is_leaf()) n = &nodes[static_cast<std::size_t>(x[static_cast<std::size_t>(n->column)] <= n->threshold ? n->left : n->right)];
    return n->value;
  }

  bool operator==(const RegTree&) const = default;
};

struct Model {
  std::vector<RegTree> trees;  // round-major: trees[round * kNumForms + class]

  std::size_t rounds() const { return trees.size() / kNumForms; }

  Probs margins(std::span<const double> x) const {
    Probs m{};
    for (std::size_t i = 0; i < trees.size(); ++i) m[i % kNumForms] += trees[i].eval(x);
    return m;
  }

  // Columns referenced by any split.
  std::vector<bool> used_columns(std::size_t n_cols) const {
    std::vector<bool> used(n_cols, false);
    for (const auto& t : trees)
      for (const auto& n : t.nodes)
        if (!n.is_leaf()) used[static_cast<std::size_t>(n.column)] = true;
    return used;
  }

  bool operator==(const Model&) const = default;
};

namespace detail {

struct GradPair {
  double g = 0.0;
  double h = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, const std::vector<GradPair>& gp, const Params& p) : x_(x), gp_(gp), p_(p) {}

  RegTree build(const std::vector<std::size_t>& rows) {
    RegTree t;
    grow(t, rows, 0);
    return t;
  }

 private:
  double score(double g, double h) const { return g * g / (h + p_.lambda); }

  int grow(RegTree& t, const std::vector<std::size_t>& rows, int depth) {
    double G = 0.0, H = 0.0;
    for (auto r : rows) {
      G += gp_[r].g;
      H += gp_[r].h;
    }
    const int id = static_cast<int>(t.nodes.size());
    t.nodes.push_back({-1, 0.0, -1, -1, -G / (H + p_.lambda) * p_.learning_rate});
    if (depth >= p_.max_depth || rows.size() < 2) return id;

    int best_col = -1;
    double best_thr = 0.0, best_gain = p_.min_split_loss;
    std::vector<std::size_t> order(rows);
    for (std::size_t c = 0; c < x_.cols; ++c) {
      std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x_(a, c) < x_(b, c); });
      double gl = 0.0, hl = 0.0;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        gl += gp_[order[i]].g;
        hl += gp_[order[i]].h;
        const double v = x_(order[i], c), next = x_(order[i + 1], c);
        if (v == next) continue;
        const double gr = G - gl, hr = H - hl;
        if (hl < p_.min_child_weight || hr < p_.min_child_weight) continue;
        const double gain = 0.5 * (score(gl, hl) + score(gr, hr) - score(G, H));
        if (gain > best_gain + 1e-12) {
          best_gain = gain;
          best_col = static_cast<int>(c);
          best_thr = 0.5 * (v + next);
        }
      }
    }
    if (best_col < 0) return id;
    std::vector<std::size_t> lrows, rrows;
    for (auto r : rows) (x_(r, static_cast<std::size_t>(best_col)) <= best_thr ? lrows : rrows).push_back(r);
    const int l = grow(t, lrows, depth + 1);
    const int r = grow(t, rrows, depth + 1);
    auto& n = t.nodes[static_cast<std::size_t>(id)];
    n.column = best_col;
    n.threshold = best_thr;
    n.left = l;
    n.right = r;
    n.value = 0.0;
    return id;
  }

  const Matrix& x_;
  const std::vector<GradPair>& gp_;
  const Params& p_;
};

}  // namespace detail

inline Model train(const EncodedTable& data, const Params& p) {
  p.validate();
  const std::size_t n = data.x.rows;
  require(n > 0, "gbt: empty training table");
  Model m;
  std::vector<Probs> margins(n, Probs{});
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  Rng rng(p.seed, 0x9b7);
  std::vector<detail::GradPair> gp(n);
  for (int round = 0; round < p.n_rounds; ++round) {
    std::vector<std::size_t> rows;
    if (p.subsample < 1.0) {
      for (auto i : all)
        if (rng.bernoulli(p.subsample)) rows.push_back(i);
      if (rows.empty()) rows.push_back(rng.below(n));
    } else {
      rows = all;
    }
    std::vector<Probs> probs(n);
    for (std::size_t i = 0; i < n; ++i) probs[i] = softmax(margins[i]);
    for (std::size_t k = 0; k < kNumForms; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        const double pk = probs[i][k];
        gp[i] = {pk - (data.y[i] == static_cast<int>(k) ? 1.0 : 0.0), std::max(pk * (1.0 - pk), 1e-16)};
      }
      RegTree t = detail::TreeBuilder(data.x, gp, p).build(rows);
      for (std::size_t i = 0; i < n; ++i) margins[i][k] += t.eval(data.x.row(i));
      m.trees.push_back(std::move(t));
    }
  }
  return m;
}

inline Probs predict_row(const Model& m, std::span<const double> x) { return softmax(m.margins(x)); }

inline nlohmann::json to_json(const Model& m) {
  auto trees = nlohmann::json::array();
  for (const auto& t : m.trees) {
    auto nodes = nlohmann::json::array();
    for (const auto& n : t.nodes)
      nodes.push_back({{"column", n.column}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right},
                       {"value", n.value}});
    trees.push_back(std::move(nodes));
  }
  return {{"trees", std::move(trees)}};
}

inline Model from_json(const nlohmann::json& j) {
  Model m;
  for (const auto& tj : j.at("trees")) {
    RegTree t;
    for (const auto& nj : tj)
      t.nodes.push_back({nj.at("column").get<int>(), nj.at("threshold").get<double>(), nj.at("left").get<int>(),
                         nj.at("right").get<int>(), nj.at("value").get<double>()});
    require(!t.nodes.empty(), "gbt: empty tree in model file");
    m.trees.push_back(std::move(t));
  }
  require(!m.trees.empty() && m.trees.size() % kNumForms == 0, "gbt: inconsistent model file");
  return m;
}

}  // namespace refform::gbt
