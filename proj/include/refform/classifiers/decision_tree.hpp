#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <json.hpp>

#include "refform/error.hpp"
#include "refform/features.hpp"
#include "refform/prediction.hpp"

// Entropy-split classification trees with optional multi-class AdaBoost
// (SAMME weighting), standing in for C5.0 with boosting trials.
namespace refform::tree {

struct Params {
  int trials = 3;
  int min_leaf = 2;
  int max_depth = 30;

  void validate() const {
    require(trials >= 1, "tree: trials must be >= 1");
    require(min_leaf >= 1, "tree: min_leaf must be >= 1");
    require(max_depth >= 0, "tree: max_depth must be >= 0");
  }
};

struct Node {
  int column = -1;  // -1 marks a leaf
  double threshold = 0.0;  // x <= threshold goes left
  int left = -1;
  int right = -1;
  Probs dist{};  // weighted class distribution at the node

  bool is_leaf() const { return column < 0; }
  bool operator==(const Node&) const = default;
};

struct Tree {
  std::vector<Node> nodes;  // nodes[0] is the root

  const Node& leaf_for(std::span<const double> x) const {
    const Node* n = &nodes[0];
    while (!n->is_leaf()) n = &nodes[static_cast<std::size_t>(x[static_cast<std::size_t>(n->column)] <= n->threshold ? n->left : n->right)];
    return *n;
  }

  int depth() const { return depth_from(0); }

  bool operator==(const Tree&) const = default;

 private:
  int depth_from(int i) const {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    if (n.is_leaf()) return 0;
    return 1 + std::max(depth_from(n.left), depth_from(n.right));
  }
};

struct Model {
  std::vector<Tree> trees;
  std::vector<double> alphas;

  bool operator==(const Model&) const = default;
};

inline double entropy(const Probs& counts) {
  double total = 0.0;
  for (double c : counts) total += c;
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (double c : counts) {
    if (c <= 0.0) continue;
    const double p = c / total;
    h -= p * std::log2(p);
  }
  return h;
}

struct Split {
  int column = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

// Highest information-gain split of `rows`; each side needs >= min_leaf rows.
// Gain ties keep the lowest column, then the lowest threshold.
inline Split best_split(const Matrix& x, const std::vector<int>& y, const std::vector<double>& w,
                        const std::vector<std::size_t>& rows, int min_leaf) {
  Probs parent{};
  for (auto r : rows) parent[static_cast<std::size_t>(y[r])] += w[r];
  const double total = parent[0] + parent[1] + parent[2];
  const double h_parent = entropy(parent);
  Split best;
  std::vector<std::size_t> order(rows);
  for (std::size_t c = 0; c < x.cols; ++c) {
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x(a, c) < x(b, c); });
    Probs left{};
    double left_w = 0.0;
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      const auto r = order[i];
      left[static_cast<std::size_t>(y[r])] += w[r];
      left_w += w[r];
      const double v = x(r, c), next = x(order[i + 1], c);
      if (v == next) continue;
      const auto n_left = static_cast<int>(i + 1);
      const auto n_right = static_cast<int>(order.size()) - n_left;
      if (n_left < min_leaf || n_right < min_leaf) continue;
      Probs right{};
      for (std::size_t k = 0; k < kNumForms; ++k) right[k] = parent[k] - left[k];
      const double right_w = total - left_w;
      const double gain = h_parent - (left_w / total) * entropy(left) - (right_w / total) * entropy(right);
      if (best.column < 0 || gain > best.gain + 1e-12) best = {static_cast<int>(c), 0.5 * (v + next), gain};
    }
  }
  return best;
}

namespace detail {

inline int grow(Tree& t, const Matrix& x, const std::vector<int>& y, const std::vector<double>& w,
                const std::vector<std::size_t>& rows, int depth, const Params& p) {
  Node node;
  for (auto r : rows) node.dist[static_cast<std::size_t>(y[r])] += w[r];
  const int id = static_cast<int>(t.nodes.size());
  t.nodes.push_back(node);
  const int nonzero = static_cast<int>(std::count_if(node.dist.begin(), node.dist.end(), [](double c) { return c > 0; }));
  if (nonzero <= 1 || depth >= p.max_depth || static_cast<int>(rows.size()) < 2 * p.min_leaf) return id;
  const Split s = best_split(x, y, w, rows, p.min_leaf);
  if (s.column < 0 || s.gain <= 1e-12) return id;
  std::vector<std::size_t> lrows, rrows;
  for (auto r : rows) (x(r, static_cast<std::size_t>(s.column)) <= s.threshold ? lrows : rrows).push_back(r);
  const int l = grow(t, x, y, w, lrows, depth + 1, p);
  const int r = grow(t, x, y, w, rrows, depth + 1, p);
  auto& n = t.nodes[static_cast<std::size_t>(id)];
  n.column = s.column;
  n.threshold = s.threshold;
  n.left = l;
  n.right = r;
  return id;
}

}  // namespace detail

inline Tree grow_tree(const Matrix& x, const std::vector<int>& y, const std::vector<double>& w, const Params& p) {
  Tree t;
  std::vector<std::size_t> rows(x.rows);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  detail::grow(t, x, y, w, rows, 0, p);
  return t;
}

inline Model train(const EncodedTable& data, const Params& p) {
  p.validate();
  require(data.x.rows > 0, "tree: empty training table");
  const std::size_t n = data.x.rows;
  const double k = static_cast<double>(kNumForms);
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  Model m;
  for (int t = 0; t < p.trials; ++t) {
    Tree tree = grow_tree(data.x, data.y, w, p);
    double err = 0.0;
    std::vector<bool> miss(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& leaf = tree.leaf_for(data.x.row(i));
      miss[i] = static_cast<int>(argmax(leaf.dist)) != data.y[i];
      if (miss[i]) err += w[i];
    }
    if (err >= 1.0 - 1.0 / k) {
      // No better than chance under the current weights.
      if (m.trees.empty()) {
        m.trees.push_back(std::move(tree));
        m.alphas.push_back(1.0);
      }
      break;
    }
    const double e = std::max(err, 1e-10);
    const double alpha = std::log((1.0 - e) / e) + std::log(k - 1.0);
    m.trees.push_back(std::move(tree));
    m.alphas.push_back(alpha);
    if (err <= 1e-10) break;
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (miss[i]) w[i] *= std::exp(alpha);
      z += w[i];
    }
    for (double& wi : w) wi /= z;
  }
  return m;
}

// Alpha-weighted sum of normalized leaf distributions.
inline Probs predict_row(const Model& m, std::span<const double> x) {
  Probs score{};
  for (std::size_t t = 0; t < m.trees.size(); ++t) {
    const Probs leaf = normalized(m.trees[t].leaf_for(x).dist);
    for (std::size_t k = 0; k < kNumForms; ++k) score[k] += m.alphas[t] * leaf[k];
  }
  return normalized(score);
}

inline nlohmann::json to_json(const Model& m) {
  auto trees = nlohmann::json::array();
  for (const auto& t : m.trees) {
    auto nodes = nlohmann::json::array();
    for (const auto& n : t.nodes)
      nodes.push_back({{"column", n.column}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right},
                       {"dist", n.dist}});
    trees.push_back(std::move(nodes));
  }
  return {{"alphas", m.alphas}, {"trees", std::move(trees)}};
}

inline Model from_json(const nlohmann::json& j) {
  Model m;
  m.alphas = j.at("alphas").get<std::vector<double>>();
  for (const auto& tj : j.at("trees")) {
    Tree t;
    for (const auto& nj : tj)
      t.nodes.push_back({nj.at("column").get<int>(), nj.at("threshold").get<double>(), nj.at("left").get<int>(),
                         nj.at("right").get<int>(), nj.at("dist").get<Probs>()});
    require(!t.nodes.empty(), "tree: empty tree in model file");
    m.trees.push_back(std::move(t));
  }
  require(m.trees.size() == m.alphas.size() && !m.trees.empty(), "tree: inconsistent model file");
  return m;
}

}  // namespace refform::tree
