#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include <json.hpp>

#include "refform/error.hpp"
#include "refform/features.hpp"
#include "refform/prediction.hpp"

namespace refform::knn {

struct Params {
  int k = 5;

  void validate() const { require(k >= 1, "knn: k must be >= 1"); }
};

struct Model {
  Matrix x;
  std::vector<int> y;
  int k = 5;

  bool operator==(const Model&) const = default;
};

inline Model train(const EncodedTable& data, const Params& p) {
  p.validate();
  require(static_cast<std::size_t>(p.k) <= data.x.rows,
          "knn: k=" + std::to_string(p.k) + " exceeds the " + std::to_string(data.x.rows) + " training rows");
  return {data.x, data.y, p.k};
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return d;
}

// Label frequencies among the k nearest training rows. Equal distances keep
// training-row order; vote ties fall to canonical label order in argmax.
inline Probs predict_row(const Model& m, std::span<const double> query) {
  std::vector<std::pair<double, std::size_t>> dist(m.x.rows);
  for (std::size_t i = 0; i < m.x.rows; ++i) dist[i] = {squared_distance(m.x.row(i), query), i};
  const auto k = static_cast<std::size_t>(m.k);
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  Probs p{};
  for (std::size_t i = 0; i < k; ++i) p[static_cast<std::size_t>(m.y[dist[i].second])] += 1.0;
  for (double& v : p) v /= static_cast<double>(k);
  return p;
}

inline nlohmann::json to_json(const Model& m) {
  return {{"k", m.k}, {"rows", m.x.rows}, {"cols", m.x.cols}, {"x", m.x.data}, {"y", m.y}};
}

inline Model from_json(const nlohmann::json& j) {
  Model m;
  m.k = j.at("k").get<int>();
  m.x.rows = j.at("rows").get<std::size_t>();
  m.x.cols = j.at("cols").get<std::size_t>();
  m.x.data = j.at("x").get<std::vector<double>>();
  m.y = j.at("y").get<std::vector<int>>();
  require(m.x.data.size() == m.x.rows * m.x.cols && m.y.size() == m.x.rows, "knn: inconsistent model shape");
  return m;
}

}  // namespace refform::knn
