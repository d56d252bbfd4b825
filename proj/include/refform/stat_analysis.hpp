#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <json.hpp>

#include "refform/error.hpp"

namespace refform::stats {

// ---------------------------------------------------------------------------
// Spearman rank correlation

struct CorrelationResult {
  double r_s = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  bool tie_corrected = false;  // average ranks were needed
};

// 1-based ranks; tied values share the mean of their positions.
inline std::vector<double> average_ranks(const std::vector<double>& v, bool* had_ties = nullptr) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  bool ties = false;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    if (j > i) ties = true;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  if (had_ties) *had_ties = ties;
  return ranks;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline bool is_constant(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
}

// Two-sided p from t = r sqrt((n-2)/(1-r^2)) on n-2 degrees of freedom.
inline double spearman_p_value(double r, std::size_t n) {
  const double df = static_cast<double>(n - 2);
  if (std::abs(r) >= 1.0) return std::numeric_limits<double>::min();
  const double t = r * std::sqrt(df / (1.0 - r * r));
  boost::math::students_t dist(df);
  const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  return std::clamp(p, std::numeric_limits<double>::min(), 1.0);
}

inline CorrelationResult spearman(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size(), "spearman: vectors differ in length");
  require(x.size() >= 3, "spearman: need at least 3 observations");
  for (std::size_t i = 0; i < x.size(); ++i)
    require(std::isfinite(x[i]) && std::isfinite(y[i]), "spearman: non-finite value");
  require(!is_constant(x) && !is_constant(y), "spearman: correlation undefined for a constant vector");
  bool tx = false, ty = false;
  const auto rx = average_ranks(x, &tx);
  const auto ry = average_ranks(y, &ty);
  CorrelationResult c;
  c.n = x.size();
  c.tie_corrected = tx || ty;
  c.r_s = pearson(rx, ry);
  c.p_value = spearman_p_value(c.r_s, c.n);
  return c;
}

inline nlohmann::ordered_json to_json(const CorrelationResult& c) {
  return {{"r_s", c.r_s}, {"p_value", c.p_value}, {"n", c.n}, {"tie_corrected", c.tie_corrected}};
}

// ---------------------------------------------------------------------------
// Bayes factor for two binomial accuracies

inline const char* const kFavorsCommon = "favors common distribution";

inline std::string kass_raftery_band(double bf10) {
  if (!(bf10 >= 1.0)) return kFavorsCommon;
  if (bf10 <= 3.0) return "not worth more than a bare mention";
  if (bf10 <= 20.0) return "positive";
  if (bf10 <= 150.0) return "strong";
  return "very strong";
}

struct BetaPrior {
  double a = 1.0;
  double b = 1.0;
};

struct BFResult {
  double bf10 = 1.0;      // m_diff / m_same; may be +inf when log_bf10 is huge
  double log_bf10 = 0.0;
  std::string direction;  // which hypothesis the data favor
  std::string band;       // Kass-Raftery strength of max(bf10, 1/bf10)
  double prob_diff = 0.0; // P(H_diff|D) - P(H_same|D) at equal prior odds
  bool evidentially_different = false;
  long long k1 = 0, n1 = 0, k2 = 0, n2 = 0;
  BetaPrior prior;
};

inline constexpr double kProbDiffThreshold = 0.01;

inline double log_beta(double a, double b) {
  return boost::math::lgamma(a) + boost::math::lgamma(b) - boost::math::lgamma(a + b);
}

// H_same: one theta ~ Beta(a,b) for both samples. H_diff: independent thetas.
// Binomial coefficients cancel in the ratio.
inline BFResult bayes_factor_accuracy(long long k1, long long n1, long long k2, long long n2, BetaPrior prior = {}) {
  require(n1 >= 1 && n2 >= 1, "bayes_factor: trials must be >= 1");
  require(k1 >= 0 && k1 <= n1 && k2 >= 0 && k2 <= n2, "bayes_factor: successes must lie in [0, trials]");
  require(prior.a > 0.0 && prior.b > 0.0 && std::isfinite(prior.a) && std::isfinite(prior.b),
          "bayes_factor: prior parameters must be positive");
  const double a = prior.a, b = prior.b;
  const auto d = [](long long v) { return static_cast<double>(v); };
  const double lb0 = log_beta(a, b);
  const double log_same = log_beta(a + d(k1 + k2), b + d(n1 + n2 - k1 - k2)) - lb0;
  const double log_diff = log_beta(a + d(k1), b + d(n1 - k1)) + log_beta(a + d(k2), b + d(n2 - k2)) - 2.0 * lb0;
  BFResult r;
  r.k1 = k1, r.n1 = n1, r.k2 = k2, r.n2 = n2;
  r.prior = prior;
  r.log_bf10 = log_diff - log_same;
  r.bf10 = std::exp(r.log_bf10);
  r.direction = r.log_bf10 > 0.0 ? "favors different distributions" : kFavorsCommon;
  r.band = kass_raftery_band(std::exp(std::abs(r.log_bf10)));
  r.prob_diff = std::tanh(0.5 * r.log_bf10);
  r.evidentially_different = r.prob_diff > kProbDiffThreshold;
  return r;
}

inline long long count_from_accuracy(double accuracy, long long n) {
  require(accuracy >= 0.0 && accuracy <= 1.0, "accuracy must lie in [0, 1]");
  return std::llround(accuracy * static_cast<double>(n));
}

inline nlohmann::ordered_json to_json(const BFResult& r) {
  nlohmann::ordered_json j;
  j["bf10"] = std::isfinite(r.bf10) ? nlohmann::ordered_json(r.bf10) : nlohmann::ordered_json("inf");
  j["log_bf10"] = r.log_bf10;
  j["direction"] = r.direction;
  j["band"] = r.band;
  j["prob_diff"] = r.prob_diff;
  j["evidentially_different"] = r.evidentially_different;
  j["k1"] = r.k1;
  j["n1"] = r.n1;
  j["k2"] = r.k2;
  j["n2"] = r.n2;
  j["prior"] = {{"a", r.prior.a}, {"b", r.prior.b}};
  return j;
}

}  // namespace refform::stats
