#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "abcd/aggregate.hpp"

namespace abcd {

struct NoSplitsError : std::domain_error {
  using std::domain_error::domain_error;
};

struct BernsteinParams {
  double M = 0.1;           // almost-sure bound on |loss - mean|
  double delta = 0.05;      // false-alarm threshold
  double kappa_min = 0.05;  // clamp on the union-bound weight

  void validate() const {
    if (!(M > 0.0)) throw std::invalid_argument("BernsteinParams: M must be > 0");
    if (!(delta > 0.0 && delta < 1.0))
      throw std::invalid_argument("BernsteinParams: delta must be in (0,1)");
    if (!(kappa_min > 0.0 && kappa_min < 0.5))
      throw std::invalid_argument("BernsteinParams: kappa_min must be in (0,0.5)");
  }
};

struct ScoreResult {
  double p = 4.0;                // change score in (0, 4]
  std::int64_t split_index = 0;  // prefix length of the winning split
  double epsilon = 0.0;          // |mean1 - mean2| at the winning split
};

// Union-bound weight splitting the deviation budget between the two
// subwindows: kappa = n2/(n1+n2), clamped away from the extremes.
inline double kappa(std::int64_t n1, std::int64_t n2, double kappa_min = 0.05) {
  if (n1 < 1 || n2 < 1) throw std::domain_error("kappa: counts must be >= 1");
  const double k = static_cast<double>(n2) / static_cast<double>(n1 + n2);
  return std::clamp(k, kappa_min, 1.0 - kappa_min);
}

// Two-sample Bernstein tail bound for an explicit union-bound weight:
//
//   2 exp(-n1 (w e)^2 / (2 (var1 + w M e / 3)))
//     + 2 exp(-n2 ((1-w) e)^2 / (2 (var2 + (1-w) M e / 3)))
//
// A zero numerator is treated as a zero exponent (the term contributes its
// full weight of 2), which is the e -> 0 limit: no observed mean difference
// gives the vacuous bound of 4. Exponents are formed fully before the single
// exp call; if both terms underflow, the smallest positive normal double is
// returned so the result stays inside (0, 4].
inline double bernstein_bound_at(std::int64_t n1, std::int64_t n2, double var1, double var2,
                                 double epsilon, double M, double kappa_value) {
  const auto term = [&](std::int64_t n, double var, double weight) {
    const double we = weight * epsilon;
    const double numerator = static_cast<double>(n) * we * we;
    if (numerator <= 0.0) return 2.0;
    const double exponent = numerator / (2.0 * (var + weight * M * epsilon / 3.0));
    return 2.0 * std::exp(-exponent);
  };
  double p = term(n1, var1, kappa_value) + term(n2, var2, 1.0 - kappa_value);
  if (p <= 0.0) p = std::numeric_limits<double>::min();
  return p;
}

// The bound above with kappa chosen from the subwindow sizes.
inline double bernstein_bound(const SplitStats& stats, double epsilon,
                              const BernsteinParams& params) {
  if (!(epsilon >= 0.0)) throw std::domain_error("bernstein_bound: epsilon must be >= 0");
  const double k = kappa(stats.n1, stats.n2, params.kappa_min);
  return bernstein_bound_at(stats.n1, stats.n2, stats.var1, stats.var2, epsilon, params.M, k);
}

// Change score: minimum over the evaluated splits of the bound at the
// observed mean gap. Ties go to the smallest prefix, so the oldest plausible
// change point wins.
inline ScoreResult change_score(const std::vector<SplitStats>& splits,
                                const BernsteinParams& params) {
  if (splits.empty()) throw NoSplitsError("change_score: no valid splits");
  ScoreResult best;
  best.p = std::numeric_limits<double>::infinity();
  for (const SplitStats& s : splits) {
    const double eps = std::abs(s.mean1 - s.mean2);
    const double p = bernstein_bound(s, eps, params);
    if (p < best.p || (p == best.p && s.n1 < best.split_index)) {
      best.p = p;
      best.split_index = s.n1;
      best.epsilon = eps;
    }
  }
  return best;
}

// Smallest prefix size at which the bound can undercut delta for a mean gap
// of epsilon, given the prefix standard deviation sigma1.
inline std::int64_t min_n1(double sigma1, double epsilon, const BernsteinParams& params,
                           double kappa_value) {
  if (!(epsilon > 0.0)) throw std::domain_error("min_n1: epsilon must be > 0");
  if (!(kappa_value > 0.0 && kappa_value <= 1.0))
    throw std::domain_error("min_n1: kappa must be in (0,1]");
  const double ke = kappa_value * epsilon;
  const double value = 2.0 * std::log(2.0 / params.delta) *
                       (sigma1 * sigma1 / (ke * ke) + params.M / (3.0 * ke));
  return static_cast<std::int64_t>(std::ceil(value));
}

}  // namespace abcd
