#pragma once

#include <cstdint>
#include <stdexcept>

namespace abcd {

struct SplitTooSmallError : std::domain_error {
  using std::domain_error::domain_error;
};

// Cumulative statistics of the scalar losses from the window origin up to
// some time step: count, running mean, and sum of squared deviations from
// the mean. Updates are O(1) (Welford), and two aggregates over nested
// intervals yield the exact suffix mean and variance (Chan), so any window
// split can be evaluated without touching the raw losses again.
struct Aggregate {
  std::int64_t n = 0;
  double mean = 0.0;
  double ssd = 0.0;
};

// Statistics of a window of length t split into [1,k] and [k+1,t].
struct SplitStats {
  std::int64_t n1 = 0;  // prefix length k
  std::int64_t n2 = 0;  // suffix length t - k
  double mean1 = 0.0;
  double mean2 = 0.0;
  double var1 = 0.0;  // sample variance, denominator n1 - 1
  double var2 = 0.0;  // sample variance, denominator n2 - 1
};

inline Aggregate aggregate_init() { return Aggregate{}; }

inline Aggregate aggregate_update(const Aggregate& prev, double loss) {
  if (!(loss >= 0.0 && loss <= 1.0))
    throw std::domain_error("aggregate_update: loss must be in [0,1]");
  Aggregate next;
  next.n = prev.n + 1;
  next.mean = prev.mean + (loss - prev.mean) / static_cast<double>(next.n);
  next.ssd = prev.ssd + (loss - prev.mean) * (loss - next.mean);
  if (next.ssd < 0.0) next.ssd = 0.0;
  return next;
}

// Statistics of the split (prefix.n, whole.n] from two cumulative aggregates
// sharing the same origin. Each side needs at least two observations so the
// sample variances exist. The suffix ssd subtracts near-equal quantities;
// a small negative result is rounding noise and is clamped to zero.
inline SplitStats suffix_stats(const Aggregate& whole, const Aggregate& prefix) {
  const std::int64_t t = whole.n;
  const std::int64_t k = prefix.n;
  if (k < 2 || t - k < 2)
    throw SplitTooSmallError("suffix_stats: need at least 2 observations on each side");
  const double td = static_cast<double>(t);
  const double kd = static_cast<double>(k);
  const double mean2 = (td * whole.mean - kd * prefix.mean) / (td - kd);
  const double gap = prefix.mean - mean2;
  double ssd2 = whole.ssd - prefix.ssd - kd * (td - kd) / td * gap * gap;
  if (ssd2 < 0.0) ssd2 = 0.0;

  SplitStats s;
  s.n1 = k;
  s.n2 = t - k;
  s.mean1 = prefix.mean;
  s.mean2 = mean2;
  s.var1 = prefix.ssd / static_cast<double>(k - 1);
  s.var2 = ssd2 / static_cast<double>(t - k - 1);
  return s;
}

}  // namespace abcd
