#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "abcd/aggregate.hpp"
#include "abcd/rng.hpp"
#include "oracles.hpp"

using abcd::Aggregate;
using abcd::aggregate_init;
using abcd::aggregate_update;
using abcd::suffix_stats;

namespace {

bool close_rel(double actual, double expected, double tol = 1e-9) {
  return std::abs(actual - expected) <= tol * std::max({1.0, std::abs(actual), std::abs(expected)});
}

Aggregate fold(const std::vector<double>& losses) {
  Aggregate a = aggregate_init();
  for (double x : losses) a = aggregate_update(a, x);
  return a;
}

}  // namespace

TEST_CASE("empty aggregate is all zeros") {
  const Aggregate a = aggregate_init();
  CHECK(a.n == 0);
  CHECK(a.mean == 0.0);
  CHECK(a.ssd == 0.0);
}

TEST_CASE("single update has zero deviation") {
  const Aggregate a = aggregate_update(aggregate_init(), 0.5);
  CHECK(a.n == 1);
  CHECK(a.mean == 0.5);
  CHECK(a.ssd == 0.0);
}

TEST_CASE("folding over nothing is the identity") {
  const Aggregate a = fold({});
  CHECK(a.n == 0);
  CHECK(a.mean == 0.0);
  CHECK(a.ssd == 0.0);
}

TEST_CASE("small fold matches the two-pass batch values") {
  const Aggregate a = fold({0.2, 0.4, 0.6});
  CHECK(a.n == 3);
  CHECK(close_rel(a.mean, 0.4));
  CHECK(close_rel(a.ssd, 0.08));
}

TEST_CASE("constant losses have zero ssd") {
  for (double c : {0.0, 0.3, 1.0}) {
    const Aggregate a = fold(std::vector<double>(17, c));
    CHECK(a.n == 17);
    CHECK(a.mean == Catch::Approx(c).margin(1e-15));
    CHECK(a.ssd == 0.0);
  }
}

TEST_CASE("losses outside [0,1] are rejected") {
  CHECK_THROWS_AS(aggregate_update(aggregate_init(), -0.01), std::domain_error);
  CHECK_THROWS_AS(aggregate_update(aggregate_init(), 1.01), std::domain_error);
  CHECK_THROWS_AS(aggregate_update(aggregate_init(), std::nan("")), std::domain_error);
  CHECK_NOTHROW(aggregate_update(aggregate_init(), 0.0));
  CHECK_NOTHROW(aggregate_update(aggregate_init(), 1.0));
}

TEST_CASE("every prefix of a random fold matches the batch oracle") {
  abcd::Rng rng(7);
  std::vector<double> losses;
  Aggregate a = aggregate_init();
  for (int i = 0; i < 1000; ++i) {
    losses.push_back(rng.uniform01());
    a = aggregate_update(a, losses.back());
    const auto batch = oracle::two_pass(losses);
    REQUIRE(a.n == batch.n);
    REQUIRE(close_rel(a.mean, batch.mean));
    REQUIRE(close_rel(a.ssd, batch.ssd));
  }
}

TEST_CASE("suffix stats on a worked example") {
  const std::vector<double> losses{0.2, 0.4, 0.6, 0.8};
  Aggregate prefix = aggregate_init();
  Aggregate whole = aggregate_init();
  for (int i = 0; i < 2; ++i) prefix = aggregate_update(prefix, losses[i]);
  whole = prefix;
  for (int i = 2; i < 4; ++i) whole = aggregate_update(whole, losses[i]);

  const auto s = suffix_stats(whole, prefix);
  CHECK(s.n1 == 2);
  CHECK(s.n2 == 2);
  CHECK(close_rel(s.mean1, 0.3));
  CHECK(close_rel(s.mean2, 0.7));
  CHECK(close_rel(s.var1, 0.02));
  CHECK(close_rel(s.var2, 0.02));
}

TEST_CASE("identical constant halves split evenly") {
  const double c = 0.42;
  Aggregate prefix = aggregate_init();
  for (int i = 0; i < 2; ++i) prefix = aggregate_update(prefix, c);
  Aggregate whole = prefix;
  for (int i = 0; i < 2; ++i) whole = aggregate_update(whole, c);

  const auto s = suffix_stats(whole, prefix);
  CHECK(s.mean1 == Catch::Approx(c).margin(1e-15));
  CHECK(s.mean2 == Catch::Approx(c).margin(1e-15));
  CHECK(s.var1 == 0.0);
  CHECK(s.var2 == 0.0);
}

TEST_CASE("suffix stats of every split match direct recomputation") {
  abcd::Rng rng(11);
  std::vector<double> losses;
  std::vector<Aggregate> aggregates;
  Aggregate a = aggregate_init();
  for (int i = 0; i < 200; ++i) {
    losses.push_back(rng.uniform01());
    a = aggregate_update(a, losses.back());
    aggregates.push_back(a);
  }
  const Aggregate whole = aggregates.back();
  for (std::size_t k = 2; k + 2 <= losses.size(); ++k) {
    const auto s = suffix_stats(whole, aggregates[k - 1]);
    const std::span<const double> suffix(losses.data() + k, losses.size() - k);
    const auto batch = oracle::two_pass(suffix);
    REQUIRE(s.n2 == batch.n);
    REQUIRE(close_rel(s.mean2, batch.mean));
    REQUIRE(close_rel(s.var2, batch.ssd / static_cast<double>(batch.n - 1)));
    const std::span<const double> prefix(losses.data(), k);
    REQUIRE(close_rel(s.var1, oracle::sample_variance(prefix)));
  }
}

TEST_CASE("splits that are too small are rejected") {
  Aggregate a = aggregate_init();
  std::vector<Aggregate> steps;
  for (int i = 0; i < 6; ++i) {
    a = aggregate_update(a, 0.1 * i);
    steps.push_back(a);
  }
  CHECK_THROWS_AS(suffix_stats(steps[5], steps[0]), abcd::SplitTooSmallError);  // n1 = 1
  CHECK_THROWS_AS(suffix_stats(steps[5], steps[4]), abcd::SplitTooSmallError);  // n2 = 1
  CHECK_THROWS_AS(suffix_stats(steps[3], steps[3]), abcd::SplitTooSmallError);  // n2 = 0
  CHECK_NOTHROW(suffix_stats(steps[5], steps[1]));
}

TEST_CASE("suffix ssd never goes negative under heavy cancellation") {
  // Near-constant sequences make the subtraction in the suffix ssd cancel.
  abcd::Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    Aggregate a = aggregate_init();
    std::vector<Aggregate> steps;
    for (int i = 0; i < 64; ++i) {
      a = aggregate_update(a, 0.5 + 1e-13 * rng.uniform01());
      steps.push_back(a);
    }
    for (std::size_t k = 2; k + 2 <= steps.size(); ++k) {
      const auto s = suffix_stats(steps.back(), steps[k - 1]);
      REQUIRE(s.var1 >= 0.0);
      REQUIRE(s.var2 >= 0.0);
    }
  }
}
