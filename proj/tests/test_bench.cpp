#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "abcd/bench.hpp"
#include "abcd/generators.hpp"
#include "abcd/rng.hpp"
#include "oracles.hpp"

using abcd::score_detections;
using abcd::spearman;
using abcd::subspace_accuracy;

TEST_CASE("detection scoring on a worked example") {
  const auto s = score_detections({1100}, {1000, 2000}, 4000);
  CHECK(s.tp == 1);
  CHECK(s.fn == 1);
  CHECK(s.fp == 0);
  CHECK(s.mtd == 100.0);
}

TEST_CASE("a detection before any change is a false positive") {
  const auto s = score_detections({500}, {1000}, 4000);
  CHECK(s.tp == 0);
  CHECK(s.fn == 1);
  CHECK(s.fp == 1);
  CHECK(std::isnan(s.mtd));
}

TEST_CASE("immediate detections give an mtd of one") {
  const auto s = score_detections({1001, 2001, 3001}, {1000, 2000, 3000}, 4000);
  CHECK(s.tp == 3);
  CHECK(s.fn == 0);
  CHECK(s.fp == 0);
  CHECK(s.mtd == 1.0);
}

TEST_CASE("surplus detections of one change count as false positives") {
  const auto s = score_detections({1100, 1200, 1300}, {1000}, 4000);
  CHECK(s.tp == 1);
  CHECK(s.fp == 2);
  CHECK(s.mtd == 100.0);
}

TEST_CASE("unsorted inputs are rejected") {
  CHECK_THROWS_AS(score_detections({200, 100}, {50}, 400), std::domain_error);
  CHECK_THROWS_AS(score_detections({100}, {50, 20}, 400), std::domain_error);
}

TEST_CASE("no changes makes every detection false") {
  const auto s = score_detections({10, 20, 30}, {}, 400);
  CHECK(s.tp == 0);
  CHECK(s.fn == 0);
  CHECK(s.fp == 3);
}

TEST_CASE("detection scoring matches the exhaustive matcher on random cases") {
  abcd::Rng rng(71);
  for (int trial = 0; trial < 300; ++trial) {
    const std::int64_t end = 1000;
    std::vector<std::int64_t> changes;
    const int n_changes = static_cast<int>(rng.uniform_int(0, 10));
    for (int i = 0; i < n_changes; ++i) changes.push_back(rng.uniform_int(1, end - 1));
    std::sort(changes.begin(), changes.end());
    changes.erase(std::unique(changes.begin(), changes.end()), changes.end());

    std::vector<std::int64_t> detections;
    const int n_det = static_cast<int>(rng.uniform_int(0, 30));
    for (int i = 0; i < n_det; ++i) detections.push_back(rng.uniform_int(1, end));
    std::sort(detections.begin(), detections.end());

    const auto fast = score_detections(detections, changes, end);
    const auto brute = oracle::brute_force_match(detections, changes, end);
    REQUIRE(fast.tp == brute.tp);
    REQUIRE(fast.fp == brute.fp);
    REQUIRE(fast.fn == brute.fn);
    REQUIRE(fast.tp + fast.fn == static_cast<std::int64_t>(changes.size()));
    if (fast.tp > 0) {
      REQUIRE(fast.mtd == Catch::Approx(brute.delay_sum / brute.tp));
      REQUIRE(fast.mtd >= 1.0);
    }
  }
}

TEST_CASE("subspace accuracy counts both hits and correct rejections") {
  CHECK(subspace_accuracy({1, 2, 3}, {1, 2, 3}, 10) == 1.0);
  CHECK(subspace_accuracy({4, 5, 6, 7, 8, 9, 10}, {1, 2, 3}, 10) == 0.0);
  CHECK(subspace_accuracy({2, 3, 4}, {1, 2, 3}, 10) == Catch::Approx(0.8));
  CHECK(subspace_accuracy({}, {1, 2}, 10) == Catch::Approx(0.8));
  CHECK_THROWS_AS(subspace_accuracy({11}, {1}, 10), std::domain_error);
}

TEST_CASE("spearman on monotone sequences") {
  CHECK(*spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == Catch::Approx(1.0));
  CHECK(*spearman({1, 2, 3, 4}, {40, 30, 20, 10}) == Catch::Approx(-1.0));
}

TEST_CASE("spearman averages tied ranks") {
  CHECK(*spearman({1, 2, 2, 4}, {10, 20, 20, 40}) == Catch::Approx(1.0));
}

TEST_CASE("spearman is undefined for degenerate inputs") {
  CHECK(!spearman({1.0}, {2.0}).has_value());
  CHECK(!spearman({1, 1, 1}, {1, 2, 3}).has_value());
  CHECK_THROWS_AS(spearman({1, 2}, {1, 2, 3}), std::invalid_argument);
}

TEST_CASE("spearman is invariant under strictly monotone transforms") {
  abcd::Rng rng(73);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> xs, ys, xs_t, ys_t;
    for (int i = 0; i < 30; ++i) {
      xs.push_back(rng.uniform01());
      ys.push_back(rng.uniform01());
      xs_t.push_back(std::exp(3.0 * xs.back()));
      ys_t.push_back(std::atan(5.0 * ys.back()));
    }
    REQUIRE(*spearman(xs, ys) == Catch::Approx(*spearman(xs_t, ys_t)).margin(1e-12));
  }
}

TEST_CASE("evaluate_run composes the derived ratios") {
  abcd::StreamWithTruth stream;
  stream.d = 10;
  stream.observations.resize(4000, Eigen::VectorXd::Zero(10));
  abcd::ChangeTruth c1;
  c1.index = 1000;
  c1.subspace = {1, 2, 3};
  c1.severity_param = 0.5;
  abcd::ChangeTruth c2;
  c2.index = 2000;
  c2.subspace = {4, 5};
  c2.severity_param = 0.9;
  stream.changes = {c1, c2};

  abcd::ChangeReport r;
  r.t_detected = 1100;
  r.t_star = 1001;
  r.p = 0.01;
  r.subspace = {2, 3, 4};
  r.severity = 1.5;
  const auto m = abcd::evaluate_run({r}, stream);
  CHECK(m.tp == 1);
  CHECK(m.fn == 1);
  CHECK(m.fp == 0);
  CHECK(m.precision == 1.0);
  CHECK(m.recall == 0.5);
  CHECK(m.f1 == Catch::Approx(2.0 / 3.0));
  CHECK(m.mtd == 100.0);
  CHECK(m.sacc == Catch::Approx(0.8));
  CHECK(std::isnan(m.spearman_rho));  // a single pair has no rank correlation
}

TEST_CASE("grid runs are deterministic and complete") {
  std::vector<abcd::StreamWithTruth> streams;
  streams.push_back(abcd::gen_normal(8, 4, abcd::NormalChangeKind::mean, {0.3}, 800, {}, 1));
  streams.push_back(abcd::gen_normal(8, 4, abcd::NormalChangeKind::mean, {0.3}, 800, {}, 2));
  streams.push_back(streams[0]);  // duplicated stream must give identical rows

  abcd::DetectorConfig base;
  base.model.kind = abcd::ModelKind::pca;
  base.model.eta = 0.5;
  abcd::DetectorConfig wide = base;
  wide.model.eta = 0.75;
  const std::vector<abcd::DetectorConfig> configs{base, wide};

  const auto cells = abcd::run_grid(streams, configs);
  REQUIRE(cells.size() == 6);
  for (const auto& cell : cells) {
    REQUIRE(cell.metrics.has_value());
    REQUIRE(cell.error.empty());
  }
  CHECK(cells[0].fingerprint != cells[1].fingerprint);
  CHECK(cells[0].fingerprint == cells[2].fingerprint);

  // stream 0 and its duplicate (index 2) agree cell by cell
  for (std::size_t ci = 0; ci < configs.size(); ++ci) {
    const auto& a = *cells[0 * configs.size() + ci].metrics;
    const auto& b = *cells[2 * configs.size() + ci].metrics;
    REQUIRE(a.tp == b.tp);
    REQUIRE(a.fp == b.fp);
    REQUIRE(a.f1 == b.f1);
  }

  const auto rerun = abcd::run_grid(streams, configs);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    REQUIRE(rerun[i].metrics->tp == cells[i].metrics->tp);
    const bool same_mtd = rerun[i].metrics->mtd == cells[i].metrics->mtd ||
                          (std::isnan(rerun[i].metrics->mtd) && std::isnan(cells[i].metrics->mtd));
    REQUIRE(same_mtd);
  }
}

TEST_CASE("a failing cell is recorded and the grid continues") {
  std::vector<abcd::StreamWithTruth> streams;
  streams.push_back(abcd::gen_normal(8, 4, abcd::NormalChangeKind::mean, {0.3}, 800, {}, 3));

  abcd::DetectorConfig good;
  good.model.kind = abcd::ModelKind::pca;
  good.model.eta = 0.5;
  abcd::DetectorConfig bad = good;
  bad.model.eta = 0.05;  // bottleneck collapses to zero for d = 8

  const auto cells = abcd::run_grid(streams, {good, bad});
  REQUIRE(cells.size() == 2);
  CHECK(cells[0].metrics.has_value());
  CHECK(!cells[1].metrics.has_value());
  CHECK(!cells[1].error.empty());
}
