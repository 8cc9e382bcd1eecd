#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <vector>

#include "abcd/generators.hpp"
#include "abcd/io.hpp"
#include "abcd/rng.hpp"
#include "abcd/runner.hpp"

TEST_CASE("double formatting round-trips exactly") {
  abcd::Rng rng(83);
  std::vector<double> values{0.0, 1.0, 0.1, 1.0 / 3.0, 1e-17, 5e-324, 0.12345678901234567};
  for (int i = 0; i < 200; ++i) values.push_back(rng.uniform(-1e6, 1e6));
  for (double v : values) {
    const auto parsed = abcd::parse_double(abcd::format_double(v));
    REQUIRE(parsed.has_value());
    REQUIRE(*parsed == v);
  }
  CHECK(abcd::format_double(std::nan("")) == "nan");
}

TEST_CASE("csv streams round-trip bit-exactly") {
  const auto stream = abcd::gen_normal(6, 3, abcd::NormalChangeKind::mean, {0.2}, 150, {}, 7);
  std::stringstream buffer;
  abcd::write_stream_csv(buffer, stream);

  const auto rows = abcd::read_observations(buffer, abcd::RowFormat::csv);
  REQUIRE(rows.size() == stream.observations.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    REQUIRE((rows[i].array() == stream.observations[i].array()).all());
}

TEST_CASE("truth sidecars carry the ground truth") {
  const auto stream = abcd::gen_hsphere(8, 3, 3, 100, {}, 11);
  const auto restored = abcd::truth_from_json(
      nlohmann::json::parse(abcd::truth_to_json(stream).dump()));
  CHECK(restored.d == 8);
  CHECK(restored.generator == "hsphere");
  CHECK(restored.seed == 11);
  REQUIRE(restored.changes.size() == stream.changes.size());
  for (std::size_t i = 0; i < restored.changes.size(); ++i) {
    CHECK(restored.changes[i].index == stream.changes[i].index);
    CHECK(restored.changes[i].subspace == stream.changes[i].subspace);
    CHECK(restored.changes[i].severity_param == stream.changes[i].severity_param);
  }
}

TEST_CASE("the csv reader skips headers and reports malformed rows") {
  std::stringstream in("x1,x2,x3\n0.1,0.2,0.3\nbad,0.2,0.3\n0.4,0.5,0.6\n");
  abcd::RowReader reader(in, abcd::RowFormat::csv);

  auto r1 = reader.next();
  REQUIRE(r1.has_value());
  REQUIRE(r1->ok());
  CHECK(r1->values == std::vector<double>{0.1, 0.2, 0.3});
  CHECK(r1->line == 2);

  auto r2 = reader.next();
  REQUIRE(r2.has_value());
  CHECK(!r2->ok());
  CHECK(r2->line == 3);

  auto r3 = reader.next();
  REQUIRE(r3.has_value());
  REQUIRE(r3->ok());
  CHECK(r3->values == std::vector<double>{0.4, 0.5, 0.6});
  CHECK(!reader.next().has_value());
}

TEST_CASE("the jsonl reader parses flat arrays") {
  std::stringstream in("[0.1, 0.2]\nnot json\n[0.3, \"x\"]\n[0.5,0.6]\n");
  abcd::RowReader reader(in, abcd::RowFormat::jsonl);
  auto r1 = reader.next();
  REQUIRE(r1->ok());
  CHECK(r1->values == std::vector<double>{0.1, 0.2});
  CHECK(!reader.next()->ok());
  CHECK(!reader.next()->ok());
  CHECK(reader.next()->ok());
}

TEST_CASE("normalizer maps the fitted range onto the unit interval") {
  std::vector<Eigen::VectorXd> rows;
  Eigen::VectorXd a(3), b(3), c(3);
  a << -2.0, 10.0, 7.0;
  b << 4.0, 20.0, 7.0;
  c << 1.0, 12.0, 7.0;
  rows = {a, b, c};
  const auto norm = abcd::Normalizer::fit(rows);

  const Eigen::VectorXd at_min = norm.transform((Eigen::VectorXd(3) << -2.0, 10.0, 7.0).finished());
  CHECK(at_min(0) == 0.0);
  CHECK(at_min(1) == 0.0);
  CHECK(at_min(2) == 0.5);  // degenerate dimension

  const Eigen::VectorXd at_max = norm.transform((Eigen::VectorXd(3) << 4.0, 20.0, 7.0).finished());
  CHECK(at_max(0) == 1.0);
  CHECK(at_max(1) == 1.0);

  const Eigen::VectorXd beyond = norm.transform((Eigen::VectorXd(3) << 99.0, -99.0, 7.0).finished());
  CHECK(beyond(0) == 1.0);
  CHECK(beyond(1) == 0.0);

  const auto restored = abcd::Normalizer::from_json(nlohmann::json::parse(norm.to_json().dump()));
  CHECK((restored.min.array() == norm.min.array()).all());
  CHECK((restored.max.array() == norm.max.array()).all());
}

TEST_CASE("report json uses the documented keys") {
  abcd::ChangeReport r;
  r.t_detected = 2100;
  r.t_star = 1999;
  r.p = 0.003;
  r.subspace = {1, 2, 7};
  r.severity = 3.25;
  r.subspace_fallback = false;
  const auto j = abcd::report_to_json(r);
  CHECK(j.at("t_detected") == 2100);
  CHECK(j.at("t_star") == 1999);
  CHECK(j.at("p") == 0.003);
  CHECK(j.at("subspace").get<std::vector<int>>() == std::vector<int>{1, 2, 7});
  CHECK(j.at("severity") == 3.25);
  CHECK(j.at("subspace_fallback") == false);

  const auto back = abcd::report_from_json(j);
  CHECK(back.t_detected == r.t_detected);
  CHECK(back.subspace == r.subspace);
}

TEST_CASE("detector configs parse from flat json with defaults") {
  const auto c = abcd::detector_config_from_json(nlohmann::json::parse(
      R"({"model":"kpca","eta":0.3,"delta":0.01,"kmax":50})"));
  CHECK(c.model.kind == abcd::ModelKind::kpca);
  CHECK(c.model.eta == 0.3);
  CHECK(c.delta == 0.01);
  CHECK(c.k_max == 50);
  CHECK(c.n_min == 100);
  CHECK(c.tau == 2.5);
  CHECK_THROWS_AS(
      abcd::detector_config_from_json(nlohmann::json::parse(R"({"delta":2.0})")),
      std::invalid_argument);
}

TEST_CASE("manifests default stream ids to the file stem") {
  const auto m = abcd::manifest_from_json(nlohmann::json::parse(R"({
    "streams": [
      {"csv": "data/foo.csv", "truth": "data/foo.truth.json"},
      {"id": "named", "csv": "x.csv", "truth": "x.truth.json"}
    ],
    "configs": [{"model": "pca"}]
  })"));
  REQUIRE(m.streams.size() == 2);
  CHECK(m.streams[0].id == "foo");
  CHECK(m.streams[1].id == "named");
  CHECK(m.configs.size() == 1);
}

TEST_CASE("runner without normalization is a plain detector pass") {
  const auto stream =
      abcd::gen_normal(12, 6, abcd::NormalChangeKind::mean, {0.3}, 1500, {}, 19);
  abcd::RunOptions options;
  options.detector.model.kind = abcd::ModelKind::pca;
  options.detector.model.eta = 0.5;

  abcd::StreamRunner runner(options);
  std::vector<abcd::ChangeReport> reports;
  for (const auto& x : stream.observations)
    if (auto r = runner.push(x)) reports.push_back(*r);

  const auto direct = abcd::run_detector(stream.observations, options.detector);
  REQUIRE(reports.size() == direct.size());
  for (std::size_t i = 0; i < reports.size(); ++i) {
    REQUIRE(reports[i].t_detected == direct[i].t_detected);
    REQUIRE(reports[i].t_star == direct[i].t_star);
    REQUIRE(reports[i].p == direct[i].p);
  }
  CHECK(runner.summary().processed == static_cast<std::int64_t>(stream.observations.size()));
  CHECK(runner.summary().reports == static_cast<std::int64_t>(reports.size()));
}

TEST_CASE("runner with normalization detects changes in raw-scale data") {
  // The same shifted stream, but scaled far outside the unit cube.
  const auto stream =
      abcd::gen_normal(12, 6, abcd::NormalChangeKind::mean, {0.3}, 1500, {}, 23);
  std::vector<Eigen::VectorXd> raw;
  raw.reserve(stream.observations.size());
  for (const auto& x : stream.observations) raw.push_back(200.0 * x.array() - 57.0);

  abcd::RunOptions options;
  options.detector.model.kind = abcd::ModelKind::pca;
  options.detector.model.eta = 0.5;
  options.normalize = true;

  abcd::StreamRunner runner(options);
  std::vector<abcd::ChangeReport> reports;
  for (const auto& x : raw)
    if (auto r = runner.push(x)) reports.push_back(*r);

  REQUIRE(!reports.empty());
  bool hit = false;
  for (const auto& r : reports) hit = hit || (r.t_detected >= 1500 && r.t_detected <= 2100);
  CHECK(hit);
  // Indices are reported in the global frame even across internal restarts.
  for (const auto& r : reports) {
    CHECK(r.t_star < r.t_detected);
    CHECK(r.t_detected < static_cast<std::int64_t>(raw.size()));
  }
}

TEST_CASE("runner with fixed bounds never refits") {
  const auto stream =
      abcd::gen_normal(8, 4, abcd::NormalChangeKind::mean, {0.3}, 1200, {}, 29);
  std::vector<Eigen::VectorXd> raw;
  for (const auto& x : stream.observations) raw.push_back(10.0 * x);

  abcd::Normalizer bounds;
  bounds.min = Eigen::VectorXd::Zero(8);
  bounds.max = Eigen::VectorXd::Constant(8, 10.0);

  abcd::RunOptions options;
  options.detector.model.kind = abcd::ModelKind::pca;
  options.detector.model.eta = 0.5;
  options.normalize = true;
  options.fixed_bounds = bounds;

  abcd::StreamRunner runner(options);
  int reports = 0;
  for (const auto& x : raw)
    if (runner.push(x)) ++reports;
  CHECK(reports >= 1);
  CHECK((runner.normalizer()->max.array() == 10.0).all());
}
