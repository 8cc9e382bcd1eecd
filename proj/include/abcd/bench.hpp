#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "abcd/detector.hpp"
#include "abcd/generators.hpp"

namespace abcd {

struct DetectionScore {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  double mtd = std::numeric_limits<double>::quiet_NaN();  // NaN when tp = 0
};

// Matches detection times against true change points. Each change owns the
// window up to the next change (or the stream end): the first detection
// inside it is the true positive and sets the detection delay; later ones
// are counted as false positives, as are detections before any change.
inline DetectionScore score_detections(const std::vector<std::int64_t>& detections,
                                       const std::vector<std::int64_t>& changes,
                                       std::int64_t stream_end) {
  if (!std::is_sorted(detections.begin(), detections.end()))
    throw std::domain_error("score_detections: detections must be sorted");
  if (!std::is_sorted(changes.begin(), changes.end()))
    throw std::domain_error("score_detections: changes must be sorted");

  DetectionScore score;
  if (changes.empty()) {
    score.fp = static_cast<std::int64_t>(detections.size());
    return score;
  }

  double delay_sum = 0.0;
  std::size_t di = 0;
  while (di < detections.size() && detections[di] <= changes.front()) {
    ++score.fp;
    ++di;
  }
  for (std::size_t ci = 0; ci < changes.size(); ++ci) {
    const std::int64_t window_end = ci + 1 < changes.size() ? changes[ci + 1] : stream_end;
    bool hit = false;
    while (di < detections.size() && detections[di] <= window_end) {
      if (hit) {
        ++score.fp;
      } else {
        hit = true;
        ++score.tp;
        delay_sum += static_cast<double>(detections[di] - changes[ci]);
      }
      ++di;
    }
    if (!hit) ++score.fn;
  }
  score.fp += static_cast<std::int64_t>(detections.size() - di);  // past the stream end
  if (score.tp > 0) score.mtd = delay_sum / static_cast<double>(score.tp);
  return score;
}

// Per-dimension classification accuracy of the detected subspace against the
// true one; dimensions in neither set count as correct.
inline double subspace_accuracy(const std::vector<int>& detected, const std::vector<int>& truth,
                                int d) {
  std::vector<char> in_detected(d + 1, 0), in_truth(d + 1, 0);
  for (int j : detected) {
    if (j < 1 || j > d) throw std::domain_error("subspace_accuracy: dimension out of range");
    in_detected[j] = 1;
  }
  for (int j : truth) {
    if (j < 1 || j > d) throw std::domain_error("subspace_accuracy: dimension out of range");
    in_truth[j] = 1;
  }
  int correct = 0;
  for (int j = 1; j <= d; ++j)
    if (in_detected[j] == in_truth[j]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(d);
}

namespace detail {

inline std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;  // ties share the average rank
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace detail

// Spearman rank correlation with average ranks for ties. Undefined (nullopt)
// for fewer than two pairs or when either side has zero rank variance.
inline std::optional<double> spearman(const std::vector<double>& xs,
                                      const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("spearman: length mismatch");
  const std::size_t n = xs.size();
  if (n < 2) return std::nullopt;
  const std::vector<double> rx = detail::average_ranks(xs);
  const std::vector<double> ry = detail::average_ranks(ys);
  const double mean = 0.5 * static_cast<double>(n + 1);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

struct Metrics {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double mtd = std::numeric_limits<double>::quiet_NaN();
  double sacc = std::numeric_limits<double>::quiet_NaN();
  double spearman_rho = std::numeric_limits<double>::quiet_NaN();
};

// Feeds a stream through a fresh detector and collects every report.
inline std::vector<ChangeReport> run_detector(const std::vector<Eigen::VectorXd>& observations,
                                              const DetectorConfig& config) {
  AbcdDetector detector(config);
  std::vector<ChangeReport> reports;
  for (const auto& x : observations) {
    if (auto report = detector.process(x)) reports.push_back(std::move(*report));
  }
  return reports;
}

// Metrics of one detector run against the stream's ground truth. Subspace
// accuracy and the severity correlation pair each true change with its first
// detection; missed changes contribute nothing to either.
inline Metrics evaluate_run(const std::vector<ChangeReport>& reports,
                            const StreamWithTruth& stream) {
  std::vector<std::int64_t> detections;
  detections.reserve(reports.size());
  for (const auto& r : reports) detections.push_back(r.t_detected);
  std::vector<std::int64_t> change_points;
  for (const auto& c : stream.changes) change_points.push_back(c.index);
  const auto score = score_detections(detections, change_points,
                                      static_cast<std::int64_t>(stream.observations.size()));

  Metrics m;
  m.tp = score.tp;
  m.fp = score.fp;
  m.fn = score.fn;
  m.mtd = score.mtd;
  if (m.tp + m.fp > 0) m.precision = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
  if (m.tp + m.fn > 0) m.recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  if (m.precision + m.recall > 0.0)
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);

  double sacc_sum = 0.0;
  int sacc_count = 0;
  std::vector<double> reported_severity;
  std::vector<double> true_severity;
  std::size_t ri = 0;
  for (std::size_t ci = 0; ci < stream.changes.size(); ++ci) {
    const std::int64_t begin = stream.changes[ci].index;
    const std::int64_t end = ci + 1 < stream.changes.size()
                                 ? stream.changes[ci + 1].index
                                 : static_cast<std::int64_t>(stream.observations.size());
    while (ri < reports.size() && reports[ri].t_detected <= begin) ++ri;
    if (ri < reports.size() && reports[ri].t_detected <= end) {
      sacc_sum += subspace_accuracy(reports[ri].subspace, stream.changes[ci].subspace, stream.d);
      ++sacc_count;
      reported_severity.push_back(reports[ri].severity);
      true_severity.push_back(stream.changes[ci].severity_param);
    }
  }
  if (sacc_count > 0) m.sacc = sacc_sum / static_cast<double>(sacc_count);
  if (auto rho = spearman(reported_severity, true_severity)) m.spearman_rho = *rho;
  return m;
}

inline std::string config_fingerprint(const DetectorConfig& c) {
  std::ostringstream out;
  out << "model=" << to_string(c.model.kind) << ";eta=" << c.model.eta
      << ";epochs=" << c.model.epochs << ";delta=" << c.delta << ";tau=" << c.tau
      << ";nmin=" << c.n_min << ";kmax=" << c.k_max << ";nmax=" << c.n_max << ";M=" << c.M
      << ";seed=" << c.model.seed;
  return out.str();
}

struct GridCell {
  std::size_t stream_index = 0;
  std::size_t config_index = 0;
  std::string fingerprint;
  std::optional<Metrics> metrics;  // empty when the cell failed
  std::string error;
};

// Runs every (stream, config) pair. A failing cell records its error and the
// grid keeps going; cells are evaluated and emitted in (stream, config)
// order, so reruns produce identical tables.
inline std::vector<GridCell> run_grid(const std::vector<StreamWithTruth>& streams,
                                      const std::vector<DetectorConfig>& configs) {
  if (streams.empty() || configs.empty())
    throw std::invalid_argument("run_grid: need at least one stream and one config");
  std::vector<GridCell> cells;
  cells.reserve(streams.size() * configs.size());
  for (std::size_t si = 0; si < streams.size(); ++si) {
    for (std::size_t ci = 0; ci < configs.size(); ++ci) {
      GridCell cell;
      cell.stream_index = si;
      cell.config_index = ci;
      cell.fingerprint = config_fingerprint(configs[ci]);
      try {
        const auto reports = run_detector(streams[si].observations, configs[ci]);
        cell.metrics = evaluate_run(reports, streams[si]);
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

}  // namespace abcd
