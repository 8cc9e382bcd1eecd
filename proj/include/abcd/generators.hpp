#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "abcd/rng.hpp"

namespace abcd {

// Where changes happen and how wide the transition is. With explicit
// change_points the generator uses them as given; otherwise one change is
// placed every len_per_concept observations. interval = 1 is an abrupt
// switch; larger values ramp the new concept in linearly.
struct DriftSchedule {
  std::vector<std::int64_t> change_points;
  std::int64_t interval = 1;
};

struct ChangeTruth {
  std::int64_t index = 0;       // first observation index affected by the change
  std::vector<int> subspace;    // 1-based dimensions, sorted
  double severity_param = 0.0;  // absolute difference of the concept parameters
};

struct StreamWithTruth {
  std::string generator;
  std::uint64_t seed = 0;
  int d = 0;
  std::vector<Eigen::VectorXd> observations;  // all entries in [0,1]^d
  std::vector<ChangeTruth> changes;
};

// Per-step sampling rule inside a drift interval: at 0-based offset j from
// the change point the new concept is drawn with probability (j+1)/interval,
// so the ramp runs linearly from 1/interval up to 1 and interval = 1 is
// fully abrupt.
inline bool drift_pick_new(std::int64_t offset, std::int64_t interval, Rng& rng) {
  if (interval < 1) throw std::invalid_argument("drift_pick_new: interval must be >= 1");
  if (offset >= interval) return true;
  return rng.uniform01() < static_cast<double>(offset + 1) / static_cast<double>(interval);
}

namespace detail {

inline std::vector<std::int64_t> resolve_change_points(const DriftSchedule& schedule,
                                                       int n_concepts,
                                                       std::int64_t len_per_concept) {
  if (schedule.interval < 1)
    throw std::invalid_argument("DriftSchedule: interval must be >= 1");
  const std::int64_t total = static_cast<std::int64_t>(n_concepts) * len_per_concept;
  if (schedule.change_points.empty()) {
    std::vector<std::int64_t> points;
    for (int i = 1; i < n_concepts; ++i) points.push_back(i * len_per_concept);
    return points;
  }
  if (static_cast<int>(schedule.change_points.size()) != n_concepts - 1)
    throw std::invalid_argument("DriftSchedule: need n_concepts - 1 change points");
  std::int64_t prev = 0;
  for (std::int64_t cp : schedule.change_points) {
    if (cp <= prev || cp >= total)
      throw std::invalid_argument("DriftSchedule: change points must be strictly increasing "
                                  "and inside the stream");
    prev = cp;
  }
  return schedule.change_points;
}

// Concept in effect at index i: the most recent change wins, except inside
// its drift interval, where old and new are mixed along the linear ramp.
inline int concept_at(std::int64_t i, const std::vector<std::int64_t>& change_points,
                      std::int64_t interval, Rng& rng) {
  const auto it = std::upper_bound(change_points.begin(), change_points.end(), i);
  const int m = static_cast<int>(it - change_points.begin());
  if (m == 0) return 0;
  const std::int64_t offset = i - change_points[m - 1];
  if (offset >= interval) return m;
  return drift_pick_new(offset, interval, rng) ? m : m - 1;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Hypersphere generator: points uniform on the surface of a d_star-sphere
// that fits inside the unit cube, plus uniform noise dimensions. Changes move
// the center and radius.

struct SphereConcept {
  double radius = 0.0;
  Eigen::VectorXd center;  // size d_star
};

inline Eigen::VectorXd sphere_surface_point(const SphereConcept& sphere, int d, Rng& rng) {
  const int d_star = static_cast<int>(sphere.center.size());
  Eigen::VectorXd direction(d_star);
  double norm = 0.0;
  do {
    for (int j = 0; j < d_star; ++j) direction(j) = rng.normal();
    norm = direction.norm();
  } while (norm < 1e-12);
  Eigen::VectorXd x(d);
  x.head(d_star) = sphere.center + sphere.radius / norm * direction;
  for (int j = d_star; j < d; ++j) x(j) = rng.uniform01();
  return x;
}

// Concept parameters drawn ahead of the observations; radii and centers are
// kept away from the cube boundary so every surface point stays in [0,1].
inline std::vector<SphereConcept> draw_sphere_concepts(Rng& rng, int n_concepts, int d_star) {
  std::vector<SphereConcept> concepts(n_concepts);
  for (auto& c : concepts) {
    c.radius = rng.uniform(0.1, 0.35);
    c.center.resize(d_star);
    for (int j = 0; j < d_star; ++j) c.center(j) = rng.uniform(c.radius, 1.0 - c.radius);
  }
  return concepts;
}

inline std::vector<SphereConcept> draw_sphere_concepts(std::uint64_t seed, int n_concepts,
                                                       int d_star) {
  Rng rng(seed);
  return draw_sphere_concepts(rng, n_concepts, d_star);
}

inline StreamWithTruth gen_hsphere(int d, int d_star, int n_concepts,
                                   std::int64_t len_per_concept, const DriftSchedule& schedule,
                                   std::uint64_t seed) {
  if (d_star < 1 || d_star > d)
    throw std::domain_error("gen_hsphere: d_star must be in [1, d]");
  if (n_concepts < 1 || len_per_concept < 1)
    throw std::invalid_argument("gen_hsphere: need at least one concept and one observation");
  const auto change_points =
      detail::resolve_change_points(schedule, n_concepts, len_per_concept);

  Rng rng(seed);
  const std::vector<SphereConcept> concepts = draw_sphere_concepts(rng, n_concepts, d_star);

  StreamWithTruth stream;
  stream.generator = "hsphere";
  stream.seed = seed;
  stream.d = d;
  const std::int64_t total = static_cast<std::int64_t>(n_concepts) * len_per_concept;
  stream.observations.reserve(total);
  for (std::int64_t i = 0; i < total; ++i) {
    const int c = detail::concept_at(i, change_points, schedule.interval, rng);
    stream.observations.push_back(sphere_surface_point(concepts[c], d, rng));
  }
  for (std::size_t m = 0; m + 1 < concepts.size(); ++m) {
    ChangeTruth truth;
    truth.index = change_points[m];
    for (int j = 1; j <= d_star; ++j) truth.subspace.push_back(j);
    truth.severity_param = std::abs(concepts[m + 1].radius - concepts[m].radius) +
                           (concepts[m + 1].center - concepts[m].center).norm();
    stream.changes.push_back(std::move(truth));
  }
  return stream;
}

// ---------------------------------------------------------------------------
// Normal generator: d_star dimensions i.i.d. Normal(mu, sigma^2) clipped to
// [0,1], the rest uniform noise. Mean changes shift mu (direction flips when
// the shift would leave the comfortable range); variance changes scale sigma.

enum class NormalChangeKind { mean, variance };

inline StreamWithTruth gen_normal(int d, int d_star, NormalChangeKind kind,
                                  const std::vector<double>& shift_sizes,
                                  std::int64_t len_per_concept, const DriftSchedule& schedule,
                                  std::uint64_t seed) {
  if (d_star < 1 || d_star > d)
    throw std::domain_error("gen_normal: d_star must be in [1, d]");
  if (len_per_concept < 1)
    throw std::invalid_argument("gen_normal: need at least one observation per concept");
  const int n_concepts = static_cast<int>(shift_sizes.size()) + 1;
  const auto change_points =
      detail::resolve_change_points(schedule, n_concepts, len_per_concept);

  std::vector<double> mus{0.5};
  std::vector<double> sigmas{0.1};
  std::vector<double> severities;
  for (double shift : shift_sizes) {
    if (kind == NormalChangeKind::mean) {
      if (!(shift >= 0.0 && shift <= 0.45))
        throw std::invalid_argument("gen_normal: mean shift must be in [0, 0.45]");
      const double direction = mus.back() + shift <= 0.95 ? 1.0 : -1.0;
      mus.push_back(mus.back() + direction * shift);
      sigmas.push_back(sigmas.back());
      severities.push_back(shift);
    } else {
      if (!(shift > 0.0)) throw std::invalid_argument("gen_normal: variance scale must be > 0");
      mus.push_back(mus.back());
      sigmas.push_back(sigmas.back() * shift);
      severities.push_back(std::abs(sigmas.back() - sigmas[sigmas.size() - 2]));
    }
  }

  Rng rng(seed);
  StreamWithTruth stream;
  stream.generator = kind == NormalChangeKind::mean ? "normal-m" : "normal-v";
  stream.seed = seed;
  stream.d = d;
  const std::int64_t total = static_cast<std::int64_t>(n_concepts) * len_per_concept;
  stream.observations.reserve(total);
  for (std::int64_t i = 0; i < total; ++i) {
    const int c = detail::concept_at(i, change_points, schedule.interval, rng);
    Eigen::VectorXd x(d);
    for (int j = 0; j < d_star; ++j)
      x(j) = std::clamp(rng.normal(mus[c], sigmas[c]), 0.0, 1.0);
    for (int j = d_star; j < d; ++j) x(j) = rng.uniform01();
    stream.observations.push_back(std::move(x));
  }
  for (int m = 0; m + 1 < n_concepts; ++m) {
    ChangeTruth truth;
    truth.index = change_points[m];
    for (int j = 1; j <= d_star; ++j) truth.subspace.push_back(j);
    truth.severity_param = severities[m];
    stream.changes.push_back(std::move(truth));
  }
  return stream;
}

// ---------------------------------------------------------------------------
// LED generator: dimensions 1-7 hold the seven-segment pattern of a uniformly
// random digit with a per-bit flip probability, dimensions 8-24 are fair
// coin flips. Changes vary the flip probability.

inline constexpr int kLedDims = 24;
inline constexpr int kLedSegments = 7;

// Segment patterns for digits 0-9: top, top-left, top-right, middle,
// bottom-left, bottom-right, bottom.
inline constexpr std::array<std::array<int, 7>, 10> kLedDigitSegments = {{
    {1, 1, 1, 0, 1, 1, 1},  // 0
    {0, 0, 1, 0, 0, 1, 0},  // 1
    {1, 0, 1, 1, 1, 0, 1},  // 2
    {1, 0, 1, 1, 0, 1, 1},  // 3
    {0, 1, 1, 1, 0, 1, 0},  // 4
    {1, 1, 0, 1, 0, 1, 1},  // 5
    {1, 1, 0, 1, 1, 1, 1},  // 6
    {1, 0, 1, 0, 0, 1, 0},  // 7
    {1, 1, 1, 1, 1, 1, 1},  // 8
    {1, 1, 1, 1, 0, 1, 1},  // 9
}};

inline StreamWithTruth gen_led(int n_concepts, std::int64_t len_per_concept,
                               const std::vector<double>& noise_probs,
                               const DriftSchedule& schedule, std::uint64_t seed) {
  if (n_concepts < 1 || len_per_concept < 1)
    throw std::invalid_argument("gen_led: need at least one concept and one observation");
  if (static_cast<int>(noise_probs.size()) != n_concepts)
    throw std::invalid_argument("gen_led: need one noise probability per concept");
  for (double p : noise_probs)
    if (!(p >= 0.0 && p <= 0.5))
      throw std::domain_error("gen_led: noise probability must be in [0, 0.5]");
  const auto change_points =
      detail::resolve_change_points(schedule, n_concepts, len_per_concept);

  Rng rng(seed);
  StreamWithTruth stream;
  stream.generator = "led";
  stream.seed = seed;
  stream.d = kLedDims;
  const std::int64_t total = static_cast<std::int64_t>(n_concepts) * len_per_concept;
  stream.observations.reserve(total);
  for (std::int64_t i = 0; i < total; ++i) {
    const int c = detail::concept_at(i, change_points, schedule.interval, rng);
    const auto& pattern = kLedDigitSegments[static_cast<std::size_t>(rng.uniform_int(0, 9))];
    Eigen::VectorXd x(kLedDims);
    for (int j = 0; j < kLedSegments; ++j) {
      int bit = pattern[j];
      if (rng.bernoulli(noise_probs[c])) bit = 1 - bit;
      x(j) = static_cast<double>(bit);
    }
    for (int j = kLedSegments; j < kLedDims; ++j) x(j) = rng.bernoulli(0.5) ? 1.0 : 0.0;
    stream.observations.push_back(std::move(x));
  }
  for (int m = 0; m + 1 < n_concepts; ++m) {
    ChangeTruth truth;
    truth.index = change_points[m];
    for (int j = 1; j <= kLedSegments; ++j) truth.subspace.push_back(j);
    truth.severity_param = std::abs(noise_probs[m + 1] - noise_probs[m]);
    stream.changes.push_back(std::move(truth));
  }
  return stream;
}

// ---------------------------------------------------------------------------
// RBF generator: each concept owns a set of centroids; a sample picks a
// centroid at random and adds Gaussian noise. A change spins up a fresh
// centroid set from the next seed and replaces the values in a randomly
// sized, randomly chosen subspace.

inline Eigen::MatrixXd rbf_centroids(std::uint64_t seed, int n_centroids, int d) {
  Rng rng(seed);
  Eigen::MatrixXd centroids(n_centroids, d);
  for (int i = 0; i < n_centroids; ++i)
    for (int j = 0; j < d; ++j) centroids(i, j) = rng.uniform01();
  return centroids;
}

inline StreamWithTruth gen_rbf(int d, int n_centroids, std::int64_t len_per_concept,
                               int n_concepts, const DriftSchedule& schedule,
                               std::uint64_t seed, double noise_std = 0.05) {
  if (n_centroids < 1) throw std::invalid_argument("gen_rbf: need at least one centroid");
  if (n_concepts < 1 || len_per_concept < 1)
    throw std::invalid_argument("gen_rbf: need at least one concept and one observation");
  if (noise_std < 0.0) throw std::invalid_argument("gen_rbf: noise_std must be >= 0");
  const auto change_points =
      detail::resolve_change_points(schedule, n_concepts, len_per_concept);

  struct Source {
    Eigen::MatrixXd centroids;
    Rng rng;
  };
  std::vector<Source> sources;
  sources.reserve(n_concepts);
  for (int m = 0; m < n_concepts; ++m)
    sources.push_back(Source{rbf_centroids(seed + m, n_centroids, d), Rng(seed + m)});

  // Structural choices (subspace sizes and members) come from a separately
  // derived stream so they do not disturb the per-source sample draws.
  Rng structure(seed ^ 0xd1b54a32d192ed03ULL);
  std::vector<std::vector<int>> owner(n_concepts, std::vector<int>(d, 0));
  std::vector<ChangeTruth> changes;
  for (int m = 1; m < n_concepts; ++m) {
    owner[m] = owner[m - 1];
    const int size = static_cast<int>(structure.uniform_int(1, d));
    std::vector<int> dims(d);
    std::iota(dims.begin(), dims.end(), 0);
    for (int i = 0; i < size; ++i) {
      const int j = static_cast<int>(structure.uniform_int(i, d - 1));
      std::swap(dims[i], dims[j]);
    }
    dims.resize(size);
    std::sort(dims.begin(), dims.end());

    double displacement = 0.0;
    for (int dim : dims) {
      for (int cent = 0; cent < n_centroids; ++cent)
        displacement += std::abs(sources[m].centroids(cent, dim) -
                                 sources[owner[m - 1][dim]].centroids(cent, dim));
      owner[m][dim] = m;
    }
    displacement /= static_cast<double>(size * n_centroids);

    ChangeTruth truth;
    truth.index = change_points[m - 1];
    for (int dim : dims) truth.subspace.push_back(dim + 1);
    truth.severity_param = displacement;
    changes.push_back(std::move(truth));
  }

  const auto sample_source = [&](Source& s) {
    const int idx = static_cast<int>(s.rng.uniform_int(0, n_centroids - 1));
    Eigen::VectorXd x = s.centroids.row(idx).transpose();
    for (int j = 0; j < d; ++j) x(j) = std::clamp(x(j) + noise_std * s.rng.normal(), 0.0, 1.0);
    return x;
  };

  Rng drift_rng(seed ^ 0x2545f4914f6cdd1dULL);
  StreamWithTruth stream;
  stream.generator = "rbf";
  stream.seed = seed;
  stream.d = d;
  const std::int64_t total = static_cast<std::int64_t>(n_concepts) * len_per_concept;
  stream.observations.reserve(total);
  std::vector<Eigen::VectorXd> draws(n_concepts);
  for (std::int64_t i = 0; i < total; ++i) {
    for (int m = 0; m < n_concepts; ++m) draws[m] = sample_source(sources[m]);
    const int c = detail::concept_at(i, change_points, schedule.interval, drift_rng);
    Eigen::VectorXd x(d);
    for (int j = 0; j < d; ++j) x(j) = draws[owner[c][j]](j);
    stream.observations.push_back(std::move(x));
  }
  stream.changes = std::move(changes);
  return stream;
}

}  // namespace abcd
