#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "abcd/aggregate.hpp"
#include "abcd/bernstein.hpp"
#include "abcd/models.hpp"

namespace abcd {

struct SeverityUndefinedError : std::domain_error {
  using std::domain_error::domain_error;
};

struct DetectorConfig {
  double delta = 0.05;      // change is declared when the score drops below delta
  double tau = 2.5;         // per-dimension score threshold for subspace membership
  int n_min = 100;          // warm-up sample size used for (re)training
  int k_max = 20;           // cap on evaluated window splits per observation
  std::int64_t n_max = 0;   // cap on stored window entries; 0 = unlimited
  double M = 0.1;           // almost-sure bound on |loss - mean|
  ModelConfig model;

  void validate() const {
    if (!(delta > 0.0 && delta < 1.0))
      throw std::invalid_argument("DetectorConfig: delta must be in (0,1)");
    if (!(tau >= 0.0 && tau <= 4.0))
      throw std::invalid_argument("DetectorConfig: tau must be in [0,4]");
    if (n_min < 4) throw std::invalid_argument("DetectorConfig: n_min must be >= 4");
    if (k_max < 1) throw std::invalid_argument("DetectorConfig: k_max must be >= 1");
    if (n_max != 0 && n_max < 4)
      throw std::invalid_argument("DetectorConfig: n_max must be 0 or >= 4");
    if (!(M > 0.0)) throw std::invalid_argument("DetectorConfig: M must be > 0");
    if (!(model.eta < 1.0))
      throw std::invalid_argument("DetectorConfig: eta must be < 1 (bottleneck below d)");
    model.validate();
  }

  BernsteinParams bernstein() const { return BernsteinParams{M, delta, 0.05}; }
};

// One monitored observation: the cumulative loss aggregate (its n is the
// 1-based position since the window origin), the per-dimension squared
// errors, and the raw observation kept for retraining after a change.
struct WindowEntry {
  std::int64_t global_index = 0;
  Aggregate aggregate;
  LossVector loss;
  Eigen::VectorXd x;
};

struct ChangeReport {
  std::int64_t t_detected = 0;  // stream index (0-based) at which the change was declared
  std::int64_t t_star = 0;      // stream index of the estimated change point (last pre-change)
  double p = 0.0;               // change score, always < delta in a report
  std::vector<int> subspace;    // affected dimensions, 1-based, sorted; may be empty
  double severity = 0.0;
  bool subspace_fallback = false;  // true when severity used all dimensions
};

// Split positions evaluated for a window of the given length: exhaustive
// while the window is short, otherwise every floor(i*len/k_max)-th position,
// filtered to [2, len-2], deduplicated, ascending. Lengths below 4 admit no
// split and yield an empty list.
inline std::vector<std::int64_t> select_splits(std::int64_t window_len, std::int64_t k_max) {
  std::vector<std::int64_t> splits;
  if (window_len < 4) return splits;
  if (window_len <= k_max) {
    for (std::int64_t k = 2; k <= window_len - 2; ++k) splits.push_back(k);
    return splits;
  }
  for (std::int64_t i = 1; i <= k_max; ++i) {
    const std::int64_t k = i * window_len / k_max;
    if (k >= 2 && k <= window_len - 2 && (splits.empty() || splits.back() != k))
      splits.push_back(k);
  }
  return splits;
}

// Identifies the dimensions whose loss changed across the split. For each
// dimension the per-dimension squared errors before and after the split give
// a mean and a population standard deviation; the Bernstein bound on their
// gap is compared against tau. entries[0..n_before) is the "before" side.
inline std::vector<int> detect_subspace(std::span<const WindowEntry> entries,
                                        std::int64_t n_before, double tau, double M) {
  const std::int64_t n = static_cast<std::int64_t>(entries.size());
  if (n_before < 2 || n - n_before < 2)
    throw std::domain_error("detect_subspace: need at least 2 entries on each side");
  const std::int64_t n_after = n - n_before;
  const int d = static_cast<int>(entries[0].loss.per_dim.size());
  const double kappa_value = kappa(n_before, n_after);

  Eigen::VectorXd mean_before = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd mean_after = Eigen::VectorXd::Zero(d);
  for (std::int64_t i = 0; i < n_before; ++i) mean_before += entries[i].loss.per_dim;
  for (std::int64_t i = n_before; i < n; ++i) mean_after += entries[i].loss.per_dim;
  mean_before /= static_cast<double>(n_before);
  mean_after /= static_cast<double>(n_after);

  Eigen::VectorXd var_before = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd var_after = Eigen::VectorXd::Zero(d);
  for (std::int64_t i = 0; i < n_before; ++i)
    var_before += (entries[i].loss.per_dim - mean_before).array().square().matrix();
  for (std::int64_t i = n_before; i < n; ++i)
    var_after += (entries[i].loss.per_dim - mean_after).array().square().matrix();
  var_before /= static_cast<double>(n_before);
  var_after /= static_cast<double>(n_after);

  std::vector<int> subspace;
  for (int j = 0; j < d; ++j) {
    const double eps = std::abs(mean_before(j) - mean_after(j));
    const double p_j =
        bernstein_bound_at(n_before, n_after, var_before(j), var_after(j), eps, M, kappa_value);
    if (p_j < tau) subspace.push_back(j + 1);
  }
  return subspace;
}

// Change severity: the post-change mean of the subspace-averaged loss,
// standard-normalized by the pre-change population deviation (floored at
// 1e-12). entries[0..n_before) is the "before" side.
inline double severity(std::span<const WindowEntry> entries, std::int64_t n_before,
                       const std::vector<int>& subspace) {
  if (subspace.empty()) throw SeverityUndefinedError("severity: empty subspace");
  const std::int64_t n = static_cast<std::int64_t>(entries.size());
  if (n_before < 2 || n - n_before < 1)
    throw std::domain_error("severity: need 2 entries before and 1 after the split");

  const auto subspace_mean = [&](const WindowEntry& e) {
    double sum = 0.0;
    for (int j : subspace) sum += e.loss.per_dim(j - 1);
    return sum / static_cast<double>(subspace.size());
  };

  double mean_before = 0.0;
  for (std::int64_t i = 0; i < n_before; ++i) mean_before += subspace_mean(entries[i]);
  mean_before /= static_cast<double>(n_before);

  double var_before = 0.0;
  for (std::int64_t i = 0; i < n_before; ++i) {
    const double dev = subspace_mean(entries[i]) - mean_before;
    var_before += dev * dev;
  }
  var_before /= static_cast<double>(n_before);

  double mean_after = 0.0;
  for (std::int64_t i = n_before; i < n; ++i) mean_after += subspace_mean(entries[i]);
  mean_after /= static_cast<double>(n - n_before);

  const double sigma = std::max(std::sqrt(var_before), 1e-12);
  return std::abs(mean_after - mean_before) / sigma;
}

// Streaming change detector over the reconstruction loss of an
// encoder-decoder model.
//
// Life cycle per restart: collect n_min raw observations, train the model on
// them, then monitor. Each monitored observation appends a window entry and
// the change score is evaluated over at most k_max splits. When the score
// drops below delta, the subspace and severity are computed, the window is
// truncated to the entries after the estimated change point (keeping only
// the raw observations), and the cycle restarts; if enough observations were
// retained the model is retrained immediately.
//
// A detector instance is a sequential state machine: one process() call at a
// time. Distinct instances are independent.
class AbcdDetector {
 public:
  explicit AbcdDetector(DetectorConfig config) : config_(std::move(config)) {
    config_.validate();
    params_ = config_.bernstein();
  }

  // Starts with a pre-trained model: monitoring begins at the first
  // observation, with no initial warm-up.
  AbcdDetector(DetectorConfig config, std::unique_ptr<EncoderDecoder> model)
      : AbcdDetector(std::move(config)) {
    model_ = std::move(model);
    d_ = model_->dim();
  }

  // Bulk-loads warm-up observations into a fresh detector, mirroring the
  // retained window after a detection: if at least n_min rows arrive the
  // model is trained on all of them at once.
  void seed_warmup(const std::vector<Eigen::VectorXd>& rows) {
    if (model_ || !store_.empty() || !pending_.empty())
      throw std::logic_error("seed_warmup: detector already started");
    for (const auto& row : rows) {
      validate_input(row);
      pending_.emplace_back(next_index_++, row);
    }
    if (static_cast<int>(pending_.size()) >= config_.n_min) train_now();
  }

  std::optional<ChangeReport> process(const Eigen::VectorXd& x) {
    validate_input(x);
    const std::int64_t gidx = next_index_++;

    if (!model_) {
      pending_.emplace_back(gidx, x);
      if (static_cast<int>(pending_.size()) >= config_.n_min) train_now();
      return std::nullopt;
    }

    const Eigen::VectorXd x_hat = model_->reconstruct(x);
    WindowEntry entry;
    entry.global_index = gidx;
    entry.loss = loss(x, x_hat);
    entry.aggregate = aggregate_update(
        window().empty() ? Aggregate{} : window().back().aggregate, entry.loss.total);
    entry.x = x;
    push_entry(std::move(entry));
    if (config_.n_max > 0 && static_cast<std::int64_t>(window().size()) > config_.n_max)
      evict_front();

    const std::span<const WindowEntry> entries = window();
    const std::int64_t t = entries.back().aggregate.n;
    // Split candidates must leave two retained entries on each side so the
    // subspace statistics are defined even after eviction.
    const std::int64_t oldest = entries.front().aggregate.n;
    std::vector<SplitStats> stats;
    for (std::int64_t k : select_splits(t, config_.k_max)) {
      if (k <= oldest) continue;
      stats.push_back(suffix_stats(entries.back().aggregate, aggregate_at(k)));
    }
    if (stats.empty()) return std::nullopt;

    const ScoreResult score = change_score(stats, params_);
    if (!(score.p < config_.delta)) return std::nullopt;

    // Change detected at prefix length k = score.split_index.
    const std::int64_t k = score.split_index;
    const std::int64_t local_before = k - oldest + 1;  // retained entries at or before k

    ChangeReport report;
    report.t_detected = gidx;
    report.t_star = entries[static_cast<std::size_t>(k - oldest)].global_index;
    report.p = score.p;
    report.subspace = detect_subspace(entries, local_before, config_.tau, config_.M);
    report.subspace_fallback = report.subspace.empty();
    if (report.subspace_fallback) {
      std::vector<int> all(d_);
      for (int j = 0; j < d_; ++j) all[j] = j + 1;
      report.severity = severity(entries, local_before, all);
    } else {
      report.severity = severity(entries, local_before, report.subspace);
    }

    // Keep only the raw observations after the change point; they seed the
    // next warm-up and are retrained on immediately if there are enough.
    pending_.clear();
    for (const WindowEntry& e : entries)
      if (e.aggregate.n > k) pending_.emplace_back(e.global_index, e.x);
    store_.clear();
    head_ = 0;
    model_.reset();
    if (static_cast<int>(pending_.size()) >= config_.n_min) train_now();

    return report;
  }

  const DetectorConfig& config() const { return config_; }
  const EncoderDecoder* model() const { return model_.get(); }
  bool warmed_up() const { return model_ != nullptr; }
  std::int64_t observations() const { return next_index_; }
  std::int64_t window_size() const { return static_cast<std::int64_t>(window().size()); }
  int dim() const { return d_; }

 private:
  void validate_input(const Eigen::VectorXd& x) {
    if (d_ == 0) {
      d_ = static_cast<int>(x.size());
      if (d_ < 2) throw std::domain_error("process: need at least 2 dimensions");
      const int d_prime = config_.model.bottleneck(d_);
      if (d_prime < 1)
        throw std::invalid_argument("process: eta * d yields an empty bottleneck");
      if (config_.n_min < d_prime + 1)
        throw std::invalid_argument("process: n_min must exceed the bottleneck size");
    }
    if (x.size() != d_) throw std::domain_error("process: dimension mismatch");
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (!std::isfinite(x(i)) || x(i) < 0.0 || x(i) > 1.0)
        throw std::domain_error("process: observation outside [0,1]");
    }
  }

  void train_now() {
    Eigen::MatrixXd X(pending_.size(), d_);
    for (std::size_t i = 0; i < pending_.size(); ++i) X.row(i) = pending_[i].second;
    model_ = train_model(X, config_.model);
    pending_.clear();
    store_.clear();
    head_ = 0;
  }

  // The live window is store_[head_..end); evicting advances head_ and the
  // dead prefix is compacted away in batches, keeping eviction amortized O(1)
  // while the entries stay contiguous.
  std::span<const WindowEntry> window() const {
    return std::span<const WindowEntry>(store_.data() + head_, store_.size() - head_);
  }

  void push_entry(WindowEntry entry) { store_.push_back(std::move(entry)); }

  void evict_front() {
    ++head_;
    if (head_ >= 4096 && head_ * 2 >= store_.size()) {
      store_.erase(store_.begin(), store_.begin() + static_cast<std::ptrdiff_t>(head_));
      head_ = 0;
    }
  }

  // Aggregate of the entry at cumulative position k; positions in the window
  // are contiguous, so the offset from the front entry addresses it.
  const Aggregate& aggregate_at(std::int64_t k) const {
    const std::span<const WindowEntry> entries = window();
    return entries[static_cast<std::size_t>(k - entries.front().aggregate.n)].aggregate;
  }

  DetectorConfig config_;
  BernsteinParams params_;
  int d_ = 0;
  std::int64_t next_index_ = 0;
  std::vector<std::pair<std::int64_t, Eigen::VectorXd>> pending_;
  std::unique_ptr<EncoderDecoder> model_;
  std::vector<WindowEntry> store_;
  std::size_t head_ = 0;
};

}  // namespace abcd
