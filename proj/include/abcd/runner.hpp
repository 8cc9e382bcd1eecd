#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "abcd/detector.hpp"
#include "abcd/io.hpp"

namespace abcd {

struct RunOptions {
  DetectorConfig detector;
  bool normalize = false;
  std::optional<Normalizer> fixed_bounds;  // pre-fit bounds; never refit
};

struct RunSummary {
  std::int64_t processed = 0;
  std::int64_t reports = 0;
  double mean_latency_us = 0.0;
};

// Drives a detector over a stream of raw rows, taking care of min-max
// normalization when asked for.
//
// Without normalization (or with fixed bounds) rows pass straight through a
// single detector. With fitted normalization the runner owns the warm-up:
// rows are buffered until n_min arrived, the bounds are fit on the buffer,
// and the buffered rows seed a fresh detector. After each detected change
// the rows after the estimated change point are replayed the same way, so
// every restart is normalized against its own warm-up sample and the
// detector never sees mixed scales.
class StreamRunner {
 public:
  explicit StreamRunner(RunOptions options, std::unique_ptr<EncoderDecoder> model = nullptr)
      : options_(std::move(options)) {
    options_.detector.validate();
    if (options_.normalize && options_.fixed_bounds) normalizer_ = *options_.fixed_bounds;
    if (!options_.normalize || options_.fixed_bounds) {
      detector_ = model ? std::make_unique<AbcdDetector>(options_.detector, std::move(model))
                        : std::make_unique<AbcdDetector>(options_.detector);
      buffering_ = false;
    } else {
      if (model)
        throw std::invalid_argument("StreamRunner: a preloaded model requires fixed bounds");
      buffering_ = true;
    }
  }

  std::optional<ChangeReport> push(const Eigen::VectorXd& raw) {
    const auto start = std::chrono::steady_clock::now();
    auto report = push_impl(raw);
    const auto stop = std::chrono::steady_clock::now();
    latency_sum_us_ += std::chrono::duration<double, std::micro>(stop - start).count();
    ++summary_.processed;
    if (report) ++summary_.reports;
    return report;
  }

  RunSummary summary() const {
    RunSummary s = summary_;
    if (s.processed > 0) s.mean_latency_us = latency_sum_us_ / static_cast<double>(s.processed);
    return s;
  }

  const AbcdDetector* detector() const { return detector_.get(); }
  const std::optional<Normalizer>& normalizer() const { return normalizer_; }

 private:
  std::optional<ChangeReport> push_impl(const Eigen::VectorXd& raw) {
    const std::int64_t gidx = next_index_++;

    if (buffering_) {
      buffer_.emplace_back(gidx, raw);
      if (static_cast<int>(buffer_.size()) >= options_.detector.n_min) flush_buffer();
      return std::nullopt;
    }

    const Eigen::VectorXd x = normalizer_ ? normalizer_->transform(raw) : raw;
    if (track_history_) {
      history_.emplace_back(gidx, raw);
      trim_history();
    }
    auto report = detector_->process(x);
    if (!report) return std::nullopt;

    report->t_detected += detector_start_;
    report->t_star += detector_start_;

    if (track_history_) {
      // Restart from the raw rows after the change point, refitting the
      // bounds on the new warm-up.
      buffer_.clear();
      for (const auto& [idx, row] : history_)
        if (idx > report->t_star) buffer_.emplace_back(idx, row);
      history_.clear();
      detector_.reset();
      buffering_ = true;
      if (static_cast<int>(buffer_.size()) >= options_.detector.n_min) flush_buffer();
    }
    return report;
  }

  void flush_buffer() {
    Normalizer fitted;
    {
      std::vector<Eigen::VectorXd> rows;
      rows.reserve(buffer_.size());
      for (const auto& [idx, row] : buffer_) rows.push_back(row);
      fitted = Normalizer::fit(rows);
      normalizer_ = fitted;
      detector_ = std::make_unique<AbcdDetector>(options_.detector);
      detector_start_ = buffer_.front().first;
      std::vector<Eigen::VectorXd> normalized;
      normalized.reserve(rows.size());
      for (const auto& row : rows) normalized.push_back(fitted.transform(row));
      detector_->seed_warmup(normalized);
      for (const auto& [idx, row] : buffer_) history_.emplace_back(idx, row);
    }
    buffer_.clear();
    buffering_ = false;
    track_history_ = true;
    trim_history();
  }

  // Rows older than the window cap can never be carried over, since the
  // retained window after a detection holds at most n_max entries.
  void trim_history() {
    if (options_.detector.n_max <= 0) return;
    while (static_cast<std::int64_t>(history_.size()) > options_.detector.n_max)
      history_.pop_front();
  }

  RunOptions options_;
  std::optional<Normalizer> normalizer_;
  std::unique_ptr<AbcdDetector> detector_;
  bool buffering_ = false;
  bool track_history_ = false;  // only needed when bounds are refit per restart
  std::int64_t next_index_ = 0;
  std::int64_t detector_start_ = 0;
  std::vector<std::pair<std::int64_t, Eigen::VectorXd>> buffer_;
  std::deque<std::pair<std::int64_t, Eigen::VectorXd>> history_;
  RunSummary summary_;
  double latency_sum_us_ = 0.0;
};

}  // namespace abcd
