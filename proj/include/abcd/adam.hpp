#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace abcd {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Eigen::ArrayXd m;  // first-moment estimate
  Eigen::ArrayXd v;  // second-moment estimate
  std::int64_t step = 0;

  explicit AdamState(Eigen::Index size)
      : m(Eigen::ArrayXd::Zero(size)), v(Eigen::ArrayXd::Zero(size)) {}
};

// One Adam update on a flat parameter vector. Bias-corrected moments, update
// params -= lr * m_hat / (sqrt(v_hat) + eps).
inline void adam_step(Eigen::Ref<Eigen::ArrayXd> params, const Eigen::Ref<const Eigen::ArrayXd>& grads,
                      AdamState& state, double learning_rate, const AdamConfig& cfg = {}) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw std::invalid_argument("adam_step: shape mismatch");
  state.step += 1;
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grads;
  state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grads.square();
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  params -= learning_rate * (state.m / bc1) / ((state.v / bc2).sqrt() + cfg.eps);
}

}  // namespace abcd
