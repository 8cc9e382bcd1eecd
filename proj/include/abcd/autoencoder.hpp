#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <utility>

#include "abcd/adam.hpp"
#include "abcd/model.hpp"
#include "abcd/rng.hpp"

namespace abcd {

// Fully connected autoencoder with one hidden ReLU layer of width d' and a
// sigmoid output layer, trained with full-batch gradient descent and Adam.
class AutoencoderModel final : public EncoderDecoder {
 public:
  struct Weights {
    Eigen::MatrixXd w1;  // d' x d
    Eigen::VectorXd b1;  // d'
    Eigen::MatrixXd w2;  // d x d'
    Eigen::VectorXd b2;  // d
  };

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)), filled in a fixed row-major
  // order so a seed pins the weights exactly.
  static Weights init_weights(int d, int d_prime, Rng& rng) {
    Weights w;
    const double s1 = 1.0 / std::sqrt(static_cast<double>(d));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(d_prime));
    w.w1.resize(d_prime, d);
    for (int i = 0; i < d_prime; ++i)
      for (int j = 0; j < d; ++j) w.w1(i, j) = rng.uniform(-s1, s1);
    w.b1.resize(d_prime);
    for (int i = 0; i < d_prime; ++i) w.b1(i) = rng.uniform(-s1, s1);
    w.w2.resize(d, d_prime);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d_prime; ++j) w.w2(i, j) = rng.uniform(-s2, s2);
    w.b2.resize(d);
    for (int i = 0; i < d; ++i) w.b2(i) = rng.uniform(-s2, s2);
    return w;
  }

  // Mean squared reconstruction error over all entries of the batch.
  static double batch_loss(const Weights& w, const Eigen::MatrixXd& X) {
    const Eigen::MatrixXd out = forward(w, X);
    return (out - X).squaredNorm() / static_cast<double>(X.rows() * X.cols());
  }

  // Analytic gradient of batch_loss with respect to every weight.
  static Weights batch_gradients(const Weights& w, const Eigen::MatrixXd& X) {
    const Eigen::Index n = X.rows();
    const Eigen::Index d = X.cols();
    const Eigen::MatrixXd z1 =
        (X * w.w1.transpose()).rowwise() + w.b1.transpose();        // n x d'
    const Eigen::MatrixXd h = z1.cwiseMax(0.0);                     // n x d'
    const Eigen::MatrixXd z2 =
        (h * w.w2.transpose()).rowwise() + w.b2.transpose();        // n x d
    const Eigen::MatrixXd y = sigmoid(z2);                          // n x d

    const double scale = 2.0 / static_cast<double>(n * d);
    const Eigen::MatrixXd dz2 =
        (scale * (y - X).array() * y.array() * (1.0 - y.array())).matrix();
    Weights g;
    g.w2 = dz2.transpose() * h;
    g.b2 = dz2.colwise().sum();
    const Eigen::MatrixXd dz1 =
        ((dz2 * w.w2).array() * (z1.array() > 0.0).cast<double>()).matrix();
    g.w1 = dz1.transpose() * X;
    g.b1 = dz1.colwise().sum();
    return g;
  }

  static AutoencoderModel train(const Eigen::MatrixXd& X, int d_prime, int epochs,
                                double learning_rate, std::uint64_t seed) {
    detail::check_training_matrix(X, d_prime);
    const int d = static_cast<int>(X.cols());
    if (d_prime < 1 || d_prime > d)
      throw std::invalid_argument("AutoencoderModel: bottleneck must be in [1, d]");

    Rng rng(seed);
    AutoencoderModel m;
    m.weights_ = init_weights(d, d_prime, rng);

    AdamState s_w1(m.weights_.w1.size()), s_b1(m.weights_.b1.size());
    AdamState s_w2(m.weights_.w2.size()), s_b2(m.weights_.b2.size());
    for (int epoch = 0; epoch < epochs; ++epoch) {
      const Weights g = batch_gradients(m.weights_, X);
      adam_step(flat(m.weights_.w1), flat_const(g.w1), s_w1, learning_rate);
      adam_step(flat(m.weights_.b1), flat_const(g.b1), s_b1, learning_rate);
      adam_step(flat(m.weights_.w2), flat_const(g.w2), s_w2, learning_rate);
      adam_step(flat(m.weights_.b2), flat_const(g.b2), s_b2, learning_rate);
    }
    return m;
  }

  ModelKind kind() const override { return ModelKind::autoencoder; }
  int dim() const override { return static_cast<int>(weights_.w1.cols()); }
  int bottleneck() const override { return static_cast<int>(weights_.w1.rows()); }

  Eigen::VectorXd reconstruct(const Eigen::VectorXd& x) const override {
    detail::check_reconstruct_input(x, dim());
    const Eigen::VectorXd h = (weights_.w1 * x + weights_.b1).cwiseMax(0.0);
    const Eigen::VectorXd z = weights_.w2 * h + weights_.b2;
    return (1.0 / (1.0 + (-z.array()).exp())).matrix();
  }

  const Weights& weights() const { return weights_; }

  static AutoencoderModel from_weights(Weights w) {
    AutoencoderModel m;
    m.weights_ = std::move(w);
    return m;
  }

 private:
  AutoencoderModel() = default;

  static Eigen::MatrixXd forward(const Weights& w, const Eigen::MatrixXd& X) {
    const Eigen::MatrixXd h =
        ((X * w.w1.transpose()).rowwise() + w.b1.transpose()).cwiseMax(0.0);
    return sigmoid((h * w.w2.transpose()).rowwise() + w.b2.transpose());
  }

  static Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) {
    return (1.0 / (1.0 + (-z.array()).exp())).matrix();
  }

  static Eigen::Map<Eigen::ArrayXd> flat(Eigen::MatrixXd& m) {
    return Eigen::Map<Eigen::ArrayXd>(m.data(), m.size());
  }
  static Eigen::Map<Eigen::ArrayXd> flat(Eigen::VectorXd& v) {
    return Eigen::Map<Eigen::ArrayXd>(v.data(), v.size());
  }
  static Eigen::Map<const Eigen::ArrayXd> flat_const(const Eigen::MatrixXd& m) {
    return Eigen::Map<const Eigen::ArrayXd>(m.data(), m.size());
  }
  static Eigen::Map<const Eigen::ArrayXd> flat_const(const Eigen::VectorXd& v) {
    return Eigen::Map<const Eigen::ArrayXd>(v.data(), v.size());
  }

  Weights weights_;
};

}  // namespace abcd
