#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "abcd/model.hpp"

namespace abcd {

// RBF kernel PCA with a learned linear pre-image map.
//
// Fitting eigendecomposes the double-centered kernel matrix and keeps the
// top d' components. Since kernel space has no exact inverse, reconstruction
// uses a ridge-regularized linear regression from the training projections
// back to the inputs, fit once at training time. The reconstructions are
// rough, but the detector only consumes changes in their error.
class KernelPcaModel final : public EncoderDecoder {
 public:
  static constexpr double kRidge = 1e-3;

  static KernelPcaModel fit(const Eigen::MatrixXd& X, int d_prime, double gamma) {
    detail::check_training_matrix(X, d_prime);
    const int n = static_cast<int>(X.rows());
    const int d = static_cast<int>(X.cols());
    if (d_prime < 1 || d_prime > std::min(n, d))
      throw std::invalid_argument("KernelPcaModel: bottleneck must be in [1, min(n, d)]");

    KernelPcaModel m;
    m.gamma_ = gamma > 0.0 ? gamma : 1.0 / static_cast<double>(d);
    m.support_ = X;

    Eigen::MatrixXd kernel(n, n);
    for (int i = 0; i < n; ++i) {
      kernel(i, i) = 1.0;
      for (int j = i + 1; j < n; ++j) {
        const double sq = (X.row(i) - X.row(j)).squaredNorm();
        kernel(i, j) = kernel(j, i) = std::exp(-m.gamma_ * sq);
      }
    }
    m.row_mean_ = kernel.colwise().mean();
    m.total_mean_ = m.row_mean_.mean();
    Eigen::MatrixXd centered = kernel;
    centered.colwise() -= m.row_mean_;
    centered.rowwise() -= m.row_mean_.transpose();
    centered.array() += m.total_mean_;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(centered);
    if (solver.info() != Eigen::Success)
      throw std::runtime_error("KernelPcaModel: eigendecomposition failed");

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    const Eigen::VectorXd& values = solver.eigenvalues();
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return values(a) > values(b); });

    m.alphas_.resize(n, d_prime);
    for (int i = 0; i < d_prime; ++i) {
      const double lambda = std::max(values(order[i]), 1e-12);
      m.alphas_.col(i) = solver.eigenvectors().col(order[i]) / std::sqrt(lambda);
    }

    // Pre-image: ridge regression from projections to inputs.
    const Eigen::MatrixXd Z = centered * m.alphas_;  // n x d'
    m.z_mean_ = Z.colwise().mean();
    m.x_mean_ = X.colwise().mean();
    const Eigen::MatrixXd Zc = Z.rowwise() - m.z_mean_.transpose();
    const Eigen::MatrixXd Xc = X.rowwise() - m.x_mean_.transpose();
    const Eigen::MatrixXd gram =
        Zc.transpose() * Zc + kRidge * Eigen::MatrixXd::Identity(d_prime, d_prime);
    m.preimage_ = gram.ldlt().solve(Zc.transpose() * Xc);  // d' x d
    return m;
  }

  ModelKind kind() const override { return ModelKind::kpca; }
  int dim() const override { return static_cast<int>(support_.cols()); }
  int bottleneck() const override { return static_cast<int>(alphas_.cols()); }

  Eigen::VectorXd encode(const Eigen::VectorXd& x) const {
    detail::check_reconstruct_input(x, dim());
    const int n = static_cast<int>(support_.rows());
    Eigen::VectorXd k(n);
    for (int i = 0; i < n; ++i)
      k(i) = std::exp(-gamma_ * (support_.row(i).transpose() - x).squaredNorm());
    const double k_mean = k.mean();
    const Eigen::VectorXd centered =
        k - row_mean_ - Eigen::VectorXd::Constant(n, k_mean - total_mean_);
    return alphas_.transpose() * centered;
  }

  Eigen::VectorXd reconstruct(const Eigen::VectorXd& x) const override {
    const Eigen::VectorXd z = encode(x);
    const Eigen::VectorXd y = x_mean_ + preimage_.transpose() * (z - z_mean_);
    return y.cwiseMax(0.0).cwiseMin(1.0);
  }

  double gamma() const { return gamma_; }
  const Eigen::MatrixXd& support() const { return support_; }
  const Eigen::VectorXd& row_mean() const { return row_mean_; }
  double total_mean() const { return total_mean_; }
  const Eigen::MatrixXd& alphas() const { return alphas_; }
  const Eigen::MatrixXd& preimage() const { return preimage_; }
  const Eigen::VectorXd& z_mean() const { return z_mean_; }
  const Eigen::VectorXd& x_mean() const { return x_mean_; }

  static KernelPcaModel from_parts(Eigen::MatrixXd support, double gamma, Eigen::VectorXd row_mean,
                                   double total_mean, Eigen::MatrixXd alphas,
                                   Eigen::MatrixXd preimage, Eigen::VectorXd z_mean,
                                   Eigen::VectorXd x_mean) {
    KernelPcaModel m;
    m.support_ = std::move(support);
    m.gamma_ = gamma;
    m.row_mean_ = std::move(row_mean);
    m.total_mean_ = total_mean;
    m.alphas_ = std::move(alphas);
    m.preimage_ = std::move(preimage);
    m.z_mean_ = std::move(z_mean);
    m.x_mean_ = std::move(x_mean);
    return m;
  }

 private:
  KernelPcaModel() = default;

  Eigen::MatrixXd support_;   // n x d training points
  double gamma_ = 0.0;
  Eigen::VectorXd row_mean_;  // column means of the uncentered kernel
  double total_mean_ = 0.0;
  Eigen::MatrixXd alphas_;    // n x d', eigenvectors scaled by 1/sqrt(lambda)
  Eigen::MatrixXd preimage_;  // d' x d ridge coefficients
  Eigen::VectorXd z_mean_;
  Eigen::VectorXd x_mean_;
};

}  // namespace abcd
