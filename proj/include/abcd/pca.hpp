#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <vector>

#include "abcd/model.hpp"

namespace abcd {

// Linear principal-component model: mean-center, project onto the top d'
// eigenvectors of the covariance, map back, clamp into the unit cube.
class PcaModel final : public EncoderDecoder {
 public:
  // X is n x d with rows as observations. Eigenpairs are ordered by
  // descending eigenvalue, ties by the solver's original column index, so
  // refits of identical data are bit-identical.
  static PcaModel fit(const Eigen::MatrixXd& X, int d_prime) {
    detail::check_training_matrix(X, d_prime);
    const int d = static_cast<int>(X.cols());
    if (d_prime < 1 || d_prime > d)
      throw std::invalid_argument("PcaModel: bottleneck must be in [1, d]");

    PcaModel m;
    m.mean_ = X.colwise().mean();
    const Eigen::MatrixXd centered = X.rowwise() - m.mean_.transpose();
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(X.rows());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success)
      throw std::runtime_error("PcaModel: eigendecomposition failed");

    std::vector<int> order(d);
    std::iota(order.begin(), order.end(), 0);
    const Eigen::VectorXd& values = solver.eigenvalues();
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return values(a) > values(b);
    });

    m.eigenvalues_.resize(d);
    m.components_.resize(d, d_prime);
    for (int i = 0; i < d; ++i) m.eigenvalues_(i) = values(order[i]);
    for (int i = 0; i < d_prime; ++i) m.components_.col(i) = solver.eigenvectors().col(order[i]);
    return m;
  }

  ModelKind kind() const override { return ModelKind::pca; }
  int dim() const override { return static_cast<int>(mean_.size()); }
  int bottleneck() const override { return static_cast<int>(components_.cols()); }

  // Linear reconstruction without the unit-cube clamp.
  Eigen::VectorXd project(const Eigen::VectorXd& x) const {
    detail::check_reconstruct_input(x, dim());
    return mean_ + components_ * (components_.transpose() * (x - mean_));
  }

  Eigen::VectorXd reconstruct(const Eigen::VectorXd& x) const override {
    return project(x).cwiseMax(0.0).cwiseMin(1.0);
  }

  // Covariance eigenvalues (all d, descending); the mean squared training
  // residual equals the sum of the discarded ones.
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const Eigen::VectorXd& center() const { return mean_; }
  const Eigen::MatrixXd& components() const { return components_; }

  static PcaModel from_parts(Eigen::VectorXd mean, Eigen::MatrixXd components,
                             Eigen::VectorXd eigenvalues) {
    PcaModel m;
    m.mean_ = std::move(mean);
    m.components_ = std::move(components);
    m.eigenvalues_ = std::move(eigenvalues);
    return m;
  }

 private:
  PcaModel() = default;

  Eigen::VectorXd mean_;
  Eigen::MatrixXd components_;  // d x d', orthonormal columns
  Eigen::VectorXd eigenvalues_;
};

}  // namespace abcd
