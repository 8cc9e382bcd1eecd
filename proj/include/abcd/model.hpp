#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace abcd {

struct InsufficientTrainingDataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ModelKind { pca, kpca, autoencoder };

inline std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::pca: return "pca";
    case ModelKind::kpca: return "kpca";
    case ModelKind::autoencoder: return "autoencoder";
  }
  throw std::logic_error("to_string: unknown ModelKind");
}

inline ModelKind model_kind_from_string(const std::string& name) {
  if (name == "pca") return ModelKind::pca;
  if (name == "kpca") return ModelKind::kpca;
  if (name == "autoencoder" || name == "ae") return ModelKind::autoencoder;
  throw std::invalid_argument("unknown model kind: " + name);
}

struct ModelConfig {
  ModelKind kind = ModelKind::pca;
  double eta = 0.5;             // bottleneck fraction, d' = floor(eta * d)
  int epochs = 50;              // autoencoder only
  double learning_rate = 1e-3;  // autoencoder only
  double rbf_gamma = 0.0;       // kpca only; 0 selects 1/d
  std::uint64_t seed = 0;

  // floor(eta * d) up to a rounding guard, so eta = 0.7, d = 10 gives 7.
  int bottleneck(int d) const { return static_cast<int>(std::floor(eta * d + 1e-9)); }

  void validate() const {
    if (!(eta > 0.0)) throw std::invalid_argument("ModelConfig: eta must be > 0");
    if (epochs < 1) throw std::invalid_argument("ModelConfig: epochs must be >= 1");
    if (!(learning_rate > 0.0))
      throw std::invalid_argument("ModelConfig: learning_rate must be > 0");
    if (rbf_gamma < 0.0) throw std::invalid_argument("ModelConfig: rbf_gamma must be >= 0");
  }
};

// Squared reconstruction error per dimension plus its mean.
struct LossVector {
  Eigen::VectorXd per_dim;
  double total = 0.0;
};

inline LossVector loss(const Eigen::VectorXd& x, const Eigen::VectorXd& x_hat) {
  if (x.size() != x_hat.size()) throw std::domain_error("loss: dimension mismatch");
  LossVector lv;
  lv.per_dim = (x - x_hat).array().square().matrix();
  lv.total = lv.per_dim.sum() / static_cast<double>(lv.per_dim.size());
  return lv;
}

// A trained encoder-decoder pair. Immutable once trained; reconstruct is
// const and safe to call from several threads.
class EncoderDecoder {
 public:
  virtual ~EncoderDecoder() = default;
  virtual ModelKind kind() const = 0;
  virtual int dim() const = 0;
  virtual int bottleneck() const = 0;
  // Maps [0,1]^d to [0,1]^d; throws std::domain_error on a size mismatch.
  virtual Eigen::VectorXd reconstruct(const Eigen::VectorXd& x) const = 0;
};

namespace detail {

inline void check_training_matrix(const Eigen::MatrixXd& X, int d_prime) {
  if (X.rows() < d_prime + 1)
    throw InsufficientTrainingDataError("train: need at least bottleneck+1 observations, got " +
                                        std::to_string(X.rows()));
  if (!X.allFinite()) throw std::domain_error("train: non-finite training value");
  if (X.minCoeff() < 0.0 || X.maxCoeff() > 1.0)
    throw std::domain_error("train: training values must lie in [0,1]");
}

inline void check_reconstruct_input(const Eigen::VectorXd& x, int d) {
  if (x.size() != d) throw std::domain_error("reconstruct: dimension mismatch");
}

}  // namespace detail

}  // namespace abcd
