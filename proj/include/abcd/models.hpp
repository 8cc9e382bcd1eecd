#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "abcd/autoencoder.hpp"
#include "abcd/kernel_pca.hpp"
#include "abcd/model.hpp"
#include "abcd/pca.hpp"

namespace abcd {

// Trains the encoder-decoder selected by config on X (n x d, rows in [0,1]).
inline std::unique_ptr<EncoderDecoder> train_model(const Eigen::MatrixXd& X,
                                                   const ModelConfig& config) {
  config.validate();
  const int d = static_cast<int>(X.cols());
  const int d_prime = config.bottleneck(d);
  if (d_prime < 1) throw std::invalid_argument("train_model: eta yields an empty bottleneck");
  switch (config.kind) {
    case ModelKind::pca:
      return std::make_unique<PcaModel>(PcaModel::fit(X, d_prime));
    case ModelKind::kpca:
      return std::make_unique<KernelPcaModel>(KernelPcaModel::fit(X, d_prime, config.rbf_gamma));
    case ModelKind::autoencoder:
      return std::make_unique<AutoencoderModel>(AutoencoderModel::train(
          X, d_prime, config.epochs, config.learning_rate, config.seed));
  }
  throw std::logic_error("train_model: unknown ModelKind");
}

namespace detail {

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json data = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  Eigen::MatrixXd m(j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>());
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != m.size())
    throw std::invalid_argument("model json: matrix size mismatch");
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j2 = 0; j2 < m.cols(); ++j2) m(i, j2) = data[idx++].get<double>();
  return m;
}

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json data = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) data.push_back(v(i));
  return data;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  Eigen::VectorXd v(j.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

}  // namespace detail

// Versioned JSON snapshot of a trained model. Doubles are serialized with
// shortest round-trip formatting, so save/load reproduces the parameters
// bit for bit.
inline nlohmann::json model_to_json(const EncoderDecoder& model) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["kind"] = to_string(model.kind());
  j["d"] = model.dim();
  j["d_prime"] = model.bottleneck();
  switch (model.kind()) {
    case ModelKind::pca: {
      const auto& m = static_cast<const PcaModel&>(model);
      j["mean"] = detail::vector_to_json(m.center());
      j["components"] = detail::matrix_to_json(m.components());
      j["eigenvalues"] = detail::vector_to_json(m.eigenvalues());
      break;
    }
    case ModelKind::kpca: {
      const auto& m = static_cast<const KernelPcaModel&>(model);
      j["support"] = detail::matrix_to_json(m.support());
      j["gamma"] = m.gamma();
      j["row_mean"] = detail::vector_to_json(m.row_mean());
      j["total_mean"] = m.total_mean();
      j["alphas"] = detail::matrix_to_json(m.alphas());
      j["preimage"] = detail::matrix_to_json(m.preimage());
      j["z_mean"] = detail::vector_to_json(m.z_mean());
      j["x_mean"] = detail::vector_to_json(m.x_mean());
      break;
    }
    case ModelKind::autoencoder: {
      const auto& m = static_cast<const AutoencoderModel&>(model);
      j["w1"] = detail::matrix_to_json(m.weights().w1);
      j["b1"] = detail::vector_to_json(m.weights().b1);
      j["w2"] = detail::matrix_to_json(m.weights().w2);
      j["b2"] = detail::vector_to_json(m.weights().b2);
      break;
    }
  }
  return j;
}

inline std::unique_ptr<EncoderDecoder> model_from_json(const nlohmann::json& j) {
  if (j.at("format_version").get<int>() != 1)
    throw std::invalid_argument("model json: unsupported format_version");
  const ModelKind kind = model_kind_from_string(j.at("kind").get<std::string>());
  switch (kind) {
    case ModelKind::pca:
      return std::make_unique<PcaModel>(PcaModel::from_parts(
          detail::vector_from_json(j.at("mean")), detail::matrix_from_json(j.at("components")),
          detail::vector_from_json(j.at("eigenvalues"))));
    case ModelKind::kpca:
      return std::make_unique<KernelPcaModel>(KernelPcaModel::from_parts(
          detail::matrix_from_json(j.at("support")), j.at("gamma").get<double>(),
          detail::vector_from_json(j.at("row_mean")), j.at("total_mean").get<double>(),
          detail::matrix_from_json(j.at("alphas")), detail::matrix_from_json(j.at("preimage")),
          detail::vector_from_json(j.at("z_mean")), detail::vector_from_json(j.at("x_mean"))));
    case ModelKind::autoencoder: {
      AutoencoderModel::Weights w;
      w.w1 = detail::matrix_from_json(j.at("w1"));
      w.b1 = detail::vector_from_json(j.at("b1"));
      w.w2 = detail::matrix_from_json(j.at("w2"));
      w.b2 = detail::vector_from_json(j.at("b2"));
      return std::make_unique<AutoencoderModel>(AutoencoderModel::from_weights(std::move(w)));
    }
  }
  throw std::logic_error("model_from_json: unknown ModelKind");
}

}  // namespace abcd
