#pragma once

#include "vcfusion/error.hpp"
#include "vcfusion/random.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace vcfusion
{

struct TrainingConfig
{
  int hidden{32};
  double learning_rate{1e-2};
  int epochs{200};
  int batch_size{32};
  std::uint64_t seed{1};
};

struct DenseLayer
{
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
};

/// Feed-forward classifier: rectifier hidden layers, logistic output.
/// Inputs are standardized with the training-set statistics stored here.
struct MlpModel
{
  std::vector<int> layer_sizes;  // e.g. {13, 32, 1}
  Eigen::VectorXd feature_mean;
  Eigen::VectorXd feature_scale;
  std::vector<DenseLayer> layers;

  std::size_t input_size() const { return layer_sizes.empty() ? 0 : static_cast<std::size_t>(layer_sizes.front()); }

  std::size_t parameter_count() const
  {
    std::size_t n = 0;
    for (const auto & l : layers) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
    return n;
  }

  /// Flat parameter view: per layer, weights row-major then bias.
  double & parameter(std::size_t index)
  {
    for (auto & l : layers) {
      const auto nw = static_cast<std::size_t>(l.weights.size());
      if (index < nw) {
        const auto cols = static_cast<std::size_t>(l.weights.cols());
        return l.weights(static_cast<Eigen::Index>(index / cols), static_cast<Eigen::Index>(index % cols));
      }
      index -= nw;
      const auto nb = static_cast<std::size_t>(l.bias.size());
      if (index < nb) {
        return l.bias(static_cast<Eigen::Index>(index));
      }
      index -= nb;
    }
    throw Error(ErrorCode::invalid_argument, "parameter index out of range");
  }

  double parameter(std::size_t index) const { return const_cast<MlpModel &>(*this).parameter(index); }

  bool is_finite() const
  {
    for (const auto & l : layers) {
      if (!l.weights.allFinite() || !l.bias.allFinite()) return false;
    }
    return feature_mean.allFinite() && feature_scale.allFinite();
  }

  bool operator==(const MlpModel & o) const
  {
    if (layer_sizes != o.layer_sizes || layers.size() != o.layers.size()) return false;
    if (feature_mean != o.feature_mean || feature_scale != o.feature_scale) return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (layers[i].weights != o.layers[i].weights || layers[i].bias != o.layers[i].bias) return false;
    }
    return true;
  }
};

/// Zero weights, identity standardization.
inline MlpModel make_zero_model(const std::vector<int> & sizes)
{
  MlpModel m;
  m.layer_sizes = sizes;
  m.feature_mean = Eigen::VectorXd::Zero(sizes.front());
  m.feature_scale = Eigen::VectorXd::Ones(sizes.front());
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    m.layers.push_back({Eigen::MatrixXd::Zero(sizes[i], sizes[i - 1]), Eigen::VectorXd::Zero(sizes[i])});
  }
  return m;
}

inline double logistic(double z)
{
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace detail
{

inline Eigen::VectorXd standardize(const MlpModel & m, std::span<const double> x)
{
  Eigen::VectorXd v(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    v(k) = (x[i] - m.feature_mean(k)) / m.feature_scale(k);
  }
  return v;
}

/// Output logit and the per-layer activations (input first).
inline double forward(const MlpModel & m, const Eigen::VectorXd & x, std::vector<Eigen::VectorXd> * acts)
{
  Eigen::VectorXd a = x;
  if (acts != nullptr) acts->push_back(a);
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    Eigen::VectorXd z = m.layers[i].weights * a + m.layers[i].bias;
    if (i + 1 == m.layers.size()) {
      return z(0);
    }
    a = z.cwiseMax(0.0);
    if (acts != nullptr) acts->push_back(a);
  }
  return 0.0;
}

// log(1 + exp(-|z|)) + max(z, 0) - z*y
inline double bce_with_logit(double z, double y)
{
  return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

}  // namespace detail

inline double infer(const MlpModel & m, std::span<const double> features)
{
  if (features.size() != m.input_size()) {
    throw Error(
      ErrorCode::dimension_mismatch, "expected " + std::to_string(m.input_size()) + " features, got " +
                                       std::to_string(features.size()));
  }
  return logistic(detail::forward(m, detail::standardize(m, features), nullptr));
}

inline int predict_label(const MlpModel & m, std::span<const double> features)
{
  return infer(m, features) >= 0.5 ? 1 : 0;
}

/// Row-major design matrix plus labels.
struct Dataset
{
  std::size_t dims{0};
  std::vector<double> x;
  std::vector<int> y;

  std::size_t size() const { return y.size(); }
  std::span<const double> row(std::size_t i) const { return {x.data() + i * dims, dims}; }

  void add(std::span<const double> features, int label)
  {
    if (dims == 0) dims = features.size();
    if (features.size() != dims) {
      throw Error(ErrorCode::dimension_mismatch, "inconsistent feature length");
    }
    x.insert(x.end(), features.begin(), features.end());
    y.push_back(label);
  }
};

struct LossGradient
{
  double loss{0.0};
  std::vector<double> gradient;  // flat, same order as MlpModel::parameter
};

/// Mean binary cross-entropy over `rows` of `data` and its gradient with
/// respect to every model parameter (standardization held fixed).
inline LossGradient loss_and_gradient(
  const MlpModel & m, const Dataset & data, std::span<const std::size_t> rows)
{
  std::vector<Eigen::MatrixXd> gw;
  std::vector<Eigen::VectorXd> gb;
  for (const auto & l : m.layers) {
    gw.emplace_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
    gb.emplace_back(Eigen::VectorXd::Zero(l.bias.size()));
  }
  double loss = 0.0;
  std::vector<Eigen::VectorXd> acts;
  for (std::size_t r : rows) {
    acts.clear();
    const double z = detail::forward(m, detail::standardize(m, data.row(r)), &acts);
    const double y = data.y[r];
    loss += detail::bce_with_logit(z, y);
    Eigen::VectorXd delta(1);
    delta(0) = logistic(z) - y;
    for (std::size_t li = m.layers.size(); li-- > 0;) {
      gw[li].noalias() += delta * acts[li].transpose();
      gb[li] += delta;
      if (li > 0) {
        Eigen::VectorXd back = m.layers[li].weights.transpose() * delta;
        for (Eigen::Index k = 0; k < back.size(); ++k) {
          if (acts[li](k) <= 0.0) back(k) = 0.0;
        }
        delta = std::move(back);
      }
    }
  }
  const double inv = rows.empty() ? 0.0 : 1.0 / static_cast<double>(rows.size());
  LossGradient out;
  out.loss = loss * inv;
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    for (Eigen::Index i = 0; i < gw[li].rows(); ++i) {
      for (Eigen::Index j = 0; j < gw[li].cols(); ++j) out.gradient.push_back(gw[li](i, j) * inv);
    }
    for (Eigen::Index i = 0; i < gb[li].size(); ++i) out.gradient.push_back(gb[li](i) * inv);
  }
  return out;
}

inline LossGradient loss_and_gradient(const MlpModel & m, const Dataset & data)
{
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return loss_and_gradient(m, data, rows);
}

/// Seeded mini-batch gradient descent on mean binary cross-entropy.
inline MlpModel train(const Dataset & data, const TrainingConfig & cfg)
{
  if (data.size() == 0) {
    throw Error(ErrorCode::degenerate_dataset, "empty dataset");
  }
  const auto positives = std::count(data.y.begin(), data.y.end(), 1);
  if (positives == 0 || positives == static_cast<long>(data.size())) {
    throw Error(ErrorCode::degenerate_dataset, "dataset holds a single class");
  }
  if (cfg.hidden < 1 || cfg.batch_size < 1 || cfg.epochs < 0 || !(cfg.learning_rate > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "invalid training configuration");
  }
  const auto dims = static_cast<Eigen::Index>(data.dims);
  MlpModel m = make_zero_model({static_cast<int>(data.dims), cfg.hidden, 1});

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dims);
  for (std::size_t r = 0; r < data.size(); ++r) {
    mean += Eigen::Map<const Eigen::VectorXd>(data.row(r).data(), dims);
  }
  mean /= static_cast<double>(data.size());
  Eigen::VectorXd var = Eigen::VectorXd::Zero(dims);
  for (std::size_t r = 0; r < data.size(); ++r) {
    var += (Eigen::Map<const Eigen::VectorXd>(data.row(r).data(), dims) - mean).cwiseAbs2();
  }
  var /= static_cast<double>(data.size());
  m.feature_mean = mean;
  m.feature_scale = var.cwiseSqrt().unaryExpr([](double s) { return s > 1e-12 ? s : 1.0; });

  Rng rng(derive_seed(cfg.seed, "training"));
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    auto & l = m.layers[li];
    // He initialization for rectifier inputs
    std::normal_distribution<double> init(0.0, std::sqrt(2.0 / static_cast<double>(l.weights.cols())));
    for (Eigen::Index i = 0; i < l.weights.rows(); ++i) {
      for (Eigen::Index j = 0; j < l.weights.cols(); ++j) l.weights(i, j) = init(rng);
    }
  }

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      const auto grad = loss_and_gradient(m, data, std::span(order).subspan(start, stop - start));
      for (std::size_t p = 0; p < grad.gradient.size(); ++p) {
        m.parameter(p) -= cfg.learning_rate * grad.gradient[p];
      }
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// model file

inline constexpr const char * model_format = "vcfusion.mlp";
inline constexpr int model_version = 1;

inline nlohmann::json to_json(const MlpModel & m)
{
  auto vec = [](const Eigen::VectorXd & v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::json layers = nlohmann::json::array();
  for (const auto & l : m.layers) {
    std::vector<double> w;
    for (Eigen::Index i = 0; i < l.weights.rows(); ++i) {
      for (Eigen::Index j = 0; j < l.weights.cols(); ++j) w.push_back(l.weights(i, j));
    }
    layers.push_back({{"weights", w}, {"bias", vec(l.bias)}});
  }
  return {
    {"format", model_format},
    {"version", model_version},
    {"layer_sizes", m.layer_sizes},
    {"activations", {{"hidden", "relu"}, {"output", "logistic"}}},
    {"feature_mean", vec(m.feature_mean)},
    {"feature_scale", vec(m.feature_scale)},
    {"layers", layers}};
}

inline MlpModel model_from_json(const nlohmann::json & j)
{
  try {
    if (j.at("format").get<std::string>() != model_format || j.at("version").get<int>() != model_version) {
      throw Error(ErrorCode::io, "unsupported model format or version");
    }
    MlpModel m = make_zero_model(j.at("layer_sizes").get<std::vector<int>>());
    const auto mean = j.at("feature_mean").get<std::vector<double>>();
    const auto scale = j.at("feature_scale").get<std::vector<double>>();
    if (mean.size() != m.input_size() || scale.size() != m.input_size()) {
      throw Error(ErrorCode::io, "standardization vectors do not match the input size");
    }
    m.feature_mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    m.feature_scale = Eigen::Map<const Eigen::VectorXd>(scale.data(), static_cast<Eigen::Index>(scale.size()));
    const auto & layers = j.at("layers");
    if (layers.size() != m.layers.size()) {
      throw Error(ErrorCode::io, "layer count does not match layer_sizes");
    }
    for (std::size_t li = 0; li < m.layers.size(); ++li) {
      auto & l = m.layers[li];
      const auto w = layers[li].at("weights").get<std::vector<double>>();
      const auto b = layers[li].at("bias").get<std::vector<double>>();
      if (w.size() != static_cast<std::size_t>(l.weights.size()) || b.size() != static_cast<std::size_t>(l.bias.size())) {
        throw Error(ErrorCode::io, "layer " + std::to_string(li) + " has the wrong shape");
      }
      for (Eigen::Index i = 0; i < l.weights.rows(); ++i) {
        for (Eigen::Index k = 0; k < l.weights.cols(); ++k) {
          l.weights(i, k) = w[static_cast<std::size_t>(i * l.weights.cols() + k)];
        }
      }
      for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = b[static_cast<std::size_t>(i)];
    }
    return m;
  } catch (const nlohmann::json::exception & e) {
    throw Error(ErrorCode::io, std::string("malformed model file: ") + e.what());
  }
}

}  // namespace vcfusion
