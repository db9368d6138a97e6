#pragma once

/**
 * @file ml_neural.hpp
 * @brief Fully-connected feedforward classifiers: ReLU hidden layers and a
 *        two-way softmax output, trained by mini-batch SGD with momentum on
 *        mean cross-entropy plus L2 weight decay.
 */

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rfhydro/features.hpp"
#include "rfhydro/ml_classic.hpp"

namespace rfhydro {

struct MlpSpec {
  std::vector<std::size_t> hidden_sizes{10};
  std::size_t epochs = 300;
  double learning_rate = 0.01;
  std::size_t batch_size = 64;
  double l2 = 1e-4;
  double momentum = 0.9;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Named variants: narrow [10], medium [25], wide [100], bilayer [10,10], trilayer [10,10,10].
MlpSpec mlp_variant(std::string_view name);

/// Layer l maps a_{l} to W_l a_{l} + b_l; W_l has shape (out, in).
struct MlpModel {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  Standardizer standardizer;  ///< empty means inputs are used as given

  std::size_t input_dim() const;
  std::size_t parameter_count() const;
  /// Class probabilities (hydrated, dehydrated) for one raw input.
  std::pair<double, double> forward(std::span<const double> x) const;
  /// Softmax outputs for standardized rows, one row per example (n x 2).
  Eigen::MatrixXd probabilities(const Eigen::MatrixXd& inputs) const;
};

/// He-initialized network (N(0, 2 / fan_in) weights, zero biases).
MlpModel mlp_init(std::size_t input_dim, std::span<const std::size_t> hidden_sizes,
                  std::uint64_t seed);

struct MlpGradients {
  double loss = 0.0;  ///< mean cross-entropy + l2 * sum ||W||^2
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

/// Loss and backpropagated gradients on rows of `inputs` (already standardized).
MlpGradients mlp_loss_gradients(const MlpModel& model, const Eigen::MatrixXd& inputs,
                                std::span<const int> labels, double l2);

struct MlpFitResult {
  MlpModel model;
  RealVector loss_trace;  ///< full-data loss at initialization, then after each epoch
};

/// Trains on `data` with a per-epoch seeded shuffle. Throws DataError naming
/// the epoch if the loss becomes non-finite.
MlpFitResult mlp_fit(const LabeledData& data, const MlpSpec& spec);

/// Max relative difference |a - n| / max(|a|, |n|, 1e-6) between backprop and
/// central differences (step 1e-5) over every parameter. Inputs are used as given.
double mlp_gradcheck(const MlpModel& model, const Eigen::MatrixXd& inputs,
                     std::span<const int> labels, double l2);

Eigen::MatrixXd to_eigen(const FeatureMatrix& x);

class MlpClassifier final : public Classifier {
 public:
  explicit MlpClassifier(MlpModel model) : model_(std::move(model)) {}
  static MlpClassifier fit(const LabeledData& data, const MlpSpec& spec);
  std::string kind() const override { return "mlp"; }
  int predict(std::span<const double> x) const override;
  nlohmann::json to_json() const override;
  static MlpClassifier from_json(const nlohmann::json& j);
  const MlpModel& model() const { return model_; }

 private:
  MlpModel model_;
};

}  // namespace rfhydro
