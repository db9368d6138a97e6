#pragma once

/**
 * @file ml_classic.hpp
 * @brief Non-neural binary classifiers: KNN, kernel SVM (SMO), CART trees,
 *        tree/subspace ensembles and Fisher linear discriminant.
 *
 * Every trained model standardizes raw features with statistics fitted on its
 * own training split. The *Core types operate on already standardized rows
 * and are shared by the ensembles. Labels are 0 (hydrated) and 1 (dehydrated).
 */

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rfhydro/features.hpp"

namespace rfhydro {

/// Centralized defaults for every hyperparameter the classifier roster uses.
struct Hyperparameters {
  std::size_t knn_fine = 1;
  std::size_t knn_medium = 10;
  std::size_t knn_coarse = 100;
  double svm_c = 1.0;
  double svm_tolerance = 1e-3;
  std::size_t tree_fine_splits = 100;
  std::size_t tree_medium_splits = 20;
  std::size_t tree_coarse_splits = 4;
  std::size_t boost_members = 30;
  double boost_learning_rate = 0.1;
  std::size_t boost_max_splits = 20;
  std::size_t bag_members = 30;
  std::size_t subspace_members = 30;
  std::size_t subspace_dim = 32;
  double lda_shrinkage = 1e-4;
};

class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual std::string kind() const = 0;
  /// Predicts the class of one raw (unstandardized) feature vector.
  virtual int predict(std::span<const double> x) const = 0;
  std::vector<int> predict_all(const FeatureMatrix& x) const;
  /// Versioned structured-text form; see load_model.
  virtual nlohmann::json to_json() const = 0;
};

/// Reconstructs any classifier written by Classifier::to_json, including MLPs.
std::unique_ptr<Classifier> load_model(const nlohmann::json& j);

// --- KNN --------------------------------------------------------------------

struct KnnCore {
  FeatureMatrix points;
  std::vector<int> labels;
  std::size_t k = 1;

  /// Majority vote over the k nearest points (ordered by distance, then index);
  /// a tied vote goes to the class of the nearest point.
  int predict(std::span<const double> x) const;
};

class KnnModel final : public Classifier {
 public:
  static KnnModel fit(const LabeledData& data, std::size_t k);
  std::string kind() const override { return "knn"; }
  int predict(std::span<const double> x) const override;
  nlohmann::json to_json() const override;
  static KnnModel from_json(const nlohmann::json& j);

  Standardizer standardizer;
  KnnCore core;
};

// --- SVM --------------------------------------------------------------------

enum class Kernel { linear, poly2, poly3 };
std::string_view to_string(Kernel kernel);
Kernel parse_kernel(std::string_view text);

/// <x,z>, (1+<x,z>)^2 or (1+<x,z>)^3.
double kernel_value(Kernel kernel, std::span<const double> a, std::span<const double> b);

struct SvmOptions {
  Kernel kernel = Kernel::linear;
  double c = 1.0;
  double tolerance = 1e-3;
  std::size_t max_iterations = 0;  ///< 0: max(1e7, 100 n)
  std::size_t cache_bytes = std::size_t{256} << 20;
};

struct SvmSolution {
  RealVector alpha;  ///< dual variables, 0 <= alpha_i <= C
  double bias = 0.0;
  std::size_t iterations = 0;
  double kkt_gap = 0.0;  ///< max violating-pair gap at termination
  bool converged = false;
  RealVector objective_trace;  ///< dual objective 0.5 a'Qa - e'a after each step
};

/// Soft-margin dual solved by SMO with second-order working-set selection.
/// Rows of x are used as given (no standardization). y in {0,1}.
SvmSolution solve_svm_dual(const FeatureMatrix& x, std::span<const int> y,
                           const SvmOptions& options);

struct SvmCore {
  Kernel kernel = Kernel::linear;
  FeatureMatrix support;
  RealVector coef;  ///< alpha_i * y_i (y in {-1,+1})
  double bias = 0.0;

  double decision(std::span<const double> x) const;
  int predict(std::span<const double> x) const { return decision(x) > 0.0 ? 1 : 0; }
};

class SvmModel final : public Classifier {
 public:
  static SvmModel fit(const LabeledData& data, const SvmOptions& options);
  std::string kind() const override { return "svm"; }
  int predict(std::span<const double> x) const override;
  double decision(std::span<const double> x) const;
  nlohmann::json to_json() const override;
  static SvmModel from_json(const nlohmann::json& j);

  Standardizer standardizer;
  SvmCore core;
  double c = 1.0;
  std::size_t iterations = 0;
  double kkt_gap = 0.0;
};

// --- Decision trees ---------------------------------------------------------

struct TreeNode {
  int feature = -1;  ///< -1 for leaves
  double threshold = 0.0;  ///< go left when x[feature] <= threshold
  int left = -1;
  int right = -1;
  int label = 0;
};

struct TreeCore {
  std::vector<TreeNode> nodes;

  int predict(std::span<const double> x) const;
  std::size_t split_count() const;
};

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double impurity = 0.0;  ///< weighted Gini of the children, normalized by node weight
};

/// Weighted Gini impurity 1 - sum_c p_c^2 of the given rows.
double gini(std::span<const int> y, std::span<const double> w, std::span<const std::size_t> rows);

/// Best single-feature threshold (midpoint between adjacent distinct values)
/// over `rows`. Ties keep the lowest feature, then the lowest threshold.
SplitChoice best_split(const FeatureMatrix& x, std::span<const int> y, std::span<const double> w,
                       std::span<const std::size_t> rows);

/// CART with weighted Gini, grown breadth-first until max_splits internal
/// nodes or no impurity-reducing split remains. Empty `w` means unit weights.
TreeCore grow_tree(const FeatureMatrix& x, std::span<const int> y, std::span<const double> w,
                   std::size_t max_splits);

class TreeModel final : public Classifier {
 public:
  static TreeModel fit(const LabeledData& data, std::size_t max_splits);
  std::string kind() const override { return "tree"; }
  int predict(std::span<const double> x) const override;
  nlohmann::json to_json() const override;
  static TreeModel from_json(const nlohmann::json& j);

  Standardizer standardizer;
  TreeCore core;
  std::size_t max_splits = 0;
};

// --- Linear discriminant ----------------------------------------------------

struct LdaCore {
  RealVector w;
  double b = 0.0;

  double score(std::span<const double> x) const;
  int predict(std::span<const double> x) const { return score(x) > 0.0 ? 1 : 0; }
};

/// Pooled-covariance Fisher discriminant. The covariance gets a ridge of
/// shrinkage * trace / dim before solving. Requires both classes.
LdaCore fit_lda(const FeatureMatrix& x, std::span<const int> y, double shrinkage);

class LdaModel final : public Classifier {
 public:
  static LdaModel fit(const LabeledData& data, double shrinkage);
  std::string kind() const override { return "lda"; }
  int predict(std::span<const double> x) const override;
  nlohmann::json to_json() const override;
  static LdaModel from_json(const nlohmann::json& j);

  Standardizer standardizer;
  LdaCore core;
};

// --- Ensembles --------------------------------------------------------------

enum class EnsembleKind { boosted_tree, bagged_tree, subspace_knn, subspace_discriminant };
std::string_view to_string(EnsembleKind kind);
EnsembleKind parse_ensemble_kind(std::string_view text);

struct EnsembleOptions {
  EnsembleKind kind = EnsembleKind::bagged_tree;
  std::size_t members = 30;
  std::uint64_t seed = 1;
  double learning_rate = 0.1;      ///< boosting shrinkage
  std::size_t boost_max_splits = 20;
  bool bootstrap = true;           ///< bagging: resample; false trains on the full sample
  std::size_t subspace_dim = 32;
  std::size_t subspace_knn_k = 1;
  double lda_shrinkage = 1e-4;
};

/// Per-round AdaBoost bookkeeping.
struct BoostRound {
  double error = 0.0;
  double alpha = 0.0;
  RealVector weights_after;  ///< sample weights after the update (normalized)
};

class EnsembleModel final : public Classifier {
 public:
  static EnsembleModel fit(const LabeledData& data, const EnsembleOptions& options,
                           std::vector<BoostRound>* boost_trace = nullptr);
  std::string kind() const override { return "ensemble"; }
  int predict(std::span<const double> x) const override;
  nlohmann::json to_json() const override;
  static EnsembleModel from_json(const nlohmann::json& j);

  std::size_t member_count() const;

  Standardizer standardizer;
  EnsembleKind ensemble_kind = EnsembleKind::bagged_tree;
  std::vector<TreeCore> trees;
  RealVector tree_weights;  ///< boosting only
  std::vector<std::vector<std::size_t>> masks;  ///< subspace variants only
  std::vector<KnnCore> knns;
  std::vector<LdaCore> ldas;
};

/// AdaBoost.M1 over weighted trees on standardized rows: alpha = lr * ln((1-e)/e),
/// misclassified weights multiplied by exp(alpha), then renormalized. Stops
/// when a member's weighted error reaches 0.5 (or 0).
void boost_trees(const FeatureMatrix& xs, std::span<const int> y, const EnsembleOptions& options,
                 std::vector<TreeCore>& trees, RealVector& alphas,
                 std::vector<BoostRound>* trace);

}  // namespace rfhydro
