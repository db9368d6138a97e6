#pragma once

/**
 * @file eval_harness.hpp
 * @brief K-fold evaluation of the classifier roster, confusion matrices and
 *        comparison tables.
 *
 * "dehydrated" (label 1) is the positive class. Results are reported per
 * snapshot and per session (majority vote over a session's test snapshots,
 * ties counted as dehydrated).
 */

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rfhydro/dataset_store.hpp"
#include "rfhydro/features.hpp"
#include "rfhydro/ml_classic.hpp"
#include "rfhydro/ml_neural.hpp"

namespace rfhydro {

struct ConfusionMatrix {
  std::size_t tn = 0;
  std::size_t tp = 0;
  std::size_t fn = 0;
  std::size_t fp = 0;

  std::size_t total() const { return tn + tp + fn + fp; }
  void add(int truth, int predicted);
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  bool operator==(const ConfusionMatrix&) const = default;
};

/// (tn + tp) / total * 100. Throws DataError on an empty matrix.
double accuracy(const ConfusionMatrix& cm);

nlohmann::json to_json(const ConfusionMatrix& cm);
ConfusionMatrix confusion_from_json(const nlohmann::json& j);

// --- Classifier roster ------------------------------------------------------

/// The 17 reported variants, in reporting order.
const std::vector<std::string>& default_roster();
/// "knn", "svm", "tree", "ensemble" or "nn". Throws ConfigError for unknown names.
std::string classifier_family(std::string_view name);
bool is_known_classifier(std::string_view name);

struct MlpTraining {
  std::size_t epochs = 300;
  double learning_rate = 0.01;
  std::size_t batch_size = 64;
  double l2 = 1e-4;
  double momentum = 0.9;
};

struct ClassifierSettings {
  Hyperparameters hyper;
  MlpTraining mlp;
};

nlohmann::json to_json(const ClassifierSettings& settings);

/// Trains the named variant on raw training rows. `seed` drives every random
/// choice the variant makes.
std::unique_ptr<Classifier> fit_classifier(std::string_view name, const LabeledData& train,
                                           const ClassifierSettings& settings,
                                           std::uint64_t seed);

// --- Cross-validation -------------------------------------------------------

/// A training failure inside cross-validation, tagged with where it happened.
class FitError : public Error {
 public:
  FitError(std::string classifier, std::size_t fold, const std::string& message)
      : Error(classifier + " (fold " + std::to_string(fold) + "): " + message),
        classifier_(std::move(classifier)),
        fold_(fold) {}
  const std::string& classifier() const { return classifier_; }
  std::size_t fold() const { return fold_; }

 private:
  std::string classifier_;
  std::size_t fold_;
};

enum class SplitUnit { session, snapshot };
std::string_view to_string(SplitUnit unit);
SplitUnit parse_split_unit(std::string_view text);

struct CvOptions {
  std::uint64_t seed = 1;
  std::size_t workers = 0;
  /// snapshot: examples are stratified into folds individually, so snapshots of
  /// one session can straddle train and test. The no-leakage check is skipped.
  SplitUnit split = SplitUnit::session;
};

struct FoldResult {
  ConfusionMatrix snapshot;
  ConfusionMatrix session;
  std::size_t train_examples = 0;
  std::size_t test_examples = 0;
  std::vector<std::size_t> test_sessions;
  double fit_seconds = 0.0;  ///< wall time; never written to reports
};

struct ClassifierReport {
  std::string name;
  std::string family;
  std::vector<FoldResult> folds;
  ConfusionMatrix pooled_snapshot;
  ConfusionMatrix pooled_session;

  double snapshot_accuracy() const { return accuracy(pooled_snapshot); }
  double session_accuracy() const { return accuracy(pooled_session); }
};

struct EvalReport {
  Method method = Method::cbdm;
  std::string dataset_checksum;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  SplitUnit split = SplitUnit::session;
  bool shuffled_labels = false;
  std::size_t examples = 0;
  std::vector<ClassifierReport> classifiers;
  nlohmann::json echo = nlohmann::json::object();  ///< run manifest: seeds, hyperparameters, dataset

  /// Throws DataError if a pooled matrix is not the sum of its folds.
  void check_consistency() const;
};

/// Throws DataError if any session id appears on both sides of a fold.
void check_no_leakage(std::span<const std::size_t> train_sessions,
                      std::span<const std::size_t> test_sessions, std::size_t fold);

/// Splits examples by the plan. Session mode uses `plan` directly; snapshot
/// mode builds a stratified per-example plan from CvOptions::seed.
std::vector<std::size_t> example_folds(const ExampleSet& examples, const FoldPlan& plan,
                                       const CvOptions& options);

/// Evaluates each named classifier with K-fold CV. Standardization happens
/// inside each model on its training split. Fit errors are rethrown as
/// FitError naming the classifier and fold.
EvalReport run_cv(const ExampleSet& examples, const FoldPlan& plan,
                  std::span<const std::string> classifiers, const ClassifierSettings& settings,
                  const CvOptions& options);

/// Replaces every example label by a seeded random permutation of the labels.
void permute_labels(ExampleSet& examples, std::uint64_t seed);

nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

/// One "<classifier> fold <i>: <seconds> s" line per fit, for sidecar logs.
std::string timing_log(const EvalReport& report);

// --- Comparison -------------------------------------------------------------

struct ComparisonRow {
  std::string method;
  std::string classifier;
  std::string family;
  double snapshot_accuracy = 0.0;
  double session_accuracy = 0.0;
  bool best = false;
};

struct ComparisonTable {
  std::string dataset_checksum;
  std::vector<ComparisonRow> rows;  ///< sorted by snapshot accuracy, descending
};

/// Throws DataError if the reports come from different datasets or the list
/// is empty. Ties in accuracy keep roster order.
ComparisonTable compare(std::span<const EvalReport> reports);

std::string comparison_csv(const ComparisonTable& table);
std::string comparison_svg(const ComparisonTable& table);

}  // namespace rfhydro
