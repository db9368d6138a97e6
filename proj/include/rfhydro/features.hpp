#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

#include "rfhydro/session.hpp"
#include "rfhydro/types.hpp"

namespace rfhydro {

/// Dense row-major matrix of feature vectors.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  RealVector data;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  void push_row(std::span<const double> values);
  FeatureMatrix select_rows(std::span<const std::size_t> indices) const;
  FeatureMatrix select_cols(std::span<const std::size_t> indices) const;
};

/// Class labels are 0 (hydrated) / 1 (dehydrated).
struct LabeledData {
  FeatureMatrix x;
  std::vector<int> y;

  std::size_t size() const { return y.size(); }
  void check() const;
  LabeledData subset(std::span<const std::size_t> indices) const;
};

/// Examples drawn from sessions, remembering where each row came from.
struct ExampleSet {
  LabeledData data;
  std::vector<std::size_t> session_id;
  std::vector<std::size_t> frame_index;
};

/// Per-snapshot |h_i| feature vectors. With examples_per_session > 0 only that
/// many evenly spaced snapshots are taken from each session; 0 takes all.
ExampleSet build_examples(std::span<const Session> sessions, std::size_t examples_per_session);

/// Per-dimension z-scoring fitted on training rows. Dimensions with zero
/// spread get unit scale.
struct Standardizer {
  RealVector mean;
  RealVector scale;

  static Standardizer fit(const FeatureMatrix& x);
  void apply(std::span<const double> in, std::span<double> out) const;
  RealVector apply(std::span<const double> in) const;
  FeatureMatrix transform(const FeatureMatrix& x) const;
};

nlohmann::json to_json(const Standardizer& s);
Standardizer standardizer_from_json(const nlohmann::json& j);

}  // namespace rfhydro
