#include "rfhydro/features.hpp"

#include <cmath>

namespace rfhydro {

void FeatureMatrix::push_row(std::span<const double> values) {
  if (rows == 0 && cols == 0) cols = values.size();
  if (values.size() != cols) throw DimensionError("push_row: width mismatch");
  data.insert(data.end(), values.begin(), values.end());
  ++rows;
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> indices) const {
  FeatureMatrix out(indices.size(), cols);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

FeatureMatrix FeatureMatrix::select_cols(std::span<const std::size_t> indices) const {
  FeatureMatrix out(rows, indices.size());
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < indices.size(); ++j) out.at(i, j) = at(i, indices[j]);
  return out;
}

void LabeledData::check() const {
  if (x.rows != y.size()) throw DimensionError("feature rows and labels differ in count");
  for (int label : y)
    if (label != 0 && label != 1) throw DataError("labels must be 0 or 1");
  for (double v : x.data)
    if (!std::isfinite(v)) throw DataError("non-finite feature value");
}

LabeledData LabeledData::subset(std::span<const std::size_t> indices) const {
  LabeledData out;
  out.x = x.select_rows(indices);
  out.y.reserve(indices.size());
  for (auto i : indices) out.y.push_back(y[i]);
  return out;
}

ExampleSet build_examples(std::span<const Session> sessions, std::size_t examples_per_session) {
  ExampleSet set;
  RealVector mags;
  for (const auto& s : sessions) {
    const std::size_t n = s.snapshots.size();
    const std::size_t take = examples_per_session == 0 ? n : std::min(n, examples_per_session);
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t idx = take == n ? i : (2 * i + 1) * n / (2 * take);
      const auto& snap = s.snapshots[idx];
      mags.resize(snap.h.size());
      for (std::size_t k = 0; k < snap.h.size(); ++k) mags[k] = std::abs(snap.h[k]);
      set.data.x.push_row(mags);
      set.data.y.push_back(label_index(s.label));
      set.session_id.push_back(s.session_id);
      set.frame_index.push_back(snap.frame_index);
    }
  }
  return set;
}

Standardizer Standardizer::fit(const FeatureMatrix& x) {
  if (x.rows == 0) throw DataError("cannot standardize an empty training set");
  Standardizer s;
  s.mean.assign(x.cols, 0.0);
  s.scale.assign(x.cols, 0.0);
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < x.cols; ++j) s.mean[j] += x.at(i, j);
  for (auto& m : s.mean) m /= static_cast<double>(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < x.cols; ++j) {
      const double d = x.at(i, j) - s.mean[j];
      s.scale[j] += d * d;
    }
  for (auto& v : s.scale) {
    v = x.rows > 1 ? std::sqrt(v / static_cast<double>(x.rows - 1)) : 0.0;
    if (!(v > 0.0)) v = 1.0;
  }
  return s;
}

void Standardizer::apply(std::span<const double> in, std::span<double> out) const {
  if (in.size() != mean.size() || out.size() != mean.size())
    throw DimensionError("standardizer: expected " + std::to_string(mean.size()) + " features, got " +
                         std::to_string(in.size()));
  for (std::size_t j = 0; j < in.size(); ++j) out[j] = (in[j] - mean[j]) / scale[j];
}

RealVector Standardizer::apply(std::span<const double> in) const {
  RealVector out(in.size());
  apply(in, out);
  return out;
}

FeatureMatrix Standardizer::transform(const FeatureMatrix& x) const {
  FeatureMatrix out(x.rows, x.cols);
  for (std::size_t i = 0; i < x.rows; ++i) apply(x.row(i), out.row(i));
  return out;
}

nlohmann::json to_json(const Standardizer& s) { return {{"mean", s.mean}, {"scale", s.scale}}; }

Standardizer standardizer_from_json(const nlohmann::json& j) {
  Standardizer s;
  s.mean = j.at("mean").get<RealVector>();
  s.scale = j.at("scale").get<RealVector>();
  if (s.mean.size() != s.scale.size()) throw DataError("standardizer: mean/scale size mismatch");
  return s;
}

}  // namespace rfhydro
