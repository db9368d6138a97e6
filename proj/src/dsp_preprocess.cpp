#include "rfhydro/dsp_preprocess.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

namespace rfhydro {

namespace {

double median_of(RealVector v) {
  const std::size_t n = v.size();
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  const double upper = *mid;
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

// Causal FIR with zero initial state.
void fir_inplace(const RealVector& kernel, RealVector& x) {
  RealVector out(x.size(), 0.0);
  for (std::size_t n = 0; n < x.size(); ++n) {
    double acc = 0.0;
    const std::size_t kmax = std::min(kernel.size(), n + 1);
    for (std::size_t k = 0; k < kmax; ++k) acc += kernel[k] * x[n - k];
    out[n] = acc;
  }
  x.swap(out);
}

}  // namespace

void FilterSpec::validate(double rate) const {
  if (sg_window % 2 == 0 || sg_window == 0) throw ConfigError("sg_window must be odd");
  if (sg_polyorder >= sg_window) throw ConfigError("sg_polyorder must be < sg_window");
  if (lowpass_taps == 0) throw ConfigError("lowpass_taps must be positive");
  if (!(lowpass_cutoff > 0.0) || !(lowpass_cutoff < rate / 2.0))
    throw ConfigError("lowpass_cutoff must lie in (0, rate/2)");
  if (!(outlier_mads > 0.0)) throw ConfigError("outlier_mads must be positive");
}

RealVector design_lowpass(const FilterSpec& spec, double rate) {
  spec.validate(rate);
  const std::size_t n = spec.lowpass_taps;
  const double fc = spec.lowpass_cutoff / rate;  // cycles per sample
  const double center = 0.5 * static_cast<double>(n - 1);
  RealVector h(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double m = static_cast<double>(i) - center;
    const double sinc = m == 0.0 ? 2.0 * fc
                                 : std::sin(2.0 * std::numbers::pi * fc * m) / (std::numbers::pi * m);
    const double window =
        n == 1 ? 1.0
               : 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                        static_cast<double>(n - 1));
    h[i] = sinc * window;
    sum += h[i];
  }
  for (auto& v : h) v /= sum;
  return h;
}

RealVector lowpass(std::span<const double> series, const FilterSpec& spec, double rate) {
  const RealVector kernel = design_lowpass(spec, rate);
  const std::size_t n = series.size();
  if (n <= spec.lowpass_taps)
    throw DataError("lowpass: series of " + std::to_string(n) + " samples is not longer than " +
                    std::to_string(spec.lowpass_taps) + " taps");
  const std::size_t pad = spec.lowpass_taps - 1;

  RealVector x;
  x.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) x.push_back(2.0 * series[0] - series[i]);
  x.insert(x.end(), series.begin(), series.end());
  for (std::size_t i = 1; i <= pad; ++i) x.push_back(2.0 * series[n - 1] - series[n - 1 - i]);

  fir_inplace(kernel, x);
  std::reverse(x.begin(), x.end());
  fir_inplace(kernel, x);
  std::reverse(x.begin(), x.end());

  // The symmetric kernel delays each pass by (taps-1)/2; the two passes cancel.
  return RealVector(x.begin() + static_cast<std::ptrdiff_t>(pad),
                    x.begin() + static_cast<std::ptrdiff_t>(pad + n));
}

RealVector savitzky_golay_weights(std::size_t window, std::size_t polyorder) {
  if (window % 2 == 0) throw ConfigError("sg_window must be odd");
  if (polyorder >= window) throw ConfigError("sg_polyorder must be < sg_window");
  const std::size_t half = window / 2;
  const double scale = half == 0 ? 1.0 : static_cast<double>(half);
  const auto w = static_cast<Eigen::Index>(window);
  const auto p = static_cast<Eigen::Index>(polyorder + 1);

  Eigen::MatrixXd vander(w, p);
  for (Eigen::Index r = 0; r < w; ++r) {
    const double t = (static_cast<double>(r) - static_cast<double>(half)) / scale;
    double power = 1.0;
    for (Eigen::Index c = 0; c < p; ++c, power *= t) vander(r, c) = power;
  }
  // pinv = (V^T V)^-1 V^T, via QR for conditioning.
  const Eigen::MatrixXd pinv =
      vander.colPivHouseholderQr().solve(Eigen::MatrixXd::Identity(w, w));
  const Eigen::MatrixXd eval = vander * pinv;

  RealVector out(window * window);
  for (Eigen::Index r = 0; r < w; ++r)
    for (Eigen::Index c = 0; c < w; ++c)
      out[static_cast<std::size_t>(r) * window + static_cast<std::size_t>(c)] = eval(r, c);
  return out;
}

RealVector savitzky_golay(std::span<const double> series, const FilterSpec& spec) {
  const std::size_t window = spec.sg_window;
  const RealVector weights = savitzky_golay_weights(window, spec.sg_polyorder);
  const std::size_t n = series.size();
  if (n < window)
    throw DataError("savitzky_golay: window of " + std::to_string(window) +
                    " exceeds series length " + std::to_string(n));
  const std::size_t half = window / 2;
  auto apply_row = [&](std::size_t row, std::size_t start) {
    double acc = 0.0;
    const double* wrow = &weights[row * window];
    for (std::size_t j = 0; j < window; ++j) acc += wrow[j] * series[start + j];
    return acc;
  };

  RealVector out(n);
  for (std::size_t i = 0; i < half; ++i) out[i] = apply_row(i, 0);
  for (std::size_t i = half; i + half < n; ++i) out[i] = apply_row(half, i - half);
  for (std::size_t i = n - half; i < n; ++i) out[i] = apply_row(i - (n - window), n - window);
  return out;
}

PreprocessResult preprocess_session(const Session& session, const FilterSpec& spec) {
  if (session.snapshots.empty()) throw DataError("preprocess_session: empty session");
  spec.validate(session.snapshot_rate);
  const std::size_t count = session.snapshots.size();
  const std::size_t width = session.snapshots.front().h.size();

  RealVector norms(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto& h = session.snapshots[i].h;
    if (h.size() != width) throw DimensionError("preprocess_session: ragged snapshot widths");
    double sq = 0.0;
    for (const auto& v : h) sq += std::norm(v);
    norms[i] = std::sqrt(sq);
  }
  const double med = median_of(norms);
  RealVector dev(count);
  for (std::size_t i = 0; i < count; ++i) dev[i] = std::abs(norms[i] - med);
  // Scaled MAD (a Gaussian sigma), floored so noiseless traces with a
  // near-zero spread keep every snapshot.
  const double sigma = std::max(1.4826 * median_of(dev), 1e-3 * med);
  const double limit = spec.outlier_mads * sigma;

  PreprocessResult result;
  Session& out = result.session;
  out = session;
  out.snapshots.clear();
  for (std::size_t i = 0; i < count; ++i)
    if (dev[i] <= limit) out.snapshots.push_back(session.snapshots[i]);
  result.dropped = count - out.snapshots.size();
  out.dropped_snapshots = session.dropped_snapshots + result.dropped;

  const std::size_t kept = out.snapshots.size();
  RealVector series(kept);
  for (std::size_t k = 0; k < width; ++k) {
    for (std::size_t i = 0; i < kept; ++i) series[i] = std::abs(out.snapshots[i].h[k]);
    const RealVector smooth = savitzky_golay(lowpass(series, spec, session.snapshot_rate), spec);
    for (std::size_t i = 0; i < kept; ++i) {
      const double phase = std::arg(out.snapshots[i].h[k]);
      out.snapshots[i].h[k] = Complex(smooth[i] * std::cos(phase), smooth[i] * std::sin(phase));
    }
  }
  return result;
}

}  // namespace rfhydro
