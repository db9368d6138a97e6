#pragma once

#include <cstddef>
#include <span>

#include "rfhydro/session.hpp"
#include "rfhydro/types.hpp"

namespace rfhydro {

struct FilterSpec {
  double lowpass_cutoff = 10.0;  ///< Hz
  std::size_t lowpass_taps = 101;
  std::size_t sg_window = 11;
  std::size_t sg_polyorder = 3;
  double outlier_mads = 6.0;  ///< artifact threshold in median absolute deviations

  /// Throws ConfigError when the window is even, the order is too high, or
  /// the cutoff is not below Nyquist for `rate`.
  void validate(double rate) const;
};

/// Hamming-windowed sinc low-pass kernel, normalized to unit DC gain.
RealVector design_lowpass(const FilterSpec& spec, double rate);

/// Zero-phase forward-backward FIR low-pass. Edges are padded by odd
/// reflection of lowpass_taps - 1 samples. Effective response is |H(f)|^2.
RealVector lowpass(std::span<const double> series, const FilterSpec& spec, double rate);

/// Least-squares smoothing weights, one row per evaluation offset in
/// [-(window-1)/2, (window-1)/2], row-major window x window. Row `half` is the
/// usual centered convolution kernel.
RealVector savitzky_golay_weights(std::size_t window, std::size_t polyorder);

/// Savitzky-Golay smoothing. The first and last half-window samples use the
/// polynomial fitted on the first / last full window.
RealVector savitzky_golay(std::span<const double> series, const FilterSpec& spec);

struct PreprocessResult {
  Session session;
  std::size_t dropped = 0;
};

/// Artifact rejection on raw snapshot norms (median +- outlier_mads robust
/// sigmas, sigma = max(1.4826 * MAD, 1e-3 * median)),
/// then lowpass and Savitzky-Golay on each subcarrier's |h_i(t)| series of the
/// kept snapshots. Phases are kept raw; order and timestamps are preserved.
PreprocessResult preprocess_session(const Session& session, const FilterSpec& spec);

}  // namespace rfhydro
