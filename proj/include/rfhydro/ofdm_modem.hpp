#pragma once

/**
 * @file ofdm_modem.hpp
 * @brief OFDM/QPSK channel-sounding modem and per-subcarrier CFR estimation.
 *
 * Transform convention: unitary DFT, forward kernel exp(-j 2 pi k n / N),
 * scaled by 1/sqrt(N) in both directions. Under this convention a time-domain
 * channel with taps g[l] multiplies subcarrier k by sum_l g[l] exp(-j 2 pi k l / N).
 */

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rfhydro/types.hpp"

namespace rfhydro {

enum class SubcarrierRole : std::uint8_t { data, pilot };

/// `all_data`: known QPSK on every subcarrier. `data52_pilot12`: unit pilots on
/// indices 0, 5, ..., 55 and QPSK data elsewhere.
enum class SubcarrierLayout { all_data, data52_pilot12 };

std::string_view to_string(SubcarrierLayout layout);
SubcarrierLayout parse_layout(std::string_view text);

struct OfdmFrameCfg {
  std::size_t n_subcarriers = 64;
  std::size_t cp_len = 16;
  std::size_t bits_per_frame = 128;
  std::size_t bits_per_symbol = 2;
  double sample_rate = 20000.0;
  SubcarrierLayout layout = SubcarrierLayout::all_data;

  // RF front-end parameters of the reference transceiver. Recorded, never used.
  double carrier_hz = 5.23e9;
  double tx_gain_db = 40.0;
  double rx_gain_db = 40.0;
  int interpolation = 250;
  int decimation = 250;

  std::vector<SubcarrierRole> subcarrier_map() const;
  std::size_t data_subcarriers() const;
  std::size_t frame_len() const { return n_subcarriers + cp_len; }
  double frame_duration() const { return static_cast<double>(frame_len()) / sample_rate; }
  double snapshot_rate() const { return sample_rate / static_cast<double>(frame_len()); }

  /// Throws ConfigError when the layout, bit budget or CP length is inconsistent.
  void validate() const;
};

struct OfdmFrame {
  ComplexVector time_samples;  ///< cp_len + n_subcarriers samples, CP first
  ComplexVector tx_symbols;    ///< known frequency-domain symbols x_i
};

/// One channel frequency response estimate, taken from one frame.
struct CfrSnapshot {
  ComplexVector h;
  std::size_t frame_index = 0;
  double time = 0.0;
};

BitVector generate_bits(std::uint64_t seed, std::size_t count);

/// Gray-coded QPSK: 00 -> (+1+j)/sqrt2, 01 -> (-1+j)/sqrt2, 11 -> (-1-j)/sqrt2, 10 -> (+1-j)/sqrt2.
ComplexVector qpsk_modulate(std::span<const std::uint8_t> bits);
/// Hard-decision inverse of qpsk_modulate.
BitVector qpsk_demodulate(std::span<const Complex> symbols);

/// Places data symbols and pilots on the subcarrier grid.
ComplexVector map_subcarriers(std::span<const Complex> data_symbols, const OfdmFrameCfg& cfg);
/// Extracts the data-role subcarriers from a full grid.
ComplexVector extract_data(std::span<const Complex> grid, const OfdmFrameCfg& cfg);

/// Unitary forward / inverse DFT of arbitrary size (FFTW backed, thread-safe).
ComplexVector fft_unitary(std::span<const Complex> x);
ComplexVector ifft_unitary(std::span<const Complex> x);

OfdmFrame ofdm_modulate(std::span<const Complex> symbols, const OfdmFrameCfg& cfg);
ComplexVector ofdm_demodulate(std::span<const Complex> frame_samples, const OfdmFrameCfg& cfg);

/// h_i = y_i / x_i. Throws DataError if any |x_i| < 1e-12.
CfrSnapshot estimate_cfr(std::span<const Complex> y, std::span<const Complex> x,
                         std::size_t frame_index = 0, double time = 0.0);

/// A block-fading propagation channel seen by the link: the frame is frozen at
/// time `t` and mapped to received samples of the same length.
class FrameChannel {
 public:
  virtual ~FrameChannel() = default;
  virtual ComplexVector apply(std::span<const Complex> frame, double t) = 0;
};

/// Time-invariant FIR channel; an empty or {1} tap vector is the identity.
class StaticChannel final : public FrameChannel {
 public:
  explicit StaticChannel(ComplexVector taps) : taps_(std::move(taps)) {}
  ComplexVector apply(std::span<const Complex> frame, double t) override;
  const ComplexVector& taps() const { return taps_; }

 private:
  ComplexVector taps_;
};

/// Linear (non-circular) convolution truncated to the input length.
ComplexVector convolve_truncated(std::span<const Complex> taps, std::span<const Complex> x);

/// Closed-form channel response on N subcarriers: H[k] = sum_l taps[l] exp(-j 2 pi k l / N).
ComplexVector tap_frequency_response(std::span<const Complex> taps, std::size_t n_subcarriers);

struct LinkStats {
  std::size_t bit_errors = 0;
  std::size_t bits = 0;
};

/// Sounds `channel` with n_frames frames: bits -> QPSK -> OFDM -> channel -> AWGN
/// -> demodulate -> estimate_cfr. noise_std is the RMS of the complex noise sample.
std::vector<CfrSnapshot> run_link(const OfdmFrameCfg& cfg, FrameChannel& channel,
                                  std::size_t n_frames, double noise_std, std::uint64_t seed,
                                  LinkStats* stats = nullptr);

}  // namespace rfhydro
