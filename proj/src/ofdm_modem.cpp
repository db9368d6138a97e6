#include "rfhydro/ofdm_modem.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "rfhydro/rng.hpp"

namespace rfhydro {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr std::size_t kPilotSpacing = 5;
constexpr std::size_t kPilotCount = 12;

struct PlanPair {
  fftw_plan forward;
  fftw_plan inverse;
};

// FFTW planning is not thread-safe; execution of an existing plan on new
// arrays is. Plans are created once per size and live for the process.
const PlanPair& plans_for(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, PlanPair> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<fftw_complex> a(n), b(n);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  const int size = static_cast<int>(n);
  PlanPair pair{fftw_plan_dft_1d(size, a.data(), b.data(), FFTW_FORWARD, flags),
                fftw_plan_dft_1d(size, a.data(), b.data(), FFTW_BACKWARD, flags)};
  return cache.emplace(n, pair).first->second;
}

ComplexVector transform(std::span<const Complex> x, bool inverse) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  const PlanPair& plans = plans_for(n);
  ComplexVector in(x.begin(), x.end());
  ComplexVector out(n);
  fftw_execute_dft(inverse ? plans.inverse : plans.forward,
                   reinterpret_cast<fftw_complex*>(in.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (auto& v : out) v *= scale;
  return out;
}

}  // namespace

std::string_view to_string(SubcarrierLayout layout) {
  return layout == SubcarrierLayout::all_data ? "all_data" : "data52_pilot12";
}

SubcarrierLayout parse_layout(std::string_view text) {
  if (text == "all_data") return SubcarrierLayout::all_data;
  if (text == "data52_pilot12") return SubcarrierLayout::data52_pilot12;
  throw ConfigError("unknown subcarrier layout '" + std::string(text) + "'");
}

std::vector<SubcarrierRole> OfdmFrameCfg::subcarrier_map() const {
  std::vector<SubcarrierRole> roles(n_subcarriers, SubcarrierRole::data);
  if (layout == SubcarrierLayout::data52_pilot12) {
    for (std::size_t p = 0; p < kPilotCount && p * kPilotSpacing < n_subcarriers; ++p)
      roles[p * kPilotSpacing] = SubcarrierRole::pilot;
  }
  return roles;
}

std::size_t OfdmFrameCfg::data_subcarriers() const {
  std::size_t count = 0;
  for (auto role : subcarrier_map()) count += role == SubcarrierRole::data;
  return count;
}

void OfdmFrameCfg::validate() const {
  if (n_subcarriers == 0) throw ConfigError("n_subcarriers must be positive");
  if (cp_len >= n_subcarriers) throw ConfigError("cp_len must be smaller than n_subcarriers");
  if (bits_per_symbol != 2) throw ConfigError("only QPSK (2 bits per symbol) is supported");
  if (!(sample_rate > 0.0)) throw ConfigError("sample_rate must be positive");
  if (layout == SubcarrierLayout::data52_pilot12 &&
      n_subcarriers < (kPilotCount - 1) * kPilotSpacing + 1)
    throw ConfigError("data52_pilot12 layout needs at least 56 subcarriers");
  const std::size_t expected = bits_per_symbol * data_subcarriers();
  if (bits_per_frame != expected)
    throw ConfigError("bits_per_frame " + std::to_string(bits_per_frame) + " does not match " +
                      std::to_string(expected) + " for layout " + std::string(to_string(layout)));
}

BitVector generate_bits(std::uint64_t seed, std::size_t count) {
  Rng rng(seed);
  BitVector bits(count);
  for (auto& b : bits) b = rng.bit() ? 1 : 0;
  return bits;
}

ComplexVector qpsk_modulate(std::span<const std::uint8_t> bits) {
  if (bits.size() % 2 != 0)
    throw DimensionError("malformed frame: odd bit count " + std::to_string(bits.size()));
  ComplexVector symbols(bits.size() / 2);
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    const bool first = bits[2 * i] != 0;
    const bool second = bits[2 * i + 1] != 0;
    symbols[i] = {second ? -kInvSqrt2 : kInvSqrt2, first ? -kInvSqrt2 : kInvSqrt2};
  }
  return symbols;
}

BitVector qpsk_demodulate(std::span<const Complex> symbols) {
  BitVector bits(2 * symbols.size());
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    bits[2 * i] = symbols[i].imag() < 0.0 ? 1 : 0;
    bits[2 * i + 1] = symbols[i].real() < 0.0 ? 1 : 0;
  }
  return bits;
}

ComplexVector map_subcarriers(std::span<const Complex> data_symbols, const OfdmFrameCfg& cfg) {
  const auto roles = cfg.subcarrier_map();
  ComplexVector grid(cfg.n_subcarriers);
  std::size_t next = 0;
  for (std::size_t k = 0; k < roles.size(); ++k) {
    if (roles[k] == SubcarrierRole::pilot) {
      grid[k] = 1.0;
    } else {
      if (next >= data_symbols.size()) throw DimensionError("too few data symbols for frame");
      grid[k] = data_symbols[next++];
    }
  }
  if (next != data_symbols.size()) throw DimensionError("too many data symbols for frame");
  return grid;
}

ComplexVector extract_data(std::span<const Complex> grid, const OfdmFrameCfg& cfg) {
  if (grid.size() != cfg.n_subcarriers) throw DimensionError("grid size mismatch");
  const auto roles = cfg.subcarrier_map();
  ComplexVector data;
  data.reserve(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k)
    if (roles[k] == SubcarrierRole::data) data.push_back(grid[k]);
  return data;
}

ComplexVector fft_unitary(std::span<const Complex> x) { return transform(x, false); }
ComplexVector ifft_unitary(std::span<const Complex> x) { return transform(x, true); }

OfdmFrame ofdm_modulate(std::span<const Complex> symbols, const OfdmFrameCfg& cfg) {
  if (symbols.size() != cfg.n_subcarriers)
    throw DimensionError("ofdm_modulate: expected " + std::to_string(cfg.n_subcarriers) +
                         " symbols, got " + std::to_string(symbols.size()));
  OfdmFrame frame;
  frame.tx_symbols.assign(symbols.begin(), symbols.end());
  const ComplexVector body = ifft_unitary(symbols);
  frame.time_samples.reserve(cfg.frame_len());
  frame.time_samples.insert(frame.time_samples.end(), body.end() - cfg.cp_len, body.end());
  frame.time_samples.insert(frame.time_samples.end(), body.begin(), body.end());
  return frame;
}

ComplexVector ofdm_demodulate(std::span<const Complex> frame_samples, const OfdmFrameCfg& cfg) {
  if (frame_samples.size() != cfg.frame_len())
    throw DimensionError("ofdm_demodulate: expected " + std::to_string(cfg.frame_len()) +
                         " samples, got " + std::to_string(frame_samples.size()));
  return fft_unitary(frame_samples.subspan(cfg.cp_len));
}

CfrSnapshot estimate_cfr(std::span<const Complex> y, std::span<const Complex> x,
                         std::size_t frame_index, double time) {
  if (y.size() != x.size())
    throw DimensionError("estimate_cfr: y and x lengths differ (" + std::to_string(y.size()) +
                         " vs " + std::to_string(x.size()) + ")");
  CfrSnapshot snap;
  snap.frame_index = frame_index;
  snap.time = time;
  snap.h.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (std::abs(x[i]) < 1e-12)
      throw DataError("estimate_cfr: degenerate pilot on subcarrier " + std::to_string(i));
    snap.h[i] = y[i] / x[i];
  }
  return snap;
}

ComplexVector convolve_truncated(std::span<const Complex> taps, std::span<const Complex> x) {
  ComplexVector out(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) {
    Complex acc = 0.0;
    const std::size_t lmax = std::min(taps.size(), n + 1);
    for (std::size_t l = 0; l < lmax; ++l) acc += taps[l] * x[n - l];
    out[n] = acc;
  }
  return out;
}

ComplexVector StaticChannel::apply(std::span<const Complex> frame, double) {
  if (taps_.empty()) return ComplexVector(frame.begin(), frame.end());
  return convolve_truncated(taps_, frame);
}

ComplexVector tap_frequency_response(std::span<const Complex> taps, std::size_t n_subcarriers) {
  ComplexVector h(n_subcarriers);
  const double n = static_cast<double>(n_subcarriers);
  for (std::size_t k = 0; k < n_subcarriers; ++k) {
    Complex acc = 0.0;
    for (std::size_t l = 0; l < taps.size(); ++l) {
      // Reduce k*l mod N before forming the angle to keep it small.
      const double m = static_cast<double>((k * l) % n_subcarriers);
      acc += taps[l] * std::polar(1.0, -2.0 * std::numbers::pi * m / n);
    }
    h[k] = acc;
  }
  return h;
}

std::vector<CfrSnapshot> run_link(const OfdmFrameCfg& cfg, FrameChannel& channel,
                                  std::size_t n_frames, double noise_std, std::uint64_t seed,
                                  LinkStats* stats) {
  cfg.validate();
  if (n_frames == 0) throw ConfigError("run_link: n_frames must be positive");
  if (!(noise_std >= 0.0)) throw ConfigError("run_link: noise_std must be non-negative");

  Rng noise(derive_seed(seed, 0x6e6f697365ULL));
  const double per_axis = noise_std * kInvSqrt2;
  std::vector<CfrSnapshot> snapshots;
  snapshots.reserve(n_frames);
  for (std::size_t f = 0; f < n_frames; ++f) {
    const double t = static_cast<double>(f * cfg.frame_len()) / cfg.sample_rate;
    const BitVector bits = generate_bits(derive_seed(seed, 0x62697473ULL, f), cfg.bits_per_frame);
    const ComplexVector grid = map_subcarriers(qpsk_modulate(bits), cfg);
    const OfdmFrame frame = ofdm_modulate(grid, cfg);
    ComplexVector rx = channel.apply(frame.time_samples, t);
    if (rx.size() != frame.time_samples.size())
      throw DimensionError("channel changed the frame length");
    if (noise_std > 0.0)
      for (auto& s : rx) s += Complex(per_axis * noise.normal(), per_axis * noise.normal());
    const ComplexVector y = ofdm_demodulate(rx, cfg);
    if (stats) {
      const BitVector decided = qpsk_demodulate(extract_data(y, cfg));
      for (std::size_t i = 0; i < bits.size(); ++i) stats->bit_errors += decided[i] != bits[i];
      stats->bits += bits.size();
    }
    snapshots.push_back(estimate_cfr(y, frame.tx_symbols, f, t));
  }
  return snapshots;
}

}  // namespace rfhydro
