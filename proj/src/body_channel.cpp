#include "rfhydro/body_channel.hpp"

#include <cmath>
#include <numbers>

namespace rfhydro {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_interval(const Interval& iv, const char* name, bool positive) {
  if (!(iv.lo <= iv.hi)) throw ConfigError(std::string(name) + ": interval is empty (lo > hi)");
  if (positive ? !(iv.lo > 0.0) : !(iv.lo >= 0.0))
    throw ConfigError(std::string(name) + (positive ? ": must be > 0" : ": must be >= 0"));
}

double draw(Rng& rng, const Interval& iv) { return iv.lo == iv.hi ? iv.lo : rng.uniform(iv.lo, iv.hi); }

Complex complex_normal(Rng& rng) {
  return {rng.normal() * std::numbers::sqrt2 / 2.0, rng.normal() * std::numbers::sqrt2 / 2.0};
}

}  // namespace

void HydrationProfile::validate() const {
  check_interval(heart_rate, "heart_rate_range", true);
  check_interval(reflection_scale, "reflection_scale_range", false);
  check_interval(heart_amp, "heart_amp_range", false);
}

HydrationProfile default_hydrated_profile() {
  return {Label::hydrated, {1.00, 1.25}, {0.9, 1.1}, {0.05, 0.15}, 0x4859445241544544ULL};
}

HydrationProfile default_dehydrated_profile() {
  return {Label::dehydrated, {1.35, 1.70}, {0.7, 0.9}, {0.08, 0.20}, 0x4445485944524154ULL};
}

void validate_profile_pair(const HydrationProfile& hydrated, const HydrationProfile& dehydrated) {
  hydrated.validate();
  dehydrated.validate();
  if (hydrated.label != Label::hydrated || dehydrated.label != Label::dehydrated)
    throw ConfigError("profile labels do not match their roles");
  if (!(dehydrated.heart_rate.lo > hydrated.heart_rate.mid()))
    throw ConfigError("dehydrated heart_rate_range must lie above the hydrated midpoint");
}

ScenarioPreset scenario(Method kind) {
  ScenarioPreset p;
  if (kind == Method::cbdm) {
    p.static_taps = {Complex(1.0, 0.0), std::polar(0.2, 0.9), std::polar(0.1, -2.1)};
    p.motion_path_gain = std::polar(0.1, 0.4);
    p.motion_delay = 2;
    p.breathing_rate = 0.25;
    p.breathing_amp = 0.3;
  } else {
    p.static_taps = {Complex(1.0, 0.0)};
    p.motion_path_gain = std::polar(0.1, 1.1);
    p.motion_delay = 0;
    p.breathing_rate = 0.25;
    p.breathing_amp = 0.15;
  }
  p.drift_std = 0.02;
  p.subject_tap_jitter = 0.03;
  p.session_tap_jitter = 0.002;
  p.subject_motion_phase = 0.75;
  return p;
}

void ChannelModel::validate(std::size_t cp_len) const {
  if (static_taps.size() > cp_len)
    throw ConfigError("channel has " + std::to_string(static_taps.size()) +
                      " taps, longer than the cyclic prefix (" + std::to_string(cp_len) + ")");
  if (motion_delay >= std::max<std::size_t>(cp_len, 1))
    throw ConfigError("motion path delay exceeds the cyclic prefix");
  if (!(breathing_rate > 0.0) || !(heart_rate > 0.0)) throw ConfigError("rates must be > 0");
  if (!(breathing_amp >= 0.0) || !(heart_amp >= 0.0) || !(reflection_scale >= 0.0) ||
      !(drift_std >= 0.0))
    throw ConfigError("channel amplitudes must be >= 0");
}

double ChannelModel::motion_phase(double t) const {
  return breathing_amp * std::sin(kTwoPi * breathing_rate * t) +
         heart_amp * std::sin(kTwoPi * heart_rate * t);
}

Complex ChannelModel::motion_gain(double phase) const {
  return motion_path_gain * reflection_scale * std::polar(1.0, phase);
}

ComplexVector ChannelModel::frequency_response(double t, double drift,
                                               std::size_t n_subcarriers) const {
  ComplexVector taps = static_taps;
  if (taps.size() <= motion_delay) taps.resize(motion_delay + 1);
  taps[motion_delay] += motion_gain(motion_phase(t) + drift);
  return tap_frequency_response(taps, n_subcarriers);
}

ChannelModel sample_channel(const HydrationProfile& profile, const ScenarioPreset& preset,
                            std::size_t subject_id, std::size_t session_id, std::uint64_t seed) {
  profile.validate();
  ChannelModel m;
  m.static_taps = preset.static_taps;

  Rng subject_rng(derive_seed(seed, 0x7375626aULL, subject_id));
  Rng session_rng(derive_seed(seed, profile.jitter_seed, subject_id, session_id));
  for (auto& tap : m.static_taps) {
    const double mag = std::abs(tap);
    tap += preset.subject_tap_jitter * mag * complex_normal(subject_rng);
    tap += preset.session_tap_jitter * mag * complex_normal(session_rng);
  }

  m.motion_path_gain = preset.motion_path_gain *
                       std::polar(1.0, subject_rng.uniform(-1.0, 1.0) * preset.subject_motion_phase);
  m.motion_delay = preset.motion_delay;
  m.breathing_rate = preset.breathing_rate;
  m.breathing_amp = preset.breathing_amp;
  m.drift_std = preset.drift_std;
  m.heart_rate = draw(session_rng, profile.heart_rate);
  m.reflection_scale = draw(session_rng, profile.reflection_scale);
  m.heart_amp = draw(session_rng, profile.heart_amp);
  return m;
}

ComplexVector apply(const ChannelModel& model, std::span<const Complex> frame_samples, double t,
                    DriftState& state) {
  if (std::isnan(state.last_t)) {
    state.last_t = t;
  } else if (t > state.last_t) {
    state.drift += model.drift_std * std::sqrt(t - state.last_t) * state.rng.normal();
    state.last_t = t;
  }

  ComplexVector out = convolve_truncated(model.static_taps, frame_samples);
  const Complex g = model.motion_gain(model.motion_phase(t) + state.drift);
  for (std::size_t n = model.motion_delay; n < frame_samples.size(); ++n)
    out[n] += g * frame_samples[n - model.motion_delay];
  return out;
}

BodyChannel::BodyChannel(ChannelModel model, std::uint64_t drift_seed, const OfdmFrameCfg& cfg)
    : model_(std::move(model)), state_(drift_seed), freeze_offset_(0.5 * cfg.frame_duration()) {
  model_.validate(cfg.cp_len);
}

ComplexVector BodyChannel::apply(std::span<const Complex> frame, double t) {
  return rfhydro::apply(model_, frame, t + freeze_offset_, state_);
}

}  // namespace rfhydro
