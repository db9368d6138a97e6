#pragma once

/**
 * @file body_channel.hpp
 * @brief Parametric stand-in for the subject and the over-the-air link.
 *
 * A session's channel is a short static multipath response plus one motion
 * path whose phase follows breathing, the cardiac cycle and a slow random
 * walk. Hydration state shifts the heart rate, the cardiac amplitude and the
 * reflection strength of the motion path.
 */

#include <cstddef>
#include <cstdint>
#include <limits>

#include "rfhydro/ofdm_modem.hpp"
#include "rfhydro/rng.hpp"
#include "rfhydro/types.hpp"

namespace rfhydro {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double mid() const { return 0.5 * (lo + hi); }
  bool contains(double v) const { return v >= lo && v <= hi; }
};

struct HydrationProfile {
  Label label = Label::hydrated;
  Interval heart_rate;        ///< Hz
  Interval reflection_scale;  ///< unitless
  Interval heart_amp;         ///< radians
  std::uint64_t jitter_seed = 0;

  /// Checks interval ordering and sign constraints.
  void validate() const;
};

HydrationProfile default_hydrated_profile();
HydrationProfile default_dehydrated_profile();
/// Additionally enforces that the dehydrated heart-rate range lies above the
/// hydrated midpoint.
void validate_profile_pair(const HydrationProfile& hydrated, const HydrationProfile& dehydrated);

/// Geometry preset for one sensing method.
struct ScenarioPreset {
  ComplexVector static_taps;
  Complex motion_path_gain;
  std::size_t motion_delay = 0;  ///< tap index the motion path arrives on
  double breathing_rate = 0.25;  ///< Hz
  double breathing_amp = 0.3;    ///< radians
  double drift_std = 0.0;        ///< radians / sqrt(s)
  double subject_tap_jitter = 0.0;  ///< relative std of per-subject static tap perturbation
  double session_tap_jitter = 0.0;  ///< relative std of per-session perturbation
  /// Per-subject motion path phase offset, uniform in [-x, x] radians.
  double subject_motion_phase = 0.0;
};

/// CBDM: 3-tap reflection response, motion on tap 2. HBDM: single dominant
/// tap, motion path on the same delay (amplitude modulation), breathing halved.
ScenarioPreset scenario(Method kind);

struct ChannelModel {
  ComplexVector static_taps;
  Complex motion_path_gain;
  std::size_t motion_delay = 0;
  double breathing_rate = 0.25;
  double heart_rate = 1.0;
  double breathing_amp = 0.0;
  double heart_amp = 0.0;
  double reflection_scale = 1.0;
  double drift_std = 0.0;

  /// Throws ConfigError if the taps or motion delay do not fit in the cyclic prefix.
  void validate(std::size_t cp_len) const;
  /// Deterministic part of the motion phase at time t (breathing + cardiac).
  double motion_phase(double t) const;
  /// Complex gain of the motion path given the total phase.
  Complex motion_gain(double phase) const;
  /// Closed-form CFR at time t for a given drift value.
  ComplexVector frequency_response(double t, double drift, std::size_t n_subcarriers) const;
};

/// Draws one session's channel. Subject geometry depends on (seed, subject)
/// only, so both classes of a subject share it; the session parameters depend
/// on (seed, profile jitter seed, subject, session).
ChannelModel sample_channel(const HydrationProfile& profile, const ScenarioPreset& preset,
                            std::size_t subject_id, std::size_t session_id, std::uint64_t seed);

/// Random-walk state of the slow phase drift. Copyable: two copies advanced to
/// the same times produce the same drift.
struct DriftState {
  explicit DriftState(std::uint64_t seed) : rng(seed) {}
  Rng rng;
  double drift = 0.0;
  double last_t = std::numeric_limits<double>::quiet_NaN();
};

/// Applies the model to one frame frozen at time t and advances the drift
/// random walk from its last time to t.
ComplexVector apply(const ChannelModel& model, std::span<const Complex> frame_samples, double t,
                    DriftState& state);

/// FrameChannel adapter so the modem link can sound a body channel. The
/// channel is frozen at the frame center. Validates the model against the
/// frame's cyclic prefix on construction.
class BodyChannel final : public FrameChannel {
 public:
  BodyChannel(ChannelModel model, std::uint64_t drift_seed, const OfdmFrameCfg& cfg);
  ComplexVector apply(std::span<const Complex> frame, double t) override;
  const ChannelModel& model() const { return model_; }
  const DriftState& drift() const { return state_; }

 private:
  ChannelModel model_;
  DriftState state_;
  double freeze_offset_;
};

}  // namespace rfhydro
