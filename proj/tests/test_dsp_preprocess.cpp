#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "rfhydro/body_channel.hpp"
#include "rfhydro/dsp_preprocess.hpp"

using namespace rfhydro;

namespace {

constexpr double kRate = 250.0;

RealVector sinusoid(double f, std::size_t n) {
  RealVector x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(2.0 * std::numbers::pi * f * double(i) / kRate + 0.3);
  return x;
}

// Least-squares amplitude of a sinusoid of known frequency over [from, to).
double amplitude(const RealVector& y, double f, std::size_t from, std::size_t to) {
  double ss = 0, sc = 0, cc = 0, ys = 0, yc = 0;
  for (std::size_t i = from; i < to; ++i) {
    const double w = 2.0 * std::numbers::pi * f * double(i) / kRate;
    const double s = std::sin(w), c = std::cos(w);
    ss += s * s;
    sc += s * c;
    cc += c * c;
    ys += y[i] * s;
    yc += y[i] * c;
  }
  const double det = ss * cc - sc * sc;
  const double a = (ys * cc - yc * sc) / det;
  const double b = (yc * ss - ys * sc) / det;
  return std::hypot(a, b);
}

Session synthetic_session(double noise, std::uint64_t seed) {
  OfdmFrameCfg cfg;
  const auto m = sample_channel(default_hydrated_profile(), scenario(Method::cbdm), 0, 0, seed);
  BodyChannel channel(m, seed, cfg);
  Session s;
  s.snapshots = run_link(cfg, channel, 1000, noise, seed);
  return s;
}

}  // namespace

TEST_CASE("designed kernel matches the windowed-sinc reference") {
  FilterSpec spec;
  const auto h = design_lowpass(spec, kRate);
  const auto ref = oracle::hamming_sinc(spec.lowpass_taps, spec.lowpass_cutoff, kRate);
  REQUIRE(h.size() == ref.size());
  for (std::size_t i = 0; i < h.size(); ++i) CHECK(h[i] == doctest::Approx(ref[i]).epsilon(1e-12));
}

TEST_CASE("lowpass keeps a constant series") {
  FilterSpec spec;
  const RealVector x(500, 3.25);
  for (double v : lowpass(x, spec, kRate)) CHECK(std::abs(v - 3.25) < 1e-9);
}

TEST_CASE("lowpass passband and stopband gains follow the designed response") {
  FilterSpec spec;
  const auto h = oracle::hamming_sinc(spec.lowpass_taps, spec.lowpass_cutoff, kRate);
  const std::size_t n = 2500;
  for (double f : {0.1 * spec.lowpass_cutoff, 4.0 * spec.lowpass_cutoff}) {
    const auto y = lowpass(sinusoid(f, n), spec, kRate);
    REQUIRE(y.size() == n);
    const double gain = amplitude(y, f, 200, n - 200);
    const double designed = std::pow(oracle::fir_gain(h, f, kRate), 2);  // forward-backward
    if (f < spec.lowpass_cutoff) {
      CHECK(std::abs(gain - designed) < 0.01 * designed);
      CHECK(gain > 0.99);
    } else {
      CHECK(std::abs(gain - designed) <= 0.05 * std::max(designed, 1e-6) + 1e-9);
      CHECK(gain < 0.05);
    }
  }
}

TEST_CASE("lowpass rejects short series") {
  FilterSpec spec;
  CHECK_THROWS_AS(lowpass(RealVector(101, 1.0), spec, kRate), DataError);
  CHECK_NOTHROW(lowpass(RealVector(102, 1.0), spec, kRate));
}

TEST_CASE("Savitzky-Golay reproduces sampled cubics") {
  FilterSpec spec;
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const double c[4] = {rng.normal(), rng.normal(), rng.normal() * 0.1, rng.normal() * 0.01};
    RealVector x(200);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double t = double(i) * 0.1 - 10.0;
      x[i] = c[0] + c[1] * t + c[2] * t * t + c[3] * t * t * t;
    }
    const auto y = savitzky_golay(x, spec);
    for (std::size_t i = 0; i < x.size(); ++i) REQUIRE(std::abs(y[i] - x[i]) < 1e-9);
  }
}

TEST_CASE("Savitzky-Golay impulse response is the least-squares kernel") {
  FilterSpec spec;
  RealVector x(41, 0.0);
  x[20] = 1.0;
  const auto y = savitzky_golay(x, spec);
  const double published[11] = {-36, 9, 44, 69, 84, 89, 84, 69, 44, 9, -36};
  for (std::size_t j = 0; j < 11; ++j) {
    RealVector window(11, 0.0);
    window[j] = 1.0;
    const double ref = oracle::sg_fit_eval(window, 3, 0.0);
    CHECK(ref == doctest::Approx(published[j] / 429.0).epsilon(1e-9));
    CHECK(y[20 + 5 - j] == doctest::Approx(ref).epsilon(1e-9));
  }
  for (std::size_t i = 0; i < 15; ++i) CHECK(std::abs(y[i]) < 1e-12);
}

TEST_CASE("Savitzky-Golay edges extrapolate the first and last window fits") {
  FilterSpec spec;
  Rng rng(8);
  RealVector x(30);
  for (auto& v : x) v = rng.normal();
  const auto y = savitzky_golay(x, spec);
  const RealVector first(x.begin(), x.begin() + 11);
  const RealVector last(x.end() - 11, x.end());
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(y[i] == doctest::Approx(oracle::sg_fit_eval(first, 3, double(i) - 5.0)).epsilon(1e-9));
    CHECK(y[29 - i] == doctest::Approx(oracle::sg_fit_eval(last, 3, 5.0 - double(i))).epsilon(1e-9));
  }
  for (std::size_t i = 5; i < 25; ++i) {
    const RealVector w(x.begin() + i - 5, x.begin() + i + 6);
    CHECK(y[i] == doctest::Approx(oracle::sg_fit_eval(w, 3, 0.0)).epsilon(1e-9));
  }
}

TEST_CASE("Savitzky-Golay keeps constants and rejects short series") {
  FilterSpec spec;
  for (double v : savitzky_golay(RealVector(11, -2.0), spec)) CHECK(std::abs(v + 2.0) < 1e-12);
  CHECK_THROWS_AS(savitzky_golay(RealVector(10, 1.0), spec), DataError);
}

TEST_CASE("weight rows sum to one") {
  const auto w = savitzky_golay_weights(11, 3);
  REQUIRE(w.size() == 121);
  for (std::size_t r = 0; r < 11; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < 11; ++c) s += w[r * 11 + c];
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("both filters are linear") {
  FilterSpec spec;
  Rng rng(9);
  RealVector x(400), y(400), mix(400);
  const double a = 1.7, b = -0.4;
  for (std::size_t i = 0; i < 400; ++i) {
    x[i] = rng.normal();
    y[i] = rng.normal();
    mix[i] = a * x[i] + b * y[i];
  }
  const auto lx = lowpass(x, spec, kRate), ly = lowpass(y, spec, kRate), lm = lowpass(mix, spec, kRate);
  const auto sx = savitzky_golay(x, spec), sy = savitzky_golay(y, spec), sm = savitzky_golay(mix, spec);
  for (std::size_t i = 0; i < 400; ++i) {
    CHECK(std::abs(lm[i] - (a * lx[i] + b * ly[i])) < 1e-9);
    CHECK(std::abs(sm[i] - (a * sx[i] + b * sy[i])) < 1e-9);
  }
}

TEST_CASE("a second smoothing pass changes less than the first") {
  FilterSpec spec;
  Rng rng(10);
  RealVector x(500);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(0.05 * double(i)) + 0.3 * rng.normal();
  const auto once = savitzky_golay(x, spec);
  const auto twice = savitzky_golay(once, spec);
  double d1 = 0.0, d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    d1 += (once[i] - x[i]) * (once[i] - x[i]);
    d2 += (twice[i] - once[i]) * (twice[i] - once[i]);
  }
  CHECK(d2 < d1);
}

TEST_CASE("filter spec validation") {
  FilterSpec even;
  even.sg_window = 10;
  CHECK_THROWS_AS(even.validate(kRate), ConfigError);
  FilterSpec order;
  order.sg_polyorder = 11;
  CHECK_THROWS_AS(order.validate(kRate), ConfigError);
  FilterSpec nyquist;
  nyquist.lowpass_cutoff = 125.0;
  CHECK_THROWS_AS(nyquist.validate(kRate), ConfigError);
  CHECK_NOTHROW(FilterSpec{}.validate(kRate));
}

TEST_CASE("clean simulator output loses no snapshots") {
  const auto s = synthetic_session(0.0, 3);
  const auto r = preprocess_session(s, FilterSpec{});
  CHECK(r.dropped == 0);
  CHECK(r.session.snapshots.size() == s.snapshots.size());
}

TEST_CASE("a single scaled snapshot is the only one dropped") {
  auto s = synthetic_session(0.056, 4);
  for (auto& v : s.snapshots[321].h) v *= 100.0;
  const auto r = preprocess_session(s, FilterSpec{});
  CHECK(r.dropped == 1);
  CHECK(r.session.dropped_snapshots == 1);
  REQUIRE(r.session.snapshots.size() == s.snapshots.size() - 1);
  std::size_t j = 0;
  for (std::size_t i = 0; i < s.snapshots.size(); ++i) {
    if (i == 321) continue;
    CHECK(r.session.snapshots[j].frame_index == s.snapshots[i].frame_index);
    CHECK(r.session.snapshots[j].time == s.snapshots[i].time);
    // Phases stay raw.
    CHECK(std::abs(std::arg(r.session.snapshots[j].h[7]) - std::arg(s.snapshots[i].h[7])) < 1e-9);
    ++j;
  }
}

TEST_CASE("preprocess_session errors") {
  Session empty;
  CHECK_THROWS_AS(preprocess_session(empty, FilterSpec{}), DataError);
  auto ragged = synthetic_session(0.0, 1);
  ragged.snapshots[10].h.pop_back();
  CHECK_THROWS_AS(preprocess_session(ragged, FilterSpec{}), DimensionError);
}
