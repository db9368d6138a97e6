#pragma once

// Reference computations used as test oracles. They are deliberately naive
// and share no code with the library.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace oracle {

using cd = std::complex<double>;

// O(N^2) unitary DFT with kernel exp(-j 2 pi k n / N).
inline std::vector<cd> dft(const std::vector<cd>& x, bool inverse = false) {
  const std::size_t n = x.size();
  std::vector<cd> out(n);
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t k = 0; k < n; ++k) {
    cd acc = 0.0;
    for (std::size_t t = 0; t < n; ++t)
      acc += x[t] * std::polar(1.0, sign * 2.0 * std::numbers::pi * double((k * t) % n) / double(n));
    out[k] = acc / std::sqrt(double(n));
  }
  return out;
}

// Channel response via the DFT of the zero-padded tap vector (scaled back to
// an unnormalized sum).
inline std::vector<cd> channel_dft(const std::vector<cd>& taps, std::size_t n) {
  std::vector<cd> padded(n, 0.0);
  std::copy(taps.begin(), taps.end(), padded.begin());
  auto h = dft(padded);
  for (auto& v : h) v *= std::sqrt(double(n));
  return h;
}

// Brute-force k-NN: sort every training point by (distance, index), vote,
// ties to the nearest point's class.
inline int knn(const std::vector<std::vector<double>>& pts, const std::vector<int>& labels,
               const std::vector<double>& q, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> d;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) s += (pts[i][j] - q[j]) * (pts[i][j] - q[j]);
    d.push_back({s, i});
  }
  std::sort(d.begin(), d.end());
  int votes[2] = {0, 0};
  for (std::size_t i = 0; i < k; ++i) ++votes[labels[d[i].second]];
  if (votes[0] == votes[1]) return labels[d[0].second];
  return votes[1] > votes[0] ? 1 : 0;
}

inline double gini(double w0, double w1) {
  const double t = w0 + w1;
  if (t <= 0.0) return 0.0;
  return 1.0 - (w0 / t) * (w0 / t) - (w1 / t) * (w1 / t);
}

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double impurity = 0.0;
};

// Every midpoint of every feature, weighted children Gini normalized by node
// weight; strict improvement keeps the first (lowest feature, lowest threshold).
inline Split exhaustive_split(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                              const std::vector<double>& w) {
  Split best;
  best.impurity = 1e300;
  const std::size_t dims = x.front().size();
  double total = 0.0;
  for (double v : w) total += v;
  for (std::size_t f = 0; f < dims; ++f) {
    std::vector<double> values;
    for (const auto& row : x) values.push_back(row[f]);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
      const double thr = 0.5 * (values[i] + values[i + 1]);
      double l[2] = {0, 0}, r[2] = {0, 0};
      for (std::size_t n = 0; n < x.size(); ++n) (x[n][f] <= thr ? l : r)[y[n]] += w[n];
      const double imp = ((l[0] + l[1]) * gini(l[0], l[1]) + (r[0] + r[1]) * gini(r[0], r[1])) / total;
      if (imp < best.impurity - 1e-12) best = {int(f), thr, imp};
    }
  }
  return best;
}

// Savitzky-Golay by solving the local least-squares problem for one window
// with plain normal equations (Gaussian elimination).
inline double sg_fit_eval(const std::vector<double>& window, std::size_t order, double at) {
  const std::size_t m = window.size();
  const std::size_t p = order + 1;
  const double half = (double(m) - 1.0) / 2.0;
  std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    const double t = double(i) - half;
    for (std::size_t r = 0; r < p; ++r) {
      for (std::size_t c = 0; c < p; ++c) a[r][c] += std::pow(t, double(r + c));
      a[r][p] += std::pow(t, double(r)) * window[i];
    }
  }
  for (std::size_t c = 0; c < p; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < p; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    for (std::size_t r = 0; r < p; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k <= p; ++k) a[r][k] -= f * a[c][k];
    }
  }
  double v = 0.0;
  for (std::size_t r = 0; r < p; ++r) v += a[r][p] / a[r][r] * std::pow(at, double(r));
  return v;
}

// |H(f)| of a real FIR kernel at frequency f (Hz) for sampling rate fs.
inline double fir_gain(const std::vector<double>& h, double f, double fs) {
  cd acc = 0.0;
  for (std::size_t n = 0; n < h.size(); ++n)
    acc += h[n] * std::polar(1.0, -2.0 * std::numbers::pi * f * double(n) / fs);
  return std::abs(acc);
}

// Windowed-sinc low-pass reference: Hamming window, unit DC gain.
inline std::vector<double> hamming_sinc(std::size_t taps, double cutoff, double fs) {
  std::vector<double> h(taps);
  const double fc = cutoff / fs;
  const double mid = (double(taps) - 1.0) / 2.0;
  double sum = 0.0;
  for (std::size_t n = 0; n < taps; ++n) {
    const double t = double(n) - mid;
    const double sinc = t == 0.0 ? 2.0 * fc : std::sin(2.0 * std::numbers::pi * fc * t) / (std::numbers::pi * t);
    const double w = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * double(n) / (double(taps) - 1.0));
    h[n] = sinc * w;
    sum += h[n];
  }
  for (auto& v : h) v /= sum;
  return h;
}

// Frequency (Hz) of the largest non-DC periodogram bin of a real series.
inline double periodogram_peak(const std::vector<double>& x, double fs) {
  const std::size_t n = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= double(n);
  double best = -1.0;
  std::size_t best_k = 0;
  for (std::size_t k = 1; k < n / 2; ++k) {
    cd acc = 0.0;
    for (std::size_t t = 0; t < n; ++t)
      acc += (x[t] - mean) * std::polar(1.0, -2.0 * std::numbers::pi * double((k * t) % n) / double(n));
    if (std::norm(acc) > best) {
      best = std::norm(acc);
      best_k = k;
    }
  }
  return double(best_k) * fs / double(n);
}

struct HardMargin {
  bool found = false;
  Eigen::Vector2d w;
  double b = 0.0;
  double objective = 1e300;
};

// Hard-margin primal optimum by enumerating every candidate active set.
inline HardMargin enumerate_qp(const std::vector<Eigen::Vector2d>& x, const std::vector<double>& y) {
  HardMargin best;
  const int n = static_cast<int>(x.size());
  for (int mask = 1; mask < (1 << n); ++mask) {
    std::vector<int> s;
    for (int i = 0; i < n; ++i)
      if (mask >> i & 1) s.push_back(i);
    const int m = static_cast<int>(s.size());
    // Unknowns alpha_S and b: sum_j alpha_j y_j y_i <x_i,x_j> + y_i b = 1, sum alpha_j y_j = 0.
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m + 1, m + 1);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
    for (int r = 0; r < m; ++r) {
      for (int c = 0; c < m; ++c) a(r, c) = y[s[r]] * y[s[c]] * x[s[r]].dot(x[s[c]]);
      a(r, m) = y[s[r]];
      rhs(r) = 1.0;
      a(m, r) = y[s[r]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (lu.rank() < m + 1) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    bool ok = true;
    Eigen::Vector2d w = Eigen::Vector2d::Zero();
    for (int r = 0; r < m; ++r) {
      if (sol(r) < -1e-12) ok = false;
      w += sol(r) * y[s[r]] * x[s[r]];
    }
    const double b = sol(m);
    for (int i = 0; i < n && ok; ++i)
      if (y[i] * (w.dot(x[i]) + b) < 1.0 - 1e-9) ok = false;
    if (ok && 0.5 * w.squaredNorm() < best.objective) best = {true, w, b, 0.5 * w.squaredNorm()};
  }
  return best;
}

}  // namespace oracle
