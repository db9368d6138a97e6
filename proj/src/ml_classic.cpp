#include "rfhydro/ml_classic.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <numeric>

#include "rfhydro/rng.hpp"

namespace rfhydro {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void require_two_classes(std::span<const int> y, const char* who) {
  bool seen[2] = {false, false};
  for (int v : y) seen[v != 0] = true;
  if (!seen[0] || !seen[1]) throw DataError(std::string(who) + ": training data has a single class");
}

int vote(std::span<const int> predictions) {
  std::size_t ones = 0;
  for (int p : predictions) ones += p != 0;
  const std::size_t zeros = predictions.size() - ones;
  if (ones == zeros) return predictions.empty() ? 0 : predictions.front();
  return ones > zeros ? 1 : 0;
}

// LRU cache of rows of Q_ij = y_i y_j K(x_i, x_j).
class KernelRows {
 public:
  KernelRows(const FeatureMatrix& x, std::span<const int> sign, Kernel kernel, std::size_t bytes)
      : x_(x), sign_(sign), kernel_(kernel), n_(x.rows) {
    capacity_ = std::clamp<std::size_t>(bytes / std::max<std::size_t>(1, n_ * sizeof(double)), 2, n_);
    slot_of_.assign(n_, -1);
    diag_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) diag_[i] = kernel_value(kernel_, x_.row(i), x_.row(i));
  }

  double diag(std::size_t i) const { return diag_[i]; }

  const double* row(std::size_t i) {
    if (slot_of_[i] >= 0) {
      lru_.splice(lru_.begin(), lru_, where_[static_cast<std::size_t>(slot_of_[i])]);
      return storage_[static_cast<std::size_t>(slot_of_[i])].data();
    }
    std::size_t slot;
    if (storage_.size() < capacity_) {
      slot = storage_.size();
      storage_.emplace_back(n_);
      owner_.push_back(i);
      lru_.push_front(slot);
      where_.push_back(lru_.begin());
    } else {
      slot = lru_.back();
      slot_of_[owner_[slot]] = -1;
      owner_[slot] = i;
      lru_.splice(lru_.begin(), lru_, where_[slot]);
    }
    slot_of_[i] = static_cast<long>(slot);
    auto& r = storage_[slot];
    const auto xi = x_.row(i);
    for (std::size_t j = 0; j < n_; ++j)
      r[j] = static_cast<double>(sign_[i] * sign_[j]) * kernel_value(kernel_, xi, x_.row(j));
    return r.data();
  }

 private:
  const FeatureMatrix& x_;
  std::span<const int> sign_;
  Kernel kernel_;
  std::size_t n_;
  std::size_t capacity_;
  std::vector<long> slot_of_;
  std::vector<std::size_t> owner_;
  std::vector<RealVector> storage_;
  std::list<std::size_t> lru_;
  std::vector<std::list<std::size_t>::iterator> where_;
  RealVector diag_;
};

}  // namespace

std::vector<int> Classifier::predict_all(const FeatureMatrix& x) const {
  std::vector<int> out(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) out[i] = predict(x.row(i));
  return out;
}

// --- KNN --------------------------------------------------------------------

int KnnCore::predict(std::span<const double> x) const {
  if (points.rows == 0) throw DataError("knn: empty training set");
  if (x.size() != points.cols) throw DimensionError("knn: query dimension mismatch");
  const std::size_t n = points.rows;
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = points.row(i);
    double d = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double diff = p[j] - x[j];
      d += diff * diff;
    }
    dist[i] = {d, i};
  }
  const std::size_t kk = std::min(k, n);
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
  std::size_t ones = 0;
  for (std::size_t i = 0; i < kk; ++i) ones += labels[dist[i].second] != 0;
  const std::size_t zeros = kk - ones;
  if (ones == zeros) return labels[dist[0].second];
  return ones > zeros ? 1 : 0;
}

KnnModel KnnModel::fit(const LabeledData& data, std::size_t k) {
  data.check();
  if (data.size() == 0) throw DataError("knn_fit: empty training set");
  if (k == 0 || k > data.size())
    throw ConfigError("knn_fit: k = " + std::to_string(k) + " must be in [1, " +
                      std::to_string(data.size()) + "]");
  KnnModel m;
  m.standardizer = Standardizer::fit(data.x);
  m.core.points = m.standardizer.transform(data.x);
  m.core.labels = data.y;
  m.core.k = k;
  return m;
}

int KnnModel::predict(std::span<const double> x) const {
  return core.predict(standardizer.apply(x));
}

// --- SVM --------------------------------------------------------------------

std::string_view to_string(Kernel kernel) {
  switch (kernel) {
    case Kernel::linear: return "linear";
    case Kernel::poly2: return "poly2";
    case Kernel::poly3: return "poly3";
  }
  return "linear";
}

Kernel parse_kernel(std::string_view text) {
  if (text == "linear") return Kernel::linear;
  if (text == "poly2") return Kernel::poly2;
  if (text == "poly3") return Kernel::poly3;
  throw ConfigError("unknown kernel '" + std::string(text) + "'");
}

double kernel_value(Kernel kernel, std::span<const double> a, std::span<const double> b) {
  const double d = dot(a, b);
  switch (kernel) {
    case Kernel::linear: return d;
    case Kernel::poly2: return (1.0 + d) * (1.0 + d);
    case Kernel::poly3: return (1.0 + d) * (1.0 + d) * (1.0 + d);
  }
  return d;
}

SvmSolution solve_svm_dual(const FeatureMatrix& x, std::span<const int> y,
                           const SvmOptions& options) {
  const std::size_t n = x.rows;
  if (y.size() != n) throw DimensionError("svm: label count mismatch");
  require_two_classes(y, "svm_fit");
  if (!(options.c > 0.0)) throw ConfigError("svm: C must be positive");
  if (!(options.tolerance > 0.0)) throw ConfigError("svm: tolerance must be positive");

  constexpr double tau = 1e-12;
  const double c = options.c;
  std::vector<int> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = y[i] ? 1 : -1;
  KernelRows q(x, s, options.kernel, options.cache_bytes);

  SvmSolution sol;
  sol.alpha.assign(n, 0.0);
  RealVector& a = sol.alpha;
  RealVector g(n, -1.0);  // gradient of 0.5 a'Qa - e'a
  const std::size_t max_iter =
      options.max_iterations ? options.max_iterations : std::max<std::size_t>(10000000, 100 * n);

  auto upper = [&](std::size_t t) { return a[t] >= c; };
  auto lower = [&](std::size_t t) { return a[t] <= 0.0; };
  auto objective = [&] {
    double f = 0.0;
    for (std::size_t t = 0; t < n; ++t) f += a[t] * (g[t] - 1.0);
    return 0.5 * f;
  };

  for (sol.iterations = 0; sol.iterations < max_iter; ++sol.iterations) {
    // i maximizes -y_t G_t over I_up.
    double gmax = -std::numeric_limits<double>::infinity();
    long i = -1;
    for (std::size_t t = 0; t < n; ++t) {
      if (s[t] == 1) {
        if (!upper(t) && -g[t] >= gmax) { gmax = -g[t]; i = static_cast<long>(t); }
      } else {
        if (!lower(t) && g[t] >= gmax) { gmax = g[t]; i = static_cast<long>(t); }
      }
    }
    double gmax2 = -std::numeric_limits<double>::infinity();
    long j = -1;
    double best = std::numeric_limits<double>::infinity();
    const double* qi = i >= 0 ? q.row(static_cast<std::size_t>(i)) : nullptr;
    for (std::size_t t = 0; t < n; ++t) {
      if (s[t] == 1) {
        if (lower(t)) continue;
        const double diff = gmax + g[t];
        gmax2 = std::max(gmax2, g[t]);
        if (diff > 0.0 && qi) {
          double quad = q.diag(static_cast<std::size_t>(i)) + q.diag(t) -
                        2.0 * s[static_cast<std::size_t>(i)] * qi[t];
          if (quad <= 0.0) quad = tau;
          const double obj = -(diff * diff) / quad;
          if (obj <= best) { best = obj; j = static_cast<long>(t); }
        }
      } else {
        if (upper(t)) continue;
        const double diff = gmax - g[t];
        gmax2 = std::max(gmax2, -g[t]);
        if (diff > 0.0 && qi) {
          double quad = q.diag(static_cast<std::size_t>(i)) + q.diag(t) +
                        2.0 * s[static_cast<std::size_t>(i)] * qi[t];
          if (quad <= 0.0) quad = tau;
          const double obj = -(diff * diff) / quad;
          if (obj <= best) { best = obj; j = static_cast<long>(t); }
        }
      }
    }
    sol.kkt_gap = gmax + gmax2;
    if (sol.kkt_gap < options.tolerance || i < 0 || j < 0) {
      sol.converged = true;
      break;
    }

    const auto ui = static_cast<std::size_t>(i);
    const auto uj = static_cast<std::size_t>(j);
    const double* qj = q.row(uj);
    qi = q.row(ui);
    const double old_ai = a[ui];
    const double old_aj = a[uj];
    if (s[ui] != s[uj]) {
      double quad = q.diag(ui) + q.diag(uj) + 2.0 * qi[uj];
      if (quad <= 0.0) quad = tau;
      const double delta = (-g[ui] - g[uj]) / quad;
      const double diff = a[ui] - a[uj];
      a[ui] += delta;
      a[uj] += delta;
      if (diff > 0.0) {
        if (a[uj] < 0.0) { a[uj] = 0.0; a[ui] = diff; }
      } else {
        if (a[ui] < 0.0) { a[ui] = 0.0; a[uj] = -diff; }
      }
      if (diff > 0.0) {
        if (a[ui] > c) { a[ui] = c; a[uj] = c - diff; }
      } else {
        if (a[uj] > c) { a[uj] = c; a[ui] = c + diff; }
      }
    } else {
      double quad = q.diag(ui) + q.diag(uj) - 2.0 * qi[uj];
      if (quad <= 0.0) quad = tau;
      const double delta = (g[ui] - g[uj]) / quad;
      const double sum = a[ui] + a[uj];
      a[ui] -= delta;
      a[uj] += delta;
      if (sum > c) {
        if (a[ui] > c) { a[ui] = c; a[uj] = sum - c; }
      } else {
        if (a[uj] < 0.0) { a[uj] = 0.0; a[ui] = sum; }
      }
      if (sum > c) {
        if (a[uj] > c) { a[uj] = c; a[ui] = sum - c; }
      } else {
        if (a[ui] < 0.0) { a[ui] = 0.0; a[uj] = sum; }
      }
    }
    const double dai = a[ui] - old_ai;
    const double daj = a[uj] - old_aj;
    for (std::size_t t = 0; t < n; ++t) g[t] += qi[t] * dai + qj[t] * daj;
    sol.objective_trace.push_back(objective());
  }

  // Bias from free vectors, else the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = s[t] * g[t];
    if (upper(t)) {
      if (s[t] == -1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (s[t] == 1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);
  sol.bias = -rho;
  return sol;
}

double SvmCore::decision(std::span<const double> x) const {
  double f = bias;
  for (std::size_t i = 0; i < support.rows; ++i) f += coef[i] * kernel_value(kernel, support.row(i), x);
  return f;
}

SvmModel SvmModel::fit(const LabeledData& data, const SvmOptions& options) {
  data.check();
  require_two_classes(data.y, "svm_fit");
  SvmModel m;
  m.standardizer = Standardizer::fit(data.x);
  const FeatureMatrix xs = m.standardizer.transform(data.x);
  const SvmSolution sol = solve_svm_dual(xs, data.y, options);
  m.core.kernel = options.kernel;
  m.core.bias = sol.bias;
  m.core.support.cols = xs.cols;
  for (std::size_t i = 0; i < xs.rows; ++i) {
    if (sol.alpha[i] <= 0.0) continue;
    m.core.support.push_row(xs.row(i));
    m.core.coef.push_back(sol.alpha[i] * (data.y[i] ? 1.0 : -1.0));
  }
  m.c = options.c;
  m.iterations = sol.iterations;
  m.kkt_gap = sol.kkt_gap;
  return m;
}

double SvmModel::decision(std::span<const double> x) const {
  return core.decision(standardizer.apply(x));
}

int SvmModel::predict(std::span<const double> x) const { return decision(x) > 0.0 ? 1 : 0; }

// --- Trees ------------------------------------------------------------------

double gini(std::span<const int> y, std::span<const double> w, std::span<const std::size_t> rows) {
  double w0 = 0.0, w1 = 0.0;
  for (auto r : rows) (y[r] ? w1 : w0) += w.empty() ? 1.0 : w[r];
  const double total = w0 + w1;
  if (total <= 0.0) return 0.0;
  return 1.0 - (w0 * w0 + w1 * w1) / (total * total);
}

SplitChoice best_split(const FeatureMatrix& x, std::span<const int> y, std::span<const double> w,
                       std::span<const std::size_t> rows) {
  SplitChoice best;
  const std::size_t n = rows.size();
  if (n < 2) return best;
  auto weight = [&](std::size_t r) { return w.empty() ? 1.0 : w[r]; };
  double total0 = 0.0, total1 = 0.0;
  for (auto r : rows) (y[r] ? total1 : total0) += weight(r);
  const double total = total0 + total1;
  if (total <= 0.0) return best;

  std::vector<std::size_t> order(rows.begin(), rows.end());
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < x.cols; ++f) {
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double va = x.at(a, f), vb = x.at(b, f);
      return va < vb || (va == vb && a < b);
    });
    double l0 = 0.0, l1 = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      const std::size_t r = order[p];
      (y[r] ? l1 : l0) += weight(r);
      const double v = x.at(r, f);
      const double next = x.at(order[p + 1], f);
      if (!(next > v)) continue;
      const double lw = l0 + l1;
      const double rw = total - lw;
      if (lw <= 0.0 || rw <= 0.0) continue;
      const double r0 = total0 - l0, r1 = total1 - l1;
      // Sum over children of W_child * gini_child.
      const double score = (lw - (l0 * l0 + l1 * l1) / lw) + (rw - (r0 * r0 + r1 * r1) / rw);
      if (score < best_score) {
        best_score = score;
        best.found = true;
        best.feature = static_cast<int>(f);
        double mid = v + 0.5 * (next - v);
        if (!(mid < next)) mid = v;
        best.threshold = mid;
      }
    }
  }
  if (best.found) best.impurity = best_score / total;
  return best;
}

TreeCore grow_tree(const FeatureMatrix& x, std::span<const int> y, std::span<const double> w,
                   std::size_t max_splits) {
  if (x.rows == 0) throw DataError("tree_fit: empty training set");
  if (y.size() != x.rows) throw DimensionError("tree_fit: label count mismatch");
  if (!w.empty() && w.size() != x.rows) throw DimensionError("tree_fit: weight count mismatch");

  TreeCore tree;
  std::vector<std::vector<std::size_t>> members;
  auto make_leaf = [&](std::vector<std::size_t> rows) {
    double w0 = 0.0, w1 = 0.0;
    for (auto r : rows) (y[r] ? w1 : w0) += w.empty() ? 1.0 : w[r];
    TreeNode node;
    node.label = w1 > w0 ? 1 : 0;
    tree.nodes.push_back(node);
    members.push_back(std::move(rows));
    return static_cast<int>(tree.nodes.size() - 1);
  };

  std::vector<std::size_t> all(x.rows);
  std::iota(all.begin(), all.end(), 0);
  make_leaf(std::move(all));

  std::size_t splits = 0;
  std::size_t head = 0;  // nodes are appended in breadth-first order
  while (head < tree.nodes.size() && splits < max_splits) {
    const std::size_t id = head++;
    const double parent = gini(y, w, members[id]);
    if (parent <= 0.0) continue;
    const SplitChoice split = best_split(x, y, w, members[id]);
    if (!split.found || !(split.impurity < parent - 1e-12)) continue;

    std::vector<std::size_t> left, right;
    for (auto r : members[id])
      (x.at(r, static_cast<std::size_t>(split.feature)) <= split.threshold ? left : right)
          .push_back(r);
    members[id].clear();
    const int l = make_leaf(std::move(left));
    const int r = make_leaf(std::move(right));
    TreeNode& node = tree.nodes[id];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = l;
    node.right = r;
    ++splits;
  }
  return tree;
}

int TreeCore::predict(std::span<const double> x) const {
  std::size_t id = 0;
  while (nodes[id].feature >= 0) {
    const auto& node = nodes[id];
    id = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold
                                      ? node.left
                                      : node.right);
  }
  return nodes[id].label;
}

std::size_t TreeCore::split_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.feature >= 0; }));
}

TreeModel TreeModel::fit(const LabeledData& data, std::size_t max_splits) {
  data.check();
  if (data.size() == 0) throw DataError("tree_fit: empty training set");
  TreeModel m;
  m.standardizer = Standardizer::fit(data.x);
  m.core = grow_tree(m.standardizer.transform(data.x), data.y, {}, max_splits);
  m.max_splits = max_splits;
  return m;
}

int TreeModel::predict(std::span<const double> x) const {
  return core.predict(standardizer.apply(x));
}

// --- LDA --------------------------------------------------------------------

double LdaCore::score(std::span<const double> x) const {
  if (x.size() != w.size()) throw DimensionError("lda: query dimension mismatch");
  return dot(w, x) + b;
}

LdaCore fit_lda(const FeatureMatrix& x, std::span<const int> y, double shrinkage) {
  if (y.size() != x.rows) throw DimensionError("lda: label count mismatch");
  require_two_classes(y, "ld_fit");
  const auto d = static_cast<Eigen::Index>(x.cols);
  Eigen::VectorXd mean[2] = {Eigen::VectorXd::Zero(d), Eigen::VectorXd::Zero(d)};
  double count[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < x.rows; ++i) {
    const int c = y[i] != 0;
    mean[c] += Eigen::Map<const Eigen::VectorXd>(x.row(i).data(), d);
    count[c] += 1.0;
  }
  mean[0] /= count[0];
  mean[1] /= count[1];

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(x.row(i).data(), d) - mean[y[i] != 0];
    cov.noalias() += r * r.transpose();
  }
  cov /= std::max(1.0, static_cast<double>(x.rows) - 2.0);
  const double trace = cov.trace();
  const double ridge = trace > 0.0 ? shrinkage * trace / static_cast<double>(d) : shrinkage;
  cov.diagonal().array() += ridge;

  const Eigen::VectorXd w = cov.ldlt().solve(mean[1] - mean[0]);
  LdaCore core;
  core.w.assign(w.data(), w.data() + d);
  core.b = -0.5 * w.dot(mean[0] + mean[1]) + std::log(count[1] / count[0]);
  return core;
}

LdaModel LdaModel::fit(const LabeledData& data, double shrinkage) {
  data.check();
  LdaModel m;
  m.standardizer = Standardizer::fit(data.x);
  m.core = fit_lda(m.standardizer.transform(data.x), data.y, shrinkage);
  return m;
}

int LdaModel::predict(std::span<const double> x) const {
  return core.predict(standardizer.apply(x));
}

// --- Ensembles --------------------------------------------------------------

std::string_view to_string(EnsembleKind kind) {
  switch (kind) {
    case EnsembleKind::boosted_tree: return "boosted_tree";
    case EnsembleKind::bagged_tree: return "bagged_tree";
    case EnsembleKind::subspace_knn: return "subspace_knn";
    case EnsembleKind::subspace_discriminant: return "subspace_discriminant";
  }
  return "bagged_tree";
}

EnsembleKind parse_ensemble_kind(std::string_view text) {
  if (text == "boosted_tree") return EnsembleKind::boosted_tree;
  if (text == "bagged_tree") return EnsembleKind::bagged_tree;
  if (text == "subspace_knn") return EnsembleKind::subspace_knn;
  if (text == "subspace_discriminant") return EnsembleKind::subspace_discriminant;
  throw ConfigError("unknown ensemble kind '" + std::string(text) + "'");
}

void boost_trees(const FeatureMatrix& xs, std::span<const int> y, const EnsembleOptions& options,
                 std::vector<TreeCore>& trees, RealVector& alphas,
                 std::vector<BoostRound>* trace) {
  const std::size_t n = xs.rows;
  RealVector w(n, 1.0 / static_cast<double>(n));
  for (std::size_t m = 0; m < options.members; ++m) {
    TreeCore tree = grow_tree(xs, y, w, options.boost_max_splits);
    std::vector<char> miss(n);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      miss[i] = tree.predict(xs.row(i)) != y[i];
      if (miss[i]) err += w[i];
    }
    if (err >= 0.5) {
      // A useless first learner is still kept so the model can predict.
      if (trees.empty()) {
        trees.push_back(std::move(tree));
        alphas.push_back(1.0);
      }
      break;
    }
    const double e = std::max(err, 1e-10);
    const double alpha = options.learning_rate * std::log((1.0 - e) / e);
    trees.push_back(std::move(tree));
    alphas.push_back(alpha);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (miss[i]) w[i] *= std::exp(alpha);
      total += w[i];
    }
    for (auto& v : w) v /= total;
    if (trace) trace->push_back({err, alpha, w});
    if (err <= 0.0) break;
  }
}

EnsembleModel EnsembleModel::fit(const LabeledData& data, const EnsembleOptions& options,
                                 std::vector<BoostRound>* boost_trace) {
  data.check();
  if (data.size() == 0) throw DataError("ensemble_fit: empty training set");
  if (options.members == 0) throw ConfigError("ensemble_fit: members must be >= 1");
  EnsembleModel m;
  m.ensemble_kind = options.kind;
  m.standardizer = Standardizer::fit(data.x);
  const FeatureMatrix xs = m.standardizer.transform(data.x);
  const std::size_t n = xs.rows;

  switch (options.kind) {
    case EnsembleKind::boosted_tree:
      boost_trees(xs, data.y, options, m.trees, m.tree_weights, boost_trace);
      break;
    case EnsembleKind::bagged_tree:
      for (std::size_t k = 0; k < options.members; ++k) {
        if (!options.bootstrap) {
          m.trees.push_back(grow_tree(xs, data.y, {}, n - 1));
          continue;
        }
        Rng rng(derive_seed(options.seed, 0x626167ULL, k));
        std::vector<std::size_t> sample(n);
        for (auto& s : sample) s = rng.below(n);
        const LabeledData boot = LabeledData{xs, data.y}.subset(sample);
        m.trees.push_back(grow_tree(boot.x, boot.y, {}, n - 1));
      }
      break;
    case EnsembleKind::subspace_knn:
    case EnsembleKind::subspace_discriminant: {
      const std::size_t dim = std::min(options.subspace_dim, xs.cols);
      if (dim == 0) throw ConfigError("ensemble_fit: subspace_dim must be >= 1");
      if (options.kind == EnsembleKind::subspace_discriminant)
        require_two_classes(data.y, "ensemble_fit");
      for (std::size_t k = 0; k < options.members; ++k) {
        Rng rng(derive_seed(options.seed, 0x737562ULL, k));
        std::vector<std::size_t> features(xs.cols);
        std::iota(features.begin(), features.end(), 0);
        for (std::size_t i = 0; i < dim; ++i)
          std::swap(features[i], features[i + rng.below(xs.cols - i)]);
        features.resize(dim);
        std::sort(features.begin(), features.end());
        FeatureMatrix sub = xs.select_cols(features);
        if (options.kind == EnsembleKind::subspace_knn) {
          m.knns.push_back({std::move(sub), data.y, std::min(options.subspace_knn_k, n)});
        } else {
          m.ldas.push_back(fit_lda(sub, data.y, options.lda_shrinkage));
        }
        m.masks.push_back(std::move(features));
      }
      break;
    }
  }
  return m;
}

std::size_t EnsembleModel::member_count() const {
  switch (ensemble_kind) {
    case EnsembleKind::boosted_tree:
    case EnsembleKind::bagged_tree: return trees.size();
    case EnsembleKind::subspace_knn: return knns.size();
    case EnsembleKind::subspace_discriminant: return ldas.size();
  }
  return 0;
}

int EnsembleModel::predict(std::span<const double> x) const {
  const RealVector xs = standardizer.apply(x);
  if (ensemble_kind == EnsembleKind::boosted_tree) {
    double score = 0.0;
    for (std::size_t m = 0; m < trees.size(); ++m)
      score += tree_weights[m] * (trees[m].predict(xs) ? 1.0 : -1.0);
    return score > 0.0 ? 1 : 0;
  }
  std::vector<int> votes;
  votes.reserve(member_count());
  if (ensemble_kind == EnsembleKind::bagged_tree) {
    for (const auto& t : trees) votes.push_back(t.predict(xs));
  } else {
    RealVector sub;
    for (std::size_t m = 0; m < masks.size(); ++m) {
      sub.resize(masks[m].size());
      for (std::size_t j = 0; j < sub.size(); ++j) sub[j] = xs[masks[m][j]];
      votes.push_back(ensemble_kind == EnsembleKind::subspace_knn ? knns[m].predict(sub)
                                                                  : ldas[m].predict(sub));
    }
  }
  return vote(votes);
}

}  // namespace rfhydro
