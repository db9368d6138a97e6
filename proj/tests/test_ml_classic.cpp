#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "rfhydro/ml_classic.hpp"
#include "rfhydro/rng.hpp"

using namespace rfhydro;

namespace {

// Two Gaussian blobs with per-trial random centers.
LabeledData blobs(Rng& rng, std::size_t n, std::size_t dims, double sep = 1.0) {
  LabeledData d;
  d.x = FeatureMatrix(n, dims);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = i < n / 2 ? 0 : static_cast<int>(rng.below(2));
    d.y.push_back(i == 0 ? 0 : (i == 1 ? 1 : label));
    for (std::size_t j = 0; j < dims; ++j) d.x.at(i, j) = rng.normal() + (d.y[i] ? sep : 0.0);
  }
  return d;
}

std::vector<std::vector<double>> rows_of(const FeatureMatrix& m) {
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < m.rows; ++i) out.emplace_back(m.row(i).begin(), m.row(i).end());
  return out;
}

double sv_decision(const SvmSolution& sol, const FeatureMatrix& x, std::span<const int> y,
                   Kernel kernel, std::span<const double> q) {
  double f = sol.bias;
  for (std::size_t i = 0; i < x.rows; ++i)
    f += sol.alpha[i] * (y[i] ? 1.0 : -1.0) * kernel_value(kernel, x.row(i), q);
  return f;
}

}  // namespace

TEST_CASE("KNN matches the brute-force oracle on random sets") {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(49);
    const std::size_t dims = 1 + rng.below(5);
    const auto d = blobs(rng, n, dims);
    const auto pts = rows_of(d.x);
    for (std::size_t k = 1; k <= n; k += 1 + n / 7) {
      KnnCore core{d.x, d.y, k};
      for (int q = 0; q < 10; ++q) {
        std::vector<double> query(dims);
        for (auto& v : query) v = rng.normal() * 1.5;
        REQUIRE(core.predict(query) == oracle::knn(pts, d.y, query, k));
      }
    }
    // Full model compared against the oracle in standardized space.
    const std::size_t k = 1 + rng.below(n);
    const auto model = KnnModel::fit(d, k);
    const auto zpts = rows_of(model.core.points);
    for (int q = 0; q < 10; ++q) {
      std::vector<double> query(dims);
      for (auto& v : query) v = rng.normal();
      const auto z = model.standardizer.apply(query);
      REQUIRE(model.predict(query) == oracle::knn(zpts, d.y, z, k));
    }
  }
}

TEST_CASE("KNN degenerate cases") {
  LabeledData d;
  d.x.push_row(RealVector{0.0});
  d.x.push_row(RealVector{1.0});
  d.x.push_row(RealVector{5.0});
  d.x.push_row(RealVector{6.0});
  d.y = {0, 0, 1, 1};
  const auto m1 = KnnModel::fit(d, 1);
  for (std::size_t i = 0; i < 4; ++i) CHECK(m1.predict(d.x.row(i)) == d.y[i]);
  const auto m4 = KnnModel::fit(d, 4);
  CHECK(m4.predict(RealVector{0.8}) == 0);
  CHECK(m4.predict(RealVector{5.2}) == 1);
  CHECK_THROWS_AS(KnnModel::fit(d, 5), ConfigError);
  CHECK_THROWS_AS(KnnModel::fit(LabeledData{}, 1), DataError);
}

TEST_CASE("root split matches the exhaustive threshold scan") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(49);
    const auto d = blobs(rng, n, 1 + rng.below(4), 0.8);
    RealVector w(n);
    for (auto& v : w) v = trial % 2 ? 0.1 + rng.uniform() : 1.0;
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = i;
    const auto split = best_split(d.x, d.y, w, rows);
    const auto ref = oracle::exhaustive_split(rows_of(d.x), d.y, w);
    const double parent = oracle::gini(
        [&] { double s = 0; for (std::size_t i = 0; i < n; ++i) s += d.y[i] ? 0 : w[i]; return s; }(),
        [&] { double s = 0; for (std::size_t i = 0; i < n; ++i) s += d.y[i] ? w[i] : 0; return s; }());
    if (ref.feature < 0 || ref.impurity >= parent - 1e-12) continue;
    REQUIRE(split.found);
    CHECK(split.feature == ref.feature);
    CHECK(split.threshold == doctest::Approx(ref.threshold).epsilon(1e-12));
    CHECK(split.impurity == doctest::Approx(ref.impurity).epsilon(1e-9));
    const auto tree = grow_tree(d.x, d.y, w, 5);
    CHECK(tree.nodes[0].feature == ref.feature);
    CHECK(tree.nodes[0].threshold == doctest::Approx(ref.threshold).epsilon(1e-12));
  }
}

TEST_CASE("separable 1-D data splits at the class boundary") {
  LabeledData d;
  for (int i = 0; i < 50; ++i) {
    d.x.push_row(RealVector{double(i)});
    d.y.push_back(i > 20 ? 1 : 0);
  }
  const auto tree = grow_tree(d.x, d.y, {}, 100);
  CHECK(std::abs(tree.nodes[0].threshold - 20.5) <= 1.0);
  CHECK(tree.split_count() == 1);
  const auto model = TreeModel::fit(d, 100);
  for (std::size_t i = 0; i < 50; ++i) CHECK(model.predict(d.x.row(i)) == d.y[i]);
}

TEST_CASE("tree growth respects the split cap") {
  Rng rng(3);
  const auto d = blobs(rng, 300, 4, 0.3);
  for (std::size_t cap : {1u, 4u, 20u, 100u}) {
    const auto model = TreeModel::fit(d, cap);
    CHECK(model.core.split_count() <= cap);
  }
  CHECK(TreeModel::fit(d, 4).core.split_count() == 4);
}

TEST_CASE("gini impurity") {
  const std::vector<int> y{0, 0, 1, 1};
  const RealVector w{1, 1, 1, 1};
  const std::vector<std::size_t> all{0, 1, 2, 3};
  const std::vector<std::size_t> pure{0, 1};
  CHECK(gini(y, w, all) == doctest::Approx(0.5));
  CHECK(gini(y, w, pure) == 0.0);
}

TEST_CASE("SMO solution satisfies the KKT conditions") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 4 + rng.below(47);
    const auto d = blobs(rng, n, 1 + rng.below(4), 1.5);
    for (Kernel kernel : {Kernel::linear, Kernel::poly2, Kernel::poly3}) {
      SvmOptions opt;
      opt.kernel = kernel;
      opt.c = trial % 3 == 0 ? 10.0 : 1.0;
      const auto sol = solve_svm_dual(d.x, d.y, opt);
      REQUIRE(sol.converged);
      double balance = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double a = sol.alpha[i];
        CHECK(a >= -1e-12);
        CHECK(a <= opt.c + 1e-12);
        const double yi = d.y[i] ? 1.0 : -1.0;
        balance += a * yi;
        const double margin = yi * sv_decision(sol, d.x, d.y, kernel, d.x.row(i));
        const double eps = 1e-9 * opt.c;
        if (a <= eps) CHECK(margin >= 1.0 - 1e-3);
        else if (a >= opt.c - eps) CHECK(margin <= 1.0 + 1e-3);
        else CHECK(std::abs(margin - 1.0) <= 1e-3);
      }
      CHECK(std::abs(balance) < 1e-6);
      for (std::size_t i = 1; i < sol.objective_trace.size(); ++i)
        CHECK(sol.objective_trace[i] <= sol.objective_trace[i - 1] + 1e-12);
    }
  }
}

TEST_CASE("4-point separable QP reaches the enumerated optimum") {
  Rng rng(5);
  int solved = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Eigen::Vector2d> pts;
    std::vector<double> sign;
    FeatureMatrix x(4, 2);
    std::vector<int> y{0, 0, 1, 1};
    for (int i = 0; i < 4; ++i) {
      const double shift = y[i] ? 2.0 : -2.0;
      pts.emplace_back(rng.normal() + shift, rng.normal());
      sign.push_back(y[i] ? 1.0 : -1.0);
      x.at(i, 0) = pts.back()(0);
      x.at(i, 1) = pts.back()(1);
    }
    const auto ref = oracle::enumerate_qp(pts, sign);
    if (!ref.found) continue;
    ++solved;
    SvmOptions opt;
    opt.c = 1e4;
    const auto sol = solve_svm_dual(x, y, opt);
    Eigen::Vector2d w = Eigen::Vector2d::Zero();
    for (int i = 0; i < 4; ++i) w += sol.alpha[i] * sign[i] * pts[i];
    const double margin = 1.0 / w.norm();
    const double best_margin = 1.0 / ref.w.norm();
    CHECK(margin >= best_margin - 1e-3);
    CHECK(std::abs(0.5 * w.squaredNorm() - ref.objective) < 1e-3 * std::max(1.0, ref.objective));
    for (int i = 0; i < 4; ++i)
      CHECK((sv_decision(sol, x, y, Kernel::linear, x.row(i)) > 0) == (y[i] == 1));
  }
  CHECK(solved > 80);
}

TEST_CASE("XOR is separable with the quadratic kernel") {
  LabeledData d;
  d.x.push_row(RealVector{1, 1});
  d.x.push_row(RealVector{-1, -1});
  d.x.push_row(RealVector{1, -1});
  d.x.push_row(RealVector{-1, 1});
  d.y = {0, 0, 1, 1};
  SvmOptions opt;
  opt.kernel = Kernel::poly2;
  opt.c = 10.0;
  const auto m = SvmModel::fit(d, opt);
  for (std::size_t i = 0; i < 4; ++i) CHECK(m.predict(d.x.row(i)) == d.y[i]);
}

TEST_CASE("SVM input validation") {
  LabeledData one;
  one.x.push_row(RealVector{0.0});
  one.x.push_row(RealVector{1.0});
  one.y = {1, 1};
  CHECK_THROWS_AS(SvmModel::fit(one, SvmOptions{}), DataError);
  CHECK_THROWS_AS(parse_kernel("rbf"), ConfigError);
  CHECK(parse_kernel(to_string(Kernel::poly3)) == Kernel::poly3);
  const RealVector a{1, 2}, b{3, -1};
  CHECK(kernel_value(Kernel::linear, a, b) == 1.0);
  CHECK(kernel_value(Kernel::poly2, a, b) == 4.0);
  CHECK(kernel_value(Kernel::poly3, a, b) == 8.0);
}

TEST_CASE("one AdaBoost round matches the hand-computed update") {
  // Stump splits at 0.5 (lowest tied threshold) and misclassifies x = 2.
  FeatureMatrix x;
  for (double v : {0.0, 1.0, 2.0, 3.0}) x.push_row(RealVector{v});
  const std::vector<int> y{0, 1, 0, 1};
  EnsembleOptions opt;
  opt.kind = EnsembleKind::boosted_tree;
  opt.members = 1;
  opt.learning_rate = 1.0;
  opt.boost_max_splits = 1;
  std::vector<TreeCore> trees;
  RealVector alphas;
  std::vector<BoostRound> trace;
  boost_trees(x, y, opt, trees, alphas, &trace);
  REQUIRE(trace.size() == 1);
  CHECK(trees[0].nodes[0].threshold == doctest::Approx(0.5));
  CHECK(trace[0].error == doctest::Approx(0.25));
  CHECK(trace[0].alpha == doctest::Approx(std::log(3.0)));
  const double expected[4] = {1.0 / 6, 1.0 / 6, 0.5, 1.0 / 6};
  for (int i = 0; i < 4; ++i) CHECK(trace[0].weights_after[i] == doctest::Approx(expected[i]));
}

TEST_CASE("boosting stops at a useless learner and records the member count") {
  FeatureMatrix x;
  for (int i = 0; i < 8; ++i) x.push_row(RealVector{1.0});
  const std::vector<int> y{0, 1, 0, 1, 0, 1, 0, 1};
  EnsembleOptions opt;
  opt.kind = EnsembleKind::boosted_tree;
  opt.members = 10;
  std::vector<TreeCore> trees;
  RealVector alphas;
  boost_trees(x, y, opt, trees, alphas, nullptr);
  CHECK(trees.size() == 1);

  Rng rng(6);
  const auto d = blobs(rng, 200, 3, 1.0);
  opt.members = 15;
  const auto m = EnsembleModel::fit(d, opt);
  CHECK(m.member_count() >= 1);
  CHECK(m.member_count() <= 15);
  CHECK(m.tree_weights.size() == m.member_count());
}

TEST_CASE("single unbootstrapped bagged member equals the base tree") {
  Rng rng(7);
  const auto d = blobs(rng, 120, 4, 0.7);
  EnsembleOptions opt;
  opt.kind = EnsembleKind::bagged_tree;
  opt.members = 1;
  opt.bootstrap = false;
  const auto bag = EnsembleModel::fit(d, opt);
  const auto tree = TreeModel::fit(d, d.size() - 1);
  for (int q = 0; q < 200; ++q) {
    const RealVector query{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    CHECK(bag.predict(query) == tree.predict(query));
  }
}

TEST_CASE("subspace members each see exactly 32 features") {
  Rng rng(8);
  const auto d = blobs(rng, 80, 64, 0.3);
  for (EnsembleKind kind : {EnsembleKind::subspace_knn, EnsembleKind::subspace_discriminant}) {
    EnsembleOptions opt;
    opt.kind = kind;
    opt.members = 12;
    const auto m = EnsembleModel::fit(d, opt);
    REQUIRE(m.masks.size() == 12);
    for (const auto& mask : m.masks) {
      CHECK(mask.size() == 32);
      CHECK(std::is_sorted(mask.begin(), mask.end()));
      CHECK(std::adjacent_find(mask.begin(), mask.end()) == mask.end());
    }
    const auto again = EnsembleModel::fit(d, opt);
    CHECK(again.masks == m.masks);
  }
}

TEST_CASE("LDA direction follows the mean difference for spherical clusters") {
  Rng rng(9);
  FeatureMatrix x;
  std::vector<int> y;
  const RealVector delta{1.5, -0.7, 0.4};
  for (int i = 0; i < 20000; ++i) {
    const int label = i % 2;
    RealVector row(3);
    for (int j = 0; j < 3; ++j) row[j] = rng.normal() + (label ? delta[j] : 0.0);
    x.push_row(row);
    y.push_back(label);
  }
  const auto core = fit_lda(x, y, 1e-4);
  double dotp = 0, nw = 0, nd = 0;
  for (int j = 0; j < 3; ++j) {
    dotp += core.w[j] * delta[j];
    nw += core.w[j] * core.w[j];
    nd += delta[j] * delta[j];
  }
  const double angle = std::acos(dotp / std::sqrt(nw * nd)) * 180.0 / std::numbers::pi;
  CHECK(angle < 1.0);
}

TEST_CASE("identical class means give a vanishing LDA direction") {
  Rng rng(10);
  FeatureMatrix x;
  std::vector<int> y;
  for (int i = 0; i < 30; ++i) {
    RealVector row{rng.normal(), rng.normal(), 5.0};
    x.push_row(row);
    x.push_row(row);
    y.push_back(0);
    y.push_back(1);
  }
  const auto core = fit_lda(x, y, 1e-4);
  double norm = 0.0;
  for (double v : core.w) norm += v * v;
  CHECK(std::sqrt(norm) <= 1e-6);
}

TEST_CASE("KNN and LDA predictions are invariant to affine feature rescaling") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto train = blobs(rng, 60, 5, 0.8);
    const auto test = blobs(rng, 40, 5, 0.8);
    RealVector a(5), b(5);
    for (int j = 0; j < 5; ++j) {
      a[j] = (rng.below(2) ? 1.0 : -1.0) * std::exp(2.0 * rng.normal());
      b[j] = 100.0 * rng.normal();
    }
    auto rescale = [&](const LabeledData& d) {
      LabeledData out = d;
      for (std::size_t i = 0; i < d.size(); ++i)
        for (int j = 0; j < 5; ++j) out.x.at(i, j) = a[j] * d.x.at(i, j) + b[j];
      return out;
    };
    const auto train2 = rescale(train), test2 = rescale(test);
    const auto k1 = KnnModel::fit(train, 3), k2 = KnnModel::fit(train2, 3);
    const auto l1 = LdaModel::fit(train, 1e-4), l2 = LdaModel::fit(train2, 1e-4);
    CHECK(k1.predict_all(test.x) == k2.predict_all(test2.x));
    CHECK(l1.predict_all(test.x) == l2.predict_all(test2.x));
  }
}

TEST_CASE("every model kind round trips through its serialized form") {
  Rng rng(12);
  const auto d = blobs(rng, 150, 6, 0.8);
  std::vector<std::unique_ptr<Classifier>> models;
  models.push_back(std::make_unique<KnnModel>(KnnModel::fit(d, 5)));
  SvmOptions svm;
  svm.kernel = Kernel::poly3;
  models.push_back(std::make_unique<SvmModel>(SvmModel::fit(d, svm)));
  models.push_back(std::make_unique<TreeModel>(TreeModel::fit(d, 20)));
  models.push_back(std::make_unique<LdaModel>(LdaModel::fit(d, 1e-4)));
  for (EnsembleKind kind : {EnsembleKind::boosted_tree, EnsembleKind::bagged_tree,
                            EnsembleKind::subspace_knn, EnsembleKind::subspace_discriminant}) {
    EnsembleOptions opt;
    opt.kind = kind;
    opt.members = 5;
    opt.subspace_dim = 3;
    models.push_back(std::make_unique<EnsembleModel>(EnsembleModel::fit(d, opt)));
  }
  for (const auto& m : models) {
    const auto j = m->to_json();
    const auto back = load_model(nlohmann::json::parse(j.dump()));
    CHECK(back->kind() == m->kind());
    CHECK(back->predict_all(d.x) == m->predict_all(d.x));
    CHECK(back->to_json() == j);
  }
  CHECK_THROWS_AS(load_model(nlohmann::json{{"format", "other"}}), DataError);
}

TEST_CASE("fits are deterministic for fixed data and seed") {
  Rng rng(13);
  const auto d = blobs(rng, 100, 4, 0.5);
  EnsembleOptions opt;
  opt.kind = EnsembleKind::bagged_tree;
  opt.members = 7;
  opt.seed = 42;
  CHECK(EnsembleModel::fit(d, opt).to_json() == EnsembleModel::fit(d, opt).to_json());
  CHECK(SvmModel::fit(d, SvmOptions{}).to_json() == SvmModel::fit(d, SvmOptions{}).to_json());
}

TEST_CASE("empty training sets are rejected") {
  LabeledData empty;
  CHECK_THROWS_AS(TreeModel::fit(empty, 4), DataError);
  CHECK_THROWS_AS(EnsembleModel::fit(empty, EnsembleOptions{}), DataError);
  CHECK_THROWS_AS(parse_ensemble_kind("forest"), ConfigError);
}
