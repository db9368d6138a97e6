#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rfhydro/ml_neural.hpp"
#include "rfhydro/rng.hpp"

using namespace rfhydro;

namespace {

Eigen::MatrixXd random_inputs(Rng& rng, std::size_t n, std::size_t d) {
  Eigen::MatrixXd x(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) x(i, j) = rng.normal();
  return x;
}

std::vector<int> random_labels(Rng& rng, std::size_t n) {
  std::vector<int> y(n);
  for (auto& v : y) v = static_cast<int>(rng.below(2));
  return y;
}

MlpModel zeroed(MlpModel m) {
  for (auto& w : m.weights) w.setZero();
  for (auto& b : m.biases) b.setZero();
  return m;
}

LabeledData separable_toy(Rng& rng, std::size_t n) {
  LabeledData d;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    const double u = rng.uniform(-2.0, 2.0);
    const double v = rng.uniform(0.3, 2.0) * (label ? 1.0 : -1.0);
    d.x.push_row(RealVector{u + v, v - 0.5 * u});
    d.y.push_back(label);
  }
  return d;
}

}  // namespace

TEST_CASE("named variants have the declared widths") {
  CHECK(mlp_variant("narrow").hidden_sizes == std::vector<std::size_t>{10});
  CHECK(mlp_variant("medium").hidden_sizes == std::vector<std::size_t>{25});
  CHECK(mlp_variant("wide").hidden_sizes == std::vector<std::size_t>{100});
  CHECK(mlp_variant("bilayer").hidden_sizes == std::vector<std::size_t>{10, 10});
  CHECK(mlp_variant("trilayer").hidden_sizes == std::vector<std::size_t>{10, 10, 10});
  CHECK_THROWS_AS(mlp_variant("huge"), ConfigError);
  const auto spec = mlp_variant("narrow");
  CHECK(spec.epochs == 300);
  CHECK(spec.learning_rate == 0.01);
  CHECK(spec.batch_size == 64);
  CHECK(spec.l2 == 1e-4);
  CHECK(spec.momentum == 0.9);
}

TEST_CASE("layer shapes chain from 64 inputs to 2 outputs") {
  const std::vector<std::size_t> hidden{10, 7, 3};
  const auto m = mlp_init(64, hidden, 1);
  REQUIRE(m.weights.size() == 4);
  std::size_t in = 64;
  for (std::size_t l = 0; l < 4; ++l) {
    CHECK(static_cast<std::size_t>(m.weights[l].cols()) == in);
    CHECK(m.weights[l].rows() == m.biases[l].size());
    in = static_cast<std::size_t>(m.weights[l].rows());
  }
  CHECK(in == 2);
  CHECK(m.parameter_count() == 64 * 10 + 10 + 10 * 7 + 7 + 7 * 3 + 3 + 3 * 2 + 2);
  CHECK(m.input_dim() == 64);
}

TEST_CASE("forward pass outputs valid probabilities") {
  Rng rng(1);
  const std::vector<std::size_t> hidden{10, 10};
  const auto m = mlp_init(64, hidden, 3);
  for (int i = 0; i < 100; ++i) {
    RealVector x(64);
    for (auto& v : x) v = 3.0 * rng.normal();
    const auto [p0, p1] = m.forward(x);
    CHECK(std::abs(p0 + p1 - 1.0) < 1e-12);
    CHECK(p0 >= 0.0);
    CHECK(p1 >= 0.0);
  }
  const auto [z0, z1] = zeroed(m).forward(RealVector(64, 1.0));
  CHECK(z0 == doctest::Approx(0.5));
  CHECK(z1 == doctest::Approx(0.5));
  CHECK_THROWS_AS(m.forward(RealVector(63)), DimensionError);
}

TEST_CASE("a shared shift of the output logits leaves the probabilities unchanged") {
  Rng rng(2);
  const std::vector<std::size_t> hidden{8};
  auto m = mlp_init(5, hidden, 4);
  const RealVector x{0.3, -1.0, 2.0, 0.1, 0.0};
  const auto before = m.forward(x);
  m.biases.back().array() += 7.5;
  const auto after = m.forward(x);
  CHECK(after.first == doctest::Approx(before.first).epsilon(1e-12));
  CHECK(after.second == doctest::Approx(before.second).epsilon(1e-12));
}

TEST_CASE("backprop agrees with central differences on random small models") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t in = 2 + rng.below(6);
    std::vector<std::size_t> hidden(1 + rng.below(3));
    for (auto& h : hidden) h = 2 + rng.below(6);
    auto m = mlp_init(in, hidden, 100 + trial);
    for (auto& b : m.biases)
      for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = 0.5 * rng.normal();
    const std::size_t n = 3 + rng.below(8);
    const auto x = random_inputs(rng, n, in);
    const auto y = random_labels(rng, n);
    CHECK(mlp_gradcheck(m, x, y, trial % 2 ? 1e-4 : 0.0) < 1e-4);
  }
}

TEST_CASE("zero-weight output bias gradient is the mean of p minus y") {
  Rng rng(4);
  const std::vector<std::size_t> hidden{4};
  const auto m = zeroed(mlp_init(3, hidden, 1));
  const auto x = random_inputs(rng, 6, 3);
  const std::vector<int> y{0, 1, 0, 1, 1, 0};
  const auto g = mlp_loss_gradients(m, x, y, 0.0);
  // p = (0.5, 0.5) for every row; the class mean of (p - onehot) is 0 on a balanced batch.
  const auto& gb = g.biases.back();
  double expect[2] = {0.0, 0.0};
  for (int label : y) {
    expect[0] += 0.5 - (label == 0);
    expect[1] += 0.5 - (label == 1);
  }
  CHECK(gb(0) == doctest::Approx(expect[0] / 6).epsilon(1e-12));
  CHECK(gb(1) == doctest::Approx(expect[1] / 6).epsilon(1e-12));
  CHECK(g.loss == doctest::Approx(std::log(2.0)));

  const std::vector<int> skew{1, 1, 1, 1, 0, 1};
  const auto g2 = mlp_loss_gradients(m, x, skew, 0.0);
  CHECK(g2.biases.back()(0) == doctest::Approx((6 * 0.5 - 1) / 6.0));
  CHECK(g2.biases.back()(1) == doctest::Approx((6 * 0.5 - 5) / 6.0));
}

TEST_CASE("a duplicated example has the single-example gradient") {
  Rng rng(5);
  const std::vector<std::size_t> hidden{6, 5};
  const auto m = mlp_init(4, hidden, 9);
  const auto one = random_inputs(rng, 1, 4);
  Eigen::MatrixXd two(2, 4);
  two << one, one;
  const std::vector<int> y1{1};
  const std::vector<int> y2{1, 1};
  const auto a = mlp_loss_gradients(m, one, y1, 1e-3);
  const auto b = mlp_loss_gradients(m, two, y2, 1e-3);
  CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-12));
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    CHECK((a.weights[l] - b.weights[l]).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((a.biases[l] - b.biases[l]).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("narrow network fits a separable toy set") {
  Rng rng(6);
  const auto d = separable_toy(rng, 200);
  auto spec = mlp_variant("narrow");
  spec.epochs = 200;
  const auto fit = mlp_fit(d, spec);
  MlpClassifier clf(fit.model);
  const auto pred = clf.predict_all(d.x);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < d.size(); ++i) hits += pred[i] == d.y[i];
  CHECK(hits == d.size());
  REQUIRE(fit.loss_trace.size() == 201);
  CHECK(fit.loss_trace[1] < fit.loss_trace[0]);
}

TEST_CASE("loss drops after the first epoch on noisy data") {
  Rng rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    LabeledData d;
    for (int i = 0; i < 150; ++i) {
      const int label = i % 2;
      RealVector row(6);
      for (auto& v : row) v = rng.normal() + 0.3 * label;
      d.x.push_row(row);
      d.y.push_back(label);
    }
    auto spec = mlp_variant("bilayer");
    spec.epochs = 1;
    spec.seed = trial;
    const auto fit = mlp_fit(d, spec);
    CHECK(fit.loss_trace[1] < fit.loss_trace[0]);
  }
}

TEST_CASE("training is deterministic per seed") {
  Rng rng(8);
  const auto d = separable_toy(rng, 80);
  auto spec = mlp_variant("medium");
  spec.epochs = 20;
  const auto a = mlp_fit(d, spec).model;
  const auto b = mlp_fit(d, spec).model;
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    CHECK(a.weights[l] == b.weights[l]);
    CHECK(a.biases[l] == b.biases[l]);
  }
  spec.seed = 2;
  CHECK(mlp_fit(d, spec).model.weights[0] != a.weights[0]);
}

TEST_CASE("full-batch training does not depend on example order") {
  Rng rng(9);
  const auto d = separable_toy(rng, 60);
  std::vector<std::size_t> perm(60);
  for (std::size_t i = 0; i < 60; ++i) perm[i] = (i * 7) % 60;
  const auto shuffled = d.subset(perm);
  auto spec = mlp_variant("narrow");
  spec.epochs = 30;
  spec.batch_size = 60;
  const auto a = mlp_fit(d, spec).model;
  const auto b = mlp_fit(shuffled, spec).model;
  for (std::size_t l = 0; l < a.weights.size(); ++l)
    CHECK((a.weights[l] - b.weights[l]).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("divergence is reported with its epoch") {
  Rng rng(10);
  const auto d = separable_toy(rng, 40);
  auto spec = mlp_variant("wide");
  spec.learning_rate = 1e6;
  spec.epochs = 50;
  try {
    mlp_fit(d, spec);
    FAIL("expected divergence");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
}

TEST_CASE("invalid specs and data are rejected") {
  MlpSpec s;
  s.hidden_sizes = {};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.hidden_sizes = {0};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  MlpSpec lr;
  lr.learning_rate = 0.0;
  CHECK_THROWS_AS(lr.validate(), ConfigError);
  LabeledData d;
  d.x.push_row(RealVector{0.0});
  d.x.push_row(RealVector{1.0});
  d.x.push_row(RealVector{2.0});
  d.y = {0, 0, 1};
  CHECK_THROWS_AS(mlp_fit(d, MlpSpec{}), DataError);
}

TEST_CASE("classifier round trips through its serialized form") {
  Rng rng(11);
  const auto d = separable_toy(rng, 100);
  auto spec = mlp_variant("trilayer");
  spec.epochs = 5;
  const auto clf = MlpClassifier::fit(d, spec);
  const auto j = clf.to_json();
  const auto back = load_model(nlohmann::json::parse(j.dump()));
  CHECK(back->kind() == "mlp");
  CHECK(back->predict_all(d.x) == clf.predict_all(d.x));
  CHECK(back->to_json() == j);
}
