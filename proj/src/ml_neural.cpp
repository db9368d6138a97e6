#include "rfhydro/ml_neural.hpp"

#include <cmath>
#include <numeric>

#include "rfhydro/rng.hpp"

namespace rfhydro {

namespace {

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd p(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double m = z.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (z.row(i).array() - m).exp().matrix();
    p.row(i) = e / e.sum();
  }
  return p;
}

struct ForwardPass {
  std::vector<Eigen::MatrixXd> pre;   // pre-activations per layer
  std::vector<Eigen::MatrixXd> post;  // post[0] = input, post[l+1] = activation of layer l
  Eigen::MatrixXd probs;
};

ForwardPass run_forward(const MlpModel& m, const Eigen::MatrixXd& inputs) {
  ForwardPass f;
  const std::size_t layers = m.weights.size();
  f.post.reserve(layers + 1);
  f.pre.reserve(layers);
  f.post.push_back(inputs);
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = f.post.back() * m.weights[l].transpose();
    z.rowwise() += m.biases[l].transpose();
    f.pre.push_back(z);
    if (l + 1 < layers) {
      f.post.push_back(z.cwiseMax(0.0));
    } else {
      f.probs = softmax_rows(z);
    }
  }
  return f;
}

double cross_entropy(const Eigen::MatrixXd& probs, std::span<const int> labels) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i)
    loss -= std::log(std::max(probs(i, labels[static_cast<std::size_t>(i)] ? 1 : 0), 1e-300));
  return loss / static_cast<double>(probs.rows());
}

double weight_penalty(const MlpModel& m, double l2) {
  double s = 0.0;
  for (const auto& w : m.weights) s += w.squaredNorm();
  return l2 * s;
}

double full_loss(const MlpModel& m, const Eigen::MatrixXd& x, std::span<const int> y, double l2) {
  return cross_entropy(run_forward(m, x).probs, y) + weight_penalty(m, l2);
}

}  // namespace

void MlpSpec::validate() const {
  if (hidden_sizes.empty()) throw ConfigError("mlp: at least one hidden layer is required");
  for (auto s : hidden_sizes)
    if (s == 0) throw ConfigError("mlp: hidden layer sizes must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("mlp: learning_rate must be > 0");
  if (batch_size == 0) throw ConfigError("mlp: batch_size must be >= 1");
  if (!(l2 >= 0.0)) throw ConfigError("mlp: l2 must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("mlp: momentum must be in [0, 1)");
}

MlpSpec mlp_variant(std::string_view name) {
  MlpSpec spec;
  if (name == "narrow") spec.hidden_sizes = {10};
  else if (name == "medium") spec.hidden_sizes = {25};
  else if (name == "wide") spec.hidden_sizes = {100};
  else if (name == "bilayer") spec.hidden_sizes = {10, 10};
  else if (name == "trilayer") spec.hidden_sizes = {10, 10, 10};
  else throw ConfigError("unknown network variant '" + std::string(name) + "'");
  return spec;
}

std::size_t MlpModel::input_dim() const {
  return weights.empty() ? 0 : static_cast<std::size_t>(weights.front().cols());
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l)
    n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  return n;
}

Eigen::MatrixXd MlpModel::probabilities(const Eigen::MatrixXd& inputs) const {
  if (static_cast<std::size_t>(inputs.cols()) != input_dim())
    throw DimensionError("mlp: expected " + std::to_string(input_dim()) + " inputs, got " +
                         std::to_string(inputs.cols()));
  return run_forward(*this, inputs).probs;
}

std::pair<double, double> MlpModel::forward(std::span<const double> x) const {
  if (x.size() != input_dim())
    throw DimensionError("mlp: expected " + std::to_string(input_dim()) + " inputs, got " +
                         std::to_string(x.size()));
  Eigen::MatrixXd row(1, static_cast<Eigen::Index>(x.size()));
  if (standardizer.mean.empty()) {
    for (std::size_t j = 0; j < x.size(); ++j) row(0, static_cast<Eigen::Index>(j)) = x[j];
  } else {
    const RealVector s = standardizer.apply(x);
    for (std::size_t j = 0; j < s.size(); ++j) row(0, static_cast<Eigen::Index>(j)) = s[j];
  }
  const Eigen::MatrixXd p = run_forward(*this, row).probs;
  return {p(0, 0), p(0, 1)};
}

MlpModel mlp_init(std::size_t input_dim, std::span<const std::size_t> hidden_sizes,
                  std::uint64_t seed) {
  MlpModel m;
  Rng rng(derive_seed(seed, 0x696e6974ULL));
  std::size_t fan_in = input_dim;
  std::vector<std::size_t> widths(hidden_sizes.begin(), hidden_sizes.end());
  widths.push_back(2);
  for (auto width : widths) {
    Eigen::MatrixXd w(static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(fan_in));
    const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = sd * rng.normal();
    m.weights.push_back(std::move(w));
    m.biases.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(width)));
    fan_in = width;
  }
  return m;
}

MlpGradients mlp_loss_gradients(const MlpModel& model, const Eigen::MatrixXd& inputs,
                                std::span<const int> labels, double l2) {
  if (inputs.rows() == 0) throw DataError("mlp: empty batch");
  if (static_cast<std::size_t>(inputs.rows()) != labels.size())
    throw DimensionError("mlp: label count mismatch");
  if (static_cast<std::size_t>(inputs.cols()) != model.input_dim())
    throw DimensionError("mlp: input dimension mismatch");

  const ForwardPass f = run_forward(model, inputs);
  const std::size_t layers = model.weights.size();
  const double n = static_cast<double>(inputs.rows());

  MlpGradients g;
  g.loss = cross_entropy(f.probs, labels) + weight_penalty(model, l2);
  g.weights.resize(layers);
  g.biases.resize(layers);

  Eigen::MatrixXd delta = f.probs;
  for (Eigen::Index i = 0; i < delta.rows(); ++i) delta(i, labels[static_cast<std::size_t>(i)] ? 1 : 0) -= 1.0;
  delta /= n;
  for (std::size_t l = layers; l-- > 0;) {
    g.weights[l] = delta.transpose() * f.post[l] + 2.0 * l2 * model.weights[l];
    g.biases[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      Eigen::MatrixXd back = delta * model.weights[l];
      delta = back.cwiseProduct((f.pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return g;
}

Eigen::MatrixXd to_eigen(const FeatureMatrix& x) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(x.rows), static_cast<Eigen::Index>(x.cols));
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < x.cols; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x.at(i, j);
  return m;
}

MlpFitResult mlp_fit(const LabeledData& data, const MlpSpec& spec) {
  spec.validate();
  data.check();
  std::size_t counts[2] = {0, 0};
  for (int v : data.y) counts[v != 0]++;
  if (counts[0] < 2 || counts[1] < 2) throw DataError("mlp_fit: need at least 2 examples per class");

  MlpFitResult result;
  MlpModel& m = result.model;
  const Standardizer standardizer = Standardizer::fit(data.x);
  const Eigen::MatrixXd x = to_eigen(standardizer.transform(data.x));
  m = mlp_init(data.x.cols, spec.hidden_sizes, spec.seed);

  const std::size_t layers = m.weights.size();
  std::vector<Eigen::MatrixXd> vw;
  std::vector<Eigen::VectorXd> vb;
  for (std::size_t l = 0; l < layers; ++l) {
    vw.push_back(Eigen::MatrixXd::Zero(m.weights[l].rows(), m.weights[l].cols()));
    vb.push_back(Eigen::VectorXd::Zero(m.biases[l].size()));
  }

  const std::size_t n = data.size();
  result.loss_trace.push_back(full_loss(m, x, data.y, spec.l2));
  std::vector<std::size_t> order(n);
  Eigen::MatrixXd batch;
  std::vector<int> batch_labels;
  for (std::size_t epoch = 1; epoch <= spec.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(spec.seed, 0x65706f6368ULL, epoch));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    for (std::size_t start = 0; start < n; start += spec.batch_size) {
      const std::size_t len = std::min(spec.batch_size, n - start);
      batch.resize(static_cast<Eigen::Index>(len), x.cols());
      batch_labels.resize(len);
      for (std::size_t b = 0; b < len; ++b) {
        batch.row(static_cast<Eigen::Index>(b)) = x.row(static_cast<Eigen::Index>(order[start + b]));
        batch_labels[b] = data.y[order[start + b]];
      }
      const MlpGradients g = mlp_loss_gradients(m, batch, batch_labels, spec.l2);
      for (std::size_t l = 0; l < layers; ++l) {
        vw[l] = spec.momentum * vw[l] - spec.learning_rate * g.weights[l];
        vb[l] = spec.momentum * vb[l] - spec.learning_rate * g.biases[l];
        m.weights[l] += vw[l];
        m.biases[l] += vb[l];
      }
    }
    const double loss = full_loss(m, x, data.y, spec.l2);
    if (!std::isfinite(loss))
      throw DataError("mlp_fit: loss diverged at epoch " + std::to_string(epoch) +
                      "; retry with a lower learning rate");
    result.loss_trace.push_back(loss);
  }
  m.standardizer = standardizer;
  return result;
}

double mlp_gradcheck(const MlpModel& model, const Eigen::MatrixXd& inputs,
                     std::span<const int> labels, double l2) {
  constexpr double step = 1e-5;
  MlpModel probe = model;
  probe.standardizer = {};
  const MlpGradients g = mlp_loss_gradients(probe, inputs, labels, l2);
  double worst = 0.0;
  auto check = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + step;
    const double up = full_loss(probe, inputs, labels, l2);
    param = saved - step;
    const double down = full_loss(probe, inputs, labels, l2);
    param = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(analytic - numeric) / denom);
  };
  for (std::size_t l = 0; l < probe.weights.size(); ++l) {
    for (Eigen::Index r = 0; r < probe.weights[l].rows(); ++r)
      for (Eigen::Index c = 0; c < probe.weights[l].cols(); ++c)
        check(probe.weights[l](r, c), g.weights[l](r, c));
    for (Eigen::Index r = 0; r < probe.biases[l].size(); ++r) check(probe.biases[l](r), g.biases[l](r));
  }
  return worst;
}

MlpClassifier MlpClassifier::fit(const LabeledData& data, const MlpSpec& spec) {
  return MlpClassifier(mlp_fit(data, spec).model);
}

int MlpClassifier::predict(std::span<const double> x) const {
  const auto [p0, p1] = model_.forward(x);
  return p1 > p0 ? 1 : 0;
}

}  // namespace rfhydro
