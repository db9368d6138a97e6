// Versioned JSON serialization for every classifier kind.

#include <json.hpp>

#include "rfhydro/ml_classic.hpp"
#include "rfhydro/ml_neural.hpp"

namespace rfhydro {

namespace {

constexpr int kModelVersion = 1;
using json = nlohmann::json;

json header(const std::string& kind) {
  return {{"format", "rfhydro-model"}, {"version", kModelVersion}, {"kind", kind}};
}

json matrix_to_json(const FeatureMatrix& m) {
  return {{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

FeatureMatrix matrix_from_json(const json& j) {
  FeatureMatrix m;
  m.rows = j.at("rows").get<std::size_t>();
  m.cols = j.at("cols").get<std::size_t>();
  m.data = j.at("data").get<RealVector>();
  if (m.data.size() != m.rows * m.cols) throw DataError("model: matrix payload size mismatch");
  return m;
}

json tree_to_json(const TreeCore& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes)
    nodes.push_back({n.feature, n.threshold, n.left, n.right, n.label});
  return nodes;
}

TreeCore tree_from_json(const json& j) {
  TreeCore t;
  for (const auto& n : j) {
    TreeNode node;
    node.feature = n.at(0).get<int>();
    node.threshold = n.at(1).get<double>();
    node.left = n.at(2).get<int>();
    node.right = n.at(3).get<int>();
    node.label = n.at(4).get<int>();
    t.nodes.push_back(node);
  }
  const auto count = static_cast<int>(t.nodes.size());
  for (const auto& n : t.nodes)
    if (n.feature >= 0 && (n.left <= 0 || n.right <= 0 || n.left >= count || n.right >= count))
      throw DataError("model: tree node references out of range");
  if (t.nodes.empty()) throw DataError("model: empty tree");
  return t;
}

json knn_core_to_json(const KnnCore& k) {
  return {{"k", k.k}, {"points", matrix_to_json(k.points)}, {"labels", k.labels}};
}

KnnCore knn_core_from_json(const json& j) {
  KnnCore k;
  k.k = j.at("k").get<std::size_t>();
  k.points = matrix_from_json(j.at("points"));
  k.labels = j.at("labels").get<std::vector<int>>();
  if (k.labels.size() != k.points.rows) throw DataError("model: knn label count mismatch");
  return k;
}

json lda_core_to_json(const LdaCore& l) { return {{"w", l.w}, {"b", l.b}}; }

LdaCore lda_core_from_json(const json& j) {
  return {j.at("w").get<RealVector>(), j.at("b").get<double>()};
}

void check_header(const json& j, const char* kind) {
  if (j.at("format").get<std::string>() != "rfhydro-model") throw DataError("not a model file");
  if (j.at("version").get<int>() != kModelVersion)
    throw DataError("unsupported model version " + std::to_string(j.at("version").get<int>()));
  if (j.at("kind").get<std::string>() != kind)
    throw DataError("model kind mismatch: expected " + std::string(kind));
}

}  // namespace

json KnnModel::to_json() const {
  json j = header(kind());
  j["standardizer"] = rfhydro::to_json(standardizer);
  j["core"] = knn_core_to_json(core);
  return j;
}

KnnModel KnnModel::from_json(const json& j) {
  check_header(j, "knn");
  KnnModel m;
  m.standardizer = standardizer_from_json(j.at("standardizer"));
  m.core = knn_core_from_json(j.at("core"));
  return m;
}

json SvmModel::to_json() const {
  json j = header(kind());
  j["standardizer"] = rfhydro::to_json(standardizer);
  j["kernel"] = std::string(to_string(core.kernel));
  j["c"] = c;
  j["bias"] = core.bias;
  j["coef"] = core.coef;
  j["support"] = matrix_to_json(core.support);
  j["iterations"] = iterations;
  j["kkt_gap"] = kkt_gap;
  return j;
}

SvmModel SvmModel::from_json(const json& j) {
  check_header(j, "svm");
  SvmModel m;
  m.standardizer = standardizer_from_json(j.at("standardizer"));
  m.core.kernel = parse_kernel(j.at("kernel").get<std::string>());
  m.core.bias = j.at("bias").get<double>();
  m.core.coef = j.at("coef").get<RealVector>();
  m.core.support = matrix_from_json(j.at("support"));
  if (m.core.coef.size() != m.core.support.rows) throw DataError("model: svm coefficient mismatch");
  m.c = j.at("c").get<double>();
  m.iterations = j.at("iterations").get<std::size_t>();
  m.kkt_gap = j.at("kkt_gap").get<double>();
  return m;
}

json TreeModel::to_json() const {
  json j = header(kind());
  j["standardizer"] = rfhydro::to_json(standardizer);
  j["max_splits"] = max_splits;
  j["nodes"] = tree_to_json(core);
  return j;
}

TreeModel TreeModel::from_json(const json& j) {
  check_header(j, "tree");
  TreeModel m;
  m.standardizer = standardizer_from_json(j.at("standardizer"));
  m.max_splits = j.at("max_splits").get<std::size_t>();
  m.core = tree_from_json(j.at("nodes"));
  return m;
}

json LdaModel::to_json() const {
  json j = header(kind());
  j["standardizer"] = rfhydro::to_json(standardizer);
  j["core"] = lda_core_to_json(core);
  return j;
}

LdaModel LdaModel::from_json(const json& j) {
  check_header(j, "lda");
  LdaModel m;
  m.standardizer = standardizer_from_json(j.at("standardizer"));
  m.core = lda_core_from_json(j.at("core"));
  return m;
}

json EnsembleModel::to_json() const {
  json j = header(kind());
  j["standardizer"] = rfhydro::to_json(standardizer);
  j["ensemble"] = std::string(to_string(ensemble_kind));
  json members = json::array();
  for (std::size_t m = 0; m < member_count(); ++m) {
    json member;
    switch (ensemble_kind) {
      case EnsembleKind::boosted_tree:
        member = {{"alpha", tree_weights[m]}, {"tree", tree_to_json(trees[m])}};
        break;
      case EnsembleKind::bagged_tree: member = {{"tree", tree_to_json(trees[m])}}; break;
      case EnsembleKind::subspace_knn:
        member = {{"mask", masks[m]}, {"knn", knn_core_to_json(knns[m])}};
        break;
      case EnsembleKind::subspace_discriminant:
        member = {{"mask", masks[m]}, {"lda", lda_core_to_json(ldas[m])}};
        break;
    }
    members.push_back(std::move(member));
  }
  j["members"] = std::move(members);
  return j;
}

EnsembleModel EnsembleModel::from_json(const json& j) {
  check_header(j, "ensemble");
  EnsembleModel m;
  m.standardizer = standardizer_from_json(j.at("standardizer"));
  m.ensemble_kind = parse_ensemble_kind(j.at("ensemble").get<std::string>());
  for (const auto& member : j.at("members")) {
    switch (m.ensemble_kind) {
      case EnsembleKind::boosted_tree:
        m.tree_weights.push_back(member.at("alpha").get<double>());
        m.trees.push_back(tree_from_json(member.at("tree")));
        break;
      case EnsembleKind::bagged_tree: m.trees.push_back(tree_from_json(member.at("tree"))); break;
      case EnsembleKind::subspace_knn:
        m.masks.push_back(member.at("mask").get<std::vector<std::size_t>>());
        m.knns.push_back(knn_core_from_json(member.at("knn")));
        break;
      case EnsembleKind::subspace_discriminant:
        m.masks.push_back(member.at("mask").get<std::vector<std::size_t>>());
        m.ldas.push_back(lda_core_from_json(member.at("lda")));
        break;
    }
  }
  if (m.member_count() == 0) throw DataError("model: ensemble has no members");
  return m;
}

json MlpClassifier::to_json() const {
  json j = header(kind());
  j["standardizer"] = rfhydro::to_json(model_.standardizer);
  json layers = json::array();
  for (std::size_t l = 0; l < model_.weights.size(); ++l) {
    const auto& w = model_.weights[l];
    RealVector flat;
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) flat.push_back(w(r, c));
    const auto& b = model_.biases[l];
    layers.push_back({{"out", w.rows()},
                      {"in", w.cols()},
                      {"weights", flat},
                      {"bias", RealVector(b.data(), b.data() + b.size())}});
  }
  j["layers"] = std::move(layers);
  return j;
}

MlpClassifier MlpClassifier::from_json(const json& j) {
  check_header(j, "mlp");
  MlpModel m;
  m.standardizer = standardizer_from_json(j.at("standardizer"));
  for (const auto& layer : j.at("layers")) {
    const auto out = layer.at("out").get<Eigen::Index>();
    const auto in = layer.at("in").get<Eigen::Index>();
    const auto flat = layer.at("weights").get<RealVector>();
    const auto bias = layer.at("bias").get<RealVector>();
    if (static_cast<Eigen::Index>(flat.size()) != out * in ||
        static_cast<Eigen::Index>(bias.size()) != out)
      throw DataError("model: mlp layer payload size mismatch");
    Eigen::MatrixXd w(out, in);
    for (Eigen::Index r = 0; r < out; ++r)
      for (Eigen::Index c = 0; c < in; ++c) w(r, c) = flat[static_cast<std::size_t>(r * in + c)];
    if (!m.weights.empty() && m.weights.back().rows() != in)
      throw DataError("model: mlp layer shapes do not chain");
    m.weights.push_back(std::move(w));
    m.biases.push_back(Eigen::Map<const Eigen::VectorXd>(bias.data(), out));
  }
  if (m.weights.empty() || m.weights.back().rows() != 2)
    throw DataError("model: mlp must end in a 2-way output layer");
  return MlpClassifier(std::move(m));
}

std::unique_ptr<Classifier> load_model(const json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "knn") return std::make_unique<KnnModel>(KnnModel::from_json(j));
    if (kind == "svm") return std::make_unique<SvmModel>(SvmModel::from_json(j));
    if (kind == "tree") return std::make_unique<TreeModel>(TreeModel::from_json(j));
    if (kind == "lda") return std::make_unique<LdaModel>(LdaModel::from_json(j));
    if (kind == "ensemble") return std::make_unique<EnsembleModel>(EnsembleModel::from_json(j));
    if (kind == "mlp") return std::make_unique<MlpClassifier>(MlpClassifier::from_json(j));
    throw DataError("unknown model kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model: ") + e.what());
  }
}

}  // namespace rfhydro
