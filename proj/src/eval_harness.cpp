#include "rfhydro/eval_harness.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <map>
#include <set>

#include "rfhydro/parallel.hpp"
#include "rfhydro/rng.hpp"

namespace rfhydro {

using json = nlohmann::json;

void ConfusionMatrix::add(int truth, int predicted) {
  if (truth == 1) (predicted == 1 ? tp : fn) += 1;
  else (predicted == 1 ? fp : tn) += 1;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) {
  tn += o.tn;
  tp += o.tp;
  fn += o.fn;
  fp += o.fp;
  return *this;
}

double accuracy(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw DataError("accuracy of an empty confusion matrix");
  return static_cast<double>(cm.tn + cm.tp) / static_cast<double>(cm.total()) * 100.0;
}

json to_json(const ConfusionMatrix& cm) {
  return {{"tn", cm.tn}, {"tp", cm.tp}, {"fn", cm.fn}, {"fp", cm.fp}};
}

ConfusionMatrix confusion_from_json(const json& j) {
  return {j.at("tn").get<std::size_t>(), j.at("tp").get<std::size_t>(),
          j.at("fn").get<std::size_t>(), j.at("fp").get<std::size_t>()};
}

// --- Roster -----------------------------------------------------------------

const std::vector<std::string>& default_roster() {
  static const std::vector<std::string> roster{
      "knn_fine",         "knn_medium",       "knn_coarse",
      "svm_linear",       "svm_quadratic",    "svm_cubic",
      "tree_fine",        "tree_coarse",      "ens_boosted_tree",
      "ens_bagged_tree",  "ens_subspace_knn", "ens_subspace_discriminant",
      "nn_narrow",        "nn_medium",        "nn_wide",
      "nn_bilayer",       "nn_trilayer"};
  return roster;
}

namespace {

// Not in the default roster but accepted by name.
const std::array<std::string_view, 2> kExtraVariants{"tree_medium", "lda"};

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

}  // namespace

bool is_known_classifier(std::string_view name) {
  const auto& r = default_roster();
  return std::find(r.begin(), r.end(), name) != r.end() ||
         std::find(kExtraVariants.begin(), kExtraVariants.end(), name) != kExtraVariants.end();
}

std::string classifier_family(std::string_view name) {
  if (!is_known_classifier(name))
    throw ConfigError("unknown classifier '" + std::string(name) + "'");
  if (starts_with(name, "knn_")) return "knn";
  if (starts_with(name, "svm_")) return "svm";
  if (starts_with(name, "tree_")) return "tree";
  if (starts_with(name, "ens_")) return "ensemble";
  if (starts_with(name, "nn_")) return "nn";
  return "discriminant";
}

json to_json(const ClassifierSettings& s) {
  const auto& h = s.hyper;
  return {{"hyperparameters",
           {{"knn_fine", h.knn_fine},
            {"knn_medium", h.knn_medium},
            {"knn_coarse", h.knn_coarse},
            {"svm_c", h.svm_c},
            {"svm_tolerance", h.svm_tolerance},
            {"tree_fine_splits", h.tree_fine_splits},
            {"tree_medium_splits", h.tree_medium_splits},
            {"tree_coarse_splits", h.tree_coarse_splits},
            {"boost_members", h.boost_members},
            {"boost_learning_rate", h.boost_learning_rate},
            {"boost_max_splits", h.boost_max_splits},
            {"bag_members", h.bag_members},
            {"subspace_members", h.subspace_members},
            {"subspace_dim", h.subspace_dim},
            {"lda_shrinkage", h.lda_shrinkage}}},
          {"mlp",
           {{"epochs", s.mlp.epochs},
            {"learning_rate", s.mlp.learning_rate},
            {"batch_size", s.mlp.batch_size},
            {"l2", s.mlp.l2},
            {"momentum", s.mlp.momentum}}}};
}

std::unique_ptr<Classifier> fit_classifier(std::string_view name, const LabeledData& train,
                                           const ClassifierSettings& settings,
                                           std::uint64_t seed) {
  const auto& h = settings.hyper;
  const std::string family = classifier_family(name);
  const std::string_view variant = name.substr(name.find('_') + 1);

  if (family == "knn") {
    const std::size_t k = variant == "fine" ? h.knn_fine : variant == "medium" ? h.knn_medium
                                                                               : h.knn_coarse;
    return std::make_unique<KnnModel>(KnnModel::fit(train, k));
  }
  if (family == "svm") {
    SvmOptions o;
    o.kernel = variant == "linear" ? Kernel::linear : variant == "quadratic" ? Kernel::poly2
                                                                             : Kernel::poly3;
    o.c = h.svm_c;
    o.tolerance = h.svm_tolerance;
    return std::make_unique<SvmModel>(SvmModel::fit(train, o));
  }
  if (family == "tree") {
    const std::size_t splits = variant == "fine"     ? h.tree_fine_splits
                               : variant == "medium" ? h.tree_medium_splits
                                                     : h.tree_coarse_splits;
    return std::make_unique<TreeModel>(TreeModel::fit(train, splits));
  }
  if (family == "ensemble") {
    EnsembleOptions o;
    o.seed = seed;
    o.learning_rate = h.boost_learning_rate;
    o.boost_max_splits = h.boost_max_splits;
    o.subspace_dim = h.subspace_dim;
    o.subspace_knn_k = h.knn_fine;
    o.lda_shrinkage = h.lda_shrinkage;
    if (variant == "boosted_tree") {
      o.kind = EnsembleKind::boosted_tree;
      o.members = h.boost_members;
    } else if (variant == "bagged_tree") {
      o.kind = EnsembleKind::bagged_tree;
      o.members = h.bag_members;
    } else if (variant == "subspace_knn") {
      o.kind = EnsembleKind::subspace_knn;
      o.members = h.subspace_members;
    } else {
      o.kind = EnsembleKind::subspace_discriminant;
      o.members = h.subspace_members;
    }
    return std::make_unique<EnsembleModel>(EnsembleModel::fit(train, o));
  }
  if (family == "nn") {
    MlpSpec spec = mlp_variant(variant);
    spec.epochs = settings.mlp.epochs;
    spec.learning_rate = settings.mlp.learning_rate;
    spec.batch_size = settings.mlp.batch_size;
    spec.l2 = settings.mlp.l2;
    spec.momentum = settings.mlp.momentum;
    spec.seed = seed;
    return std::make_unique<MlpClassifier>(MlpClassifier::fit(train, spec));
  }
  return std::make_unique<LdaModel>(LdaModel::fit(train, h.lda_shrinkage));
}

// --- Cross-validation -------------------------------------------------------

std::string_view to_string(SplitUnit unit) {
  return unit == SplitUnit::session ? "session" : "snapshot";
}

SplitUnit parse_split_unit(std::string_view text) {
  if (text == "session") return SplitUnit::session;
  if (text == "snapshot") return SplitUnit::snapshot;
  throw ConfigError("unknown split unit '" + std::string(text) + "' (expected session or snapshot)");
}

void EvalReport::check_consistency() const {
  for (const auto& c : classifiers) {
    ConfusionMatrix snap, sess;
    for (const auto& f : c.folds) {
      snap += f.snapshot;
      sess += f.session;
    }
    if (!(snap == c.pooled_snapshot) || !(sess == c.pooled_session))
      throw DataError("report: pooled matrix of " + c.name + " is not the sum of its folds");
  }
}

void check_no_leakage(std::span<const std::size_t> train_sessions,
                      std::span<const std::size_t> test_sessions, std::size_t fold) {
  const std::set<std::size_t> train(train_sessions.begin(), train_sessions.end());
  for (std::size_t s : test_sessions)
    if (train.count(s))
      throw DataError("leakage: session " + std::to_string(s) + " is in both train and test of fold " +
                      std::to_string(fold));
}

std::vector<std::size_t> example_folds(const ExampleSet& examples, const FoldPlan& plan,
                                       const CvOptions& options) {
  const std::size_t n = examples.data.size();
  std::vector<std::size_t> folds(n);
  if (options.split == SplitUnit::session) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto it = plan.assignment.find(examples.session_id[i]);
      if (it == plan.assignment.end())
        throw DataError("fold plan does not cover session " + std::to_string(examples.session_id[i]));
      folds[i] = it->second;
    }
    return folds;
  }
  std::vector<SessionKey> keys(n);
  for (std::size_t i = 0; i < n; ++i) keys[i] = {i, label_from_index(examples.data.y[i])};
  const FoldPlan per_example = make_folds(keys, plan.k, options.seed);
  for (std::size_t i = 0; i < n; ++i) folds[i] = per_example.assignment.at(i);
  return folds;
}

namespace {

FoldResult evaluate_fold(const ExampleSet& examples, std::span<const std::size_t> folds,
                         std::size_t fold, const std::string& name,
                         const ClassifierSettings& settings, const CvOptions& options) {
  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t i = 0; i < folds.size(); ++i) (folds[i] == fold ? test_idx : train_idx).push_back(i);
  if (test_idx.empty()) throw DataError("fold " + std::to_string(fold) + " has no examples");

  std::vector<std::size_t> train_sessions, test_sessions;
  for (auto i : train_idx) train_sessions.push_back(examples.session_id[i]);
  for (auto i : test_idx) test_sessions.push_back(examples.session_id[i]);
  if (options.split == SplitUnit::session) check_no_leakage(train_sessions, test_sessions, fold);

  const LabeledData train = examples.data.subset(train_idx);
  const std::uint64_t seed =
      derive_seed(options.seed, seed_from_string(name.c_str()), fold);

  FoldResult result;
  result.train_examples = train_idx.size();
  result.test_examples = test_idx.size();

  const auto start = std::chrono::steady_clock::now();
  std::unique_ptr<Classifier> model;
  try {
    model = fit_classifier(name, train, settings, seed);
  } catch (const std::exception& e) {
    throw FitError(name, fold, e.what());
  }
  result.fit_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  // Per session: votes for dehydrated, votes cast, truth votes for dehydrated.
  std::map<std::size_t, std::array<std::size_t, 3>> votes;
  for (auto i : test_idx) {
    const int truth = examples.data.y[i];
    const int predicted = model->predict(examples.data.x.row(i));
    result.snapshot.add(truth, predicted);
    auto& v = votes[examples.session_id[i]];
    v[0] += predicted == 1;
    v[1] += 1;
    v[2] += truth == 1;
  }
  for (const auto& [session, v] : votes) {
    result.test_sessions.push_back(session);
    result.session.add(2 * v[2] >= v[1] ? 1 : 0, 2 * v[0] >= v[1] ? 1 : 0);
  }
  return result;
}

}  // namespace

EvalReport run_cv(const ExampleSet& examples, const FoldPlan& plan,
                  std::span<const std::string> classifiers, const ClassifierSettings& settings,
                  const CvOptions& options) {
  examples.data.check();
  if (examples.session_id.size() != examples.data.size())
    throw DataError("example set: session ids do not match examples");
  if (plan.k < 2) throw ConfigError("cross-validation needs k >= 2");
  for (const auto& name : classifiers) classifier_family(name);

  const std::vector<std::size_t> folds = example_folds(examples, plan, options);
  const std::size_t k = plan.k;
  std::vector<FoldResult> results(classifiers.size() * k);
  parallel_for(results.size(), options.workers, [&](std::size_t task) {
    results[task] =
        evaluate_fold(examples, folds, task % k, classifiers[task / k], settings, options);
  });

  EvalReport report;
  report.k = k;
  report.seed = options.seed;
  report.split = options.split;
  report.examples = examples.data.size();
  for (std::size_t c = 0; c < classifiers.size(); ++c) {
    ClassifierReport cr;
    cr.name = classifiers[c];
    cr.family = classifier_family(cr.name);
    for (std::size_t f = 0; f < k; ++f) {
      cr.folds.push_back(std::move(results[c * k + f]));
      cr.pooled_snapshot += cr.folds.back().snapshot;
      cr.pooled_session += cr.folds.back().session;
    }
    report.classifiers.push_back(std::move(cr));
  }
  return report;
}

void permute_labels(ExampleSet& examples, std::uint64_t seed) {
  auto& y = examples.data.y;
  Rng rng(seed);
  for (std::size_t i = y.size(); i > 1; --i) std::swap(y[i - 1], y[rng.below(i)]);
}

json report_to_json(const EvalReport& r) {
  json classifiers = json::array();
  for (const auto& c : r.classifiers) {
    json folds = json::array();
    for (const auto& f : c.folds)
      folds.push_back({{"snapshot", to_json(f.snapshot)},
                       {"session", to_json(f.session)},
                       {"train_examples", f.train_examples},
                       {"test_examples", f.test_examples},
                       {"test_sessions", f.test_sessions}});
    classifiers.push_back({{"name", c.name},
                           {"family", c.family},
                           {"snapshot_accuracy", c.snapshot_accuracy()},
                           {"session_accuracy", c.session_accuracy()},
                           {"pooled_snapshot", to_json(c.pooled_snapshot)},
                           {"pooled_session", to_json(c.pooled_session)},
                           {"folds", std::move(folds)}});
  }
  return {{"format", "rfhydro-eval-report"},
          {"version", 1},
          {"method", std::string(to_string(r.method))},
          {"dataset_checksum", r.dataset_checksum},
          {"k", r.k},
          {"seed", r.seed},
          {"split", std::string(to_string(r.split))},
          {"shuffled_labels", r.shuffled_labels},
          {"examples", r.examples},
          {"positive_class", "dehydrated"},
          {"classifiers", std::move(classifiers)},
          {"manifest", r.echo}};
}

EvalReport report_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != "rfhydro-eval-report")
      throw DataError("not an evaluation report");
    if (j.at("version").get<int>() != 1) throw DataError("unsupported report version");
    EvalReport r;
    r.method = parse_method(j.at("method").get<std::string>());
    r.dataset_checksum = j.at("dataset_checksum").get<std::string>();
    r.k = j.at("k").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.split = parse_split_unit(j.at("split").get<std::string>());
    r.shuffled_labels = j.at("shuffled_labels").get<bool>();
    r.examples = j.at("examples").get<std::size_t>();
    r.echo = j.at("manifest");
    for (const auto& c : j.at("classifiers")) {
      ClassifierReport cr;
      cr.name = c.at("name").get<std::string>();
      cr.family = c.at("family").get<std::string>();
      cr.pooled_snapshot = confusion_from_json(c.at("pooled_snapshot"));
      cr.pooled_session = confusion_from_json(c.at("pooled_session"));
      for (const auto& f : c.at("folds")) {
        FoldResult fr;
        fr.snapshot = confusion_from_json(f.at("snapshot"));
        fr.session = confusion_from_json(f.at("session"));
        fr.train_examples = f.at("train_examples").get<std::size_t>();
        fr.test_examples = f.at("test_examples").get<std::size_t>();
        fr.test_sessions = f.at("test_sessions").get<std::vector<std::size_t>>();
        cr.folds.push_back(std::move(fr));
      }
      r.classifiers.push_back(std::move(cr));
    }
    r.check_consistency();
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
}

namespace {

std::string fixed(double v, int precision) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, precision);
  return std::string(buf, res.ptr);
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string timing_log(const EvalReport& report) {
  std::string out;
  for (const auto& c : report.classifiers)
    for (std::size_t f = 0; f < c.folds.size(); ++f)
      out += std::string(to_string(report.method)) + " " + c.name + " fold " + std::to_string(f) +
             ": " + fixed(c.folds[f].fit_seconds, 3) + " s\n";
  return out;
}

// --- Comparison -------------------------------------------------------------

ComparisonTable compare(std::span<const EvalReport> reports) {
  if (reports.empty()) throw DataError("compare: no reports");
  ComparisonTable table;
  table.dataset_checksum = reports.front().dataset_checksum;
  for (const auto& r : reports) {
    if (r.dataset_checksum != table.dataset_checksum)
      throw DataError("compare: reports come from different datasets (" + r.dataset_checksum +
                      " vs " + table.dataset_checksum + ")");
    for (const auto& c : r.classifiers)
      table.rows.push_back({std::string(to_string(r.method)), c.name, c.family,
                            c.snapshot_accuracy(), c.session_accuracy(), false});
  }
  std::stable_sort(table.rows.begin(), table.rows.end(), [](const auto& a, const auto& b) {
    return a.snapshot_accuracy > b.snapshot_accuracy;
  });
  table.rows.front().best = true;
  return table;
}

std::string comparison_csv(const ComparisonTable& table) {
  std::string out = "rank,method,classifier,family,snapshot_accuracy,session_accuracy,best\n";
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    out += std::to_string(i + 1) + "," + r.method + "," + r.classifier + "," + r.family + "," +
           fixed(r.snapshot_accuracy, 4) + "," + fixed(r.session_accuracy, 4) + "," +
           (r.best ? "1" : "0") + "\n";
  }
  return out;
}

std::string comparison_svg(const ComparisonTable& table) {
  static const std::map<std::string, std::string> colors{
      {"knn", "#4e79a7"}, {"svm", "#f28e2b"},      {"tree", "#59a14f"},
      {"ensemble", "#b07aa1"}, {"nn", "#e15759"}, {"discriminant", "#9c755f"}};
  constexpr int label_w = 260, bar_w = 480, row_h = 22, top = 40;
  const int height = top + row_h * static_cast<int>(table.rows.size()) + 30;
  const int width = label_w + bar_w + 90;

  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
                    "\" height=\"" + std::to_string(height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out += "<text x=\"10\" y=\"22\" font-size=\"14\">Pooled snapshot accuracy (%)</text>\n";
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    const int y = top + row_h * static_cast<int>(i);
    const auto it = colors.find(r.family);
    const std::string fill = it == colors.end() ? "#888888" : it->second;
    const std::string len = fixed(r.snapshot_accuracy / 100.0 * bar_w, 1);
    out += "<text x=\"" + std::to_string(label_w - 6) + "\" y=\"" + std::to_string(y + 15) +
           "\" text-anchor=\"end\">" + xml_escape(r.method + " " + r.classifier) + "</text>\n";
    out += "<rect x=\"" + std::to_string(label_w) + "\" y=\"" + std::to_string(y + 3) +
           "\" width=\"" + len + "\" height=\"" + std::to_string(row_h - 6) + "\" fill=\"" + fill +
           "\"" + (r.best ? " stroke=\"#000000\" stroke-width=\"2\"" : "") + "/>\n";
    out += "<text x=\"" + fixed(label_w + r.snapshot_accuracy / 100.0 * bar_w + 6, 1) + "\" y=\"" +
           std::to_string(y + 15) + "\">" + fixed(r.snapshot_accuracy, 2) +
           (r.best ? " (best)" : "") + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace rfhydro
