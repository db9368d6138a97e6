#include "rfhydro/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include "rfhydro/parallel.hpp"
#include "rfhydro/rng.hpp"

namespace rfhydro {

using json = nlohmann::json;

namespace {

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fixed(double v, int precision) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, precision);
  return std::string(buf, res.ptr);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw DataError("cannot write " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string sci(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific, 2);
  return std::string(buf, res.ptr);
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

// --- simulate ---------------------------------------------------------------

std::vector<DatasetManifest> cmd_simulate(const RunConfig& config, std::ostream& out) {
  std::vector<DatasetManifest> manifests;
  for (Method m : config.methods) {
    const DatasetManifest manifest =
        generate_dataset(generate_request(config, m), config.data_root());
    out << to_string(m) << ": " << shortest(manifest.total_duration()) << " s, "
        << manifest.files.size() << " sessions, checksum " << manifest.dataset_checksum()
        << ", manifest " << manifest_path(config.data_root(), m).string() << "\n";
    manifests.push_back(manifest);
  }
  return manifests;
}

// --- modem self-test --------------------------------------------------------

std::vector<SelftestResult> modem_selftest(std::size_t frames, std::uint64_t seed) {
  std::vector<SelftestResult> results;
  OfdmFrameCfg cfg;

  {
    StaticChannel identity({});
    LinkStats stats;
    run_link(cfg, identity, frames, 0.0, derive_seed(seed, 1), &stats);
    const bool ok = stats.bit_errors == 0 && stats.bits == frames * cfg.bits_per_frame;
    results.push_back({"round_trip_ber", ok,
                       std::to_string(stats.bit_errors) + " errors in " +
                           std::to_string(stats.bits) + " bits"});
  }
  {
    Rng rng(derive_seed(seed, 2));
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      ComplexVector x(cfg.n_subcarriers);
      for (auto& v : x) v = {rng.normal(), rng.normal()};
      const auto fx = fft_unitary(x);
      double ex = 0.0, ef = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        ex += std::norm(x[i]);
        ef += std::norm(fx[i]);
      }
      worst = std::max(worst, std::abs(ex - ef) / ex);
    }
    results.push_back({"parseval", worst < 1e-10, "max relative residual " + sci(worst)});
  }
  {
    Rng rng(derive_seed(seed, 3));
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n_taps = 1 + rng.below(cfg.cp_len);
      ComplexVector taps(n_taps);
      for (auto& t : taps) t = {rng.normal(), rng.normal()};
      StaticChannel channel(taps);
      const auto snaps = run_link(cfg, channel, 1, 0.0, derive_seed(seed, 4, trial));
      const auto expected = tap_frequency_response(taps, cfg.n_subcarriers);
      double peak = 0.0, err = 0.0;
      for (std::size_t k = 0; k < expected.size(); ++k) {
        peak = std::max(peak, std::abs(expected[k]));
        err = std::max(err, std::abs(snaps.front().h[k] - expected[k]));
      }
      worst = std::max(worst, err / peak);
    }
    results.push_back({"cfr_static_channel", worst < 1e-10, "max relative error " + sci(worst)});
  }
  return results;
}

int cmd_modem_selftest(const RunConfig& config, std::ostream& out) {
  bool all = true;
  for (const auto& r : modem_selftest(10000, config.seed)) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
    all = all && r.passed;
  }
  return all ? kExitOk : kExitRuntime;
}

// --- preprocess -------------------------------------------------------------

std::vector<DatasetManifest> cmd_preprocess(const RunConfig& config, std::ostream& out) {
  std::vector<DatasetManifest> manifests;
  const fs::path src = config.data_root();
  const fs::path dst = config.preprocessed_root();
  for (Method m : config.methods) {
    DatasetManifest manifest = load_manifest(src, m);
    if (manifest.stage != "raw")
      throw DataError("dataset " + manifest_path(src, m).string() + " is already preprocessed");
    std::vector<SessionEntry> entries(manifest.files.size());
    std::size_t dropped = 0;
    std::vector<std::size_t> drops(entries.size());
    parallel_for(entries.size(), config.workers, [&](std::size_t i) {
      const Session raw = load_entry(manifest, manifest.files[i], src);
      PreprocessResult r = preprocess_session(raw, config.filter);
      drops[i] = r.dropped;
      const fs::path rel = session_relpath(m, raw.subject_id, raw.label, raw.session_index);
      entries[i] = session_entry(r.session, save_session(r.session, dst / rel));
    });
    for (auto d : drops) dropped += d;
    manifest.files = std::move(entries);
    manifest.stage = "preprocessed";
    manifest.echo["filter"] = config_to_json(config).at("filter");
    save_manifest(manifest, dst);
    out << to_string(m) << ": preprocessed " << manifest.files.size() << " sessions, dropped "
        << dropped << " snapshots, manifest " << manifest_path(dst, m).string() << "\n";
    manifests.push_back(std::move(manifest));
  }
  return manifests;
}

// --- train-eval -------------------------------------------------------------

ExampleSet load_examples(const RunConfig& config, const DatasetManifest& manifest,
                         const fs::path& root) {
  if (manifest.n_subcarriers != config.frame.n_subcarriers)
    throw DataError("dataset has " + std::to_string(manifest.n_subcarriers) +
                    " subcarriers, config expects " + std::to_string(config.frame.n_subcarriers));
  const bool raw = manifest.stage == "raw";
  std::vector<ExampleSet> parts(manifest.files.size());
  parallel_for(parts.size(), config.workers, [&](std::size_t i) {
    Session s = load_entry(manifest, manifest.files[i], root);
    if (raw) s = preprocess_session(s, config.filter).session;
    parts[i] = build_examples(std::span<const Session>(&s, 1), config.examples_per_session);
  });
  ExampleSet all;
  for (auto& p : parts) {
    if (all.data.x.cols == 0) all.data.x = FeatureMatrix(0, p.data.x.cols);
    for (std::size_t r = 0; r < p.data.size(); ++r) {
      all.data.x.push_row(p.data.x.row(r));
      all.data.y.push_back(p.data.y[r]);
      all.session_id.push_back(p.session_id[r]);
      all.frame_index.push_back(p.frame_index[r]);
    }
  }
  return all;
}

std::vector<EvalReport> cmd_train_eval(const RunConfig& config, std::ostream& out) {
  std::vector<EvalReport> reports;
  const fs::path root = config.data_root();
  const fs::path out_dir(config.out_dir);
  std::string log = "# train-eval " + timestamp() + "\n";
  for (Method m : config.methods) {
    const DatasetManifest manifest = load_manifest(root, m);
    manifest.check_balanced();
    ExampleSet examples = load_examples(config, manifest, root);

    const std::uint64_t fold_seed = derive_seed(config.seed, seed_from_string("folds"));
    const FoldPlan plan = make_folds(manifest, config.cv_k, fold_seed);
    const std::uint64_t permute_seed = derive_seed(config.seed, seed_from_string("permute"));
    if (config.shuffle_labels) permute_labels(examples, permute_seed);

    CvOptions options;
    options.seed = derive_seed(config.seed, seed_from_string("cv"));
    options.workers = config.workers;
    options.split = config.cv_split;
    EvalReport report = run_cv(examples, plan, config.roster, config.classifiers, options);
    report.method = m;
    report.dataset_checksum = manifest.dataset_checksum();
    report.shuffled_labels = config.shuffle_labels;

    const json doc = config_to_json(config);
    json classifiers = to_json(config.classifiers);
    classifiers["roster"] = config.roster;
    report.echo = {
        {"seed", config.seed},
        {"dataset",
         {{"method", std::string(to_string(m))},
          {"stage", manifest.stage},
          {"checksum", report.dataset_checksum},
          {"sessions", manifest.files.size()},
          {"subjects", manifest.subjects},
          {"generation_seed", manifest.seed},
          {"generation", manifest.echo}}},
        {"filter", doc.at("filter")},
        {"features", doc.at("features")},
        {"cv",
         {{"k", config.cv_k},
          {"split", std::string(to_string(config.cv_split))},
          {"fold_seed", fold_seed},
          {"cv_seed", options.seed},
          {"shuffle_labels", config.shuffle_labels},
          {"permute_seed", permute_seed}}},
        {"classifiers", std::move(classifiers)}};
    report.check_consistency();

    const fs::path dir = out_dir / std::string(to_string(m));
    write_text(dir / "report.json", report_to_json(report).dump(2) + "\n");
    write_text(dir / "folds.json", fold_plan_to_json(plan).dump(2) + "\n");
    const EvalReport single[] = {report};
    const ComparisonTable table = compare(single);
    write_text(dir / "comparison.csv", comparison_csv(table));
    write_text(dir / "comparison.svg", comparison_svg(table));
    log += timing_log(report);

    const auto& best = table.rows.front();
    out << to_string(m) << ": " << examples.data.size() << " examples, " << config.cv_k
        << "-fold; best " << best.classifier << " " << fixed(best.snapshot_accuracy, 2)
        << "% snapshot, " << fixed(best.session_accuracy, 2) << "% session; report "
        << (dir / "report.json").string() << "\n";
    for (const auto& row : table.rows)
      out << "  " << row.classifier << " " << fixed(row.snapshot_accuracy, 2) << " "
          << fixed(row.session_accuracy, 2) << "\n";
    reports.push_back(std::move(report));
  }
  fs::create_directories(out_dir);
  std::ofstream(out_dir / "run.log", std::ios::app) << log;
  return reports;
}

// --- report -----------------------------------------------------------------

ComparisonTable cmd_report(std::span<const fs::path> paths, const fs::path& out_dir,
                           std::ostream& out) {
  std::vector<EvalReport> reports;
  for (const auto& p : paths) {
    json j;
    try {
      j = json::parse(read_text(p));
    } catch (const json::parse_error& e) {
      throw DataError(p.string() + " is not valid JSON: " + e.what());
    }
    reports.push_back(report_from_json(j));
  }
  const ComparisonTable table = compare(reports);
  write_text(out_dir / "comparison.csv", comparison_csv(table));
  write_text(out_dir / "comparison.svg", comparison_svg(table));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    out << i + 1 << ". " << r.method << " " << r.classifier << " " << fixed(r.snapshot_accuracy, 2)
        << "% snapshot, " << fixed(r.session_accuracy, 2) << "% session"
        << (r.best ? "  <- best" : "") << "\n";
  }
  out << "wrote " << (out_dir / "comparison.csv").string() << " and "
      << (out_dir / "comparison.svg").string() << "\n";
  return table;
}

// --- argument handling ------------------------------------------------------

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string method;
  std::string out;
  std::string data;
  std::optional<std::size_t> workers;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration");
  cmd->add_option("--seed", f.seed, "Master seed");
  cmd->add_option("--method", f.method, "CBDM, HBDM or both")
      ->check(CLI::IsMember({"CBDM", "HBDM", "both", "cbdm", "hbdm"}));
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--data", f.data, "Dataset root (default <out>/data)");
  cmd->add_option("--workers", f.workers, "Worker threads (0 = all cores)");
}

json config_document(const CommonFlags& f) {
  json j = json::object();
  if (!f.config.empty()) {
    try {
      j = json::parse(read_text(f.config));
    } catch (const json::parse_error& e) {
      throw ConfigError("config " + f.config + " is not valid JSON: " + e.what());
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    }
  }
  if (f.seed) j["seed"] = *f.seed;
  if (!f.method.empty()) j["method"] = f.method == "both" ? "both" : std::string(to_string(parse_method(f.method)));
  if (!f.out.empty()) j["out_dir"] = f.out;
  if (!f.data.empty()) j["dataset"]["root"] = f.data;
  if (f.workers) j["workers"] = *f.workers;
  return j;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) items.push_back(item);
  return items;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"rfhydro: synthetic RF dehydration sensing pipeline"};
  app.require_subcommand(1);

  CommonFlags sim_flags, self_flags, pre_flags, eval_flags;
  std::optional<std::size_t> subjects;
  std::string classifiers;
  bool shuffle = false;
  std::vector<std::string> report_paths;
  std::string report_out = ".";

  auto* sim = app.add_subcommand("simulate", "Synthesize raw CFR datasets");
  add_common(sim, sim_flags);
  sim->add_option("--subjects", subjects, "Number of subjects");
  auto* self = app.add_subcommand("modem-selftest", "Check the OFDM modem");
  add_common(self, self_flags);
  auto* pre = app.add_subcommand("preprocess", "Filter a raw dataset");
  add_common(pre, pre_flags);
  auto* eval = app.add_subcommand("train-eval", "Cross-validate the classifier roster");
  add_common(eval, eval_flags);
  eval->add_option("--classifiers", classifiers, "Comma-separated classifier names");
  eval->add_flag("--shuffle-labels", shuffle, "Permute labels (null-hypothesis run)");
  auto* rep = app.add_subcommand("report", "Merge evaluation reports into a comparison");
  rep->add_option("reports", report_paths, "report.json files")->required();
  rep->add_option("--out", report_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (rep->parsed()) {
      std::vector<fs::path> paths(report_paths.begin(), report_paths.end());
      cmd_report(paths, report_out, out);
      return kExitOk;
    }
    CommonFlags& flags = sim->parsed() ? sim_flags
                         : self->parsed() ? self_flags
                         : pre->parsed()  ? pre_flags
                                          : eval_flags;
    json doc = config_document(flags);
    if (subjects) doc["dataset"]["subjects"] = *subjects;
    if (!classifiers.empty()) doc["classifiers"]["roster"] = split_list(classifiers);
    if (shuffle) doc["cv"]["shuffle_labels"] = true;
    const RunConfig config = config_from_json(doc);

    if (sim->parsed()) cmd_simulate(config, out);
    else if (self->parsed()) return cmd_modem_selftest(config, out);
    else if (pre->parsed()) cmd_preprocess(config, out);
    else cmd_train_eval(config, out);
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace rfhydro
