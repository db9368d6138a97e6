#include "rfhydro/run_config.hpp"

#include <fstream>
#include <sstream>

namespace rfhydro {

using json = nlohmann::json;

namespace {

json complex_to_json(Complex c) { return json::array({c.real(), c.imag()}); }

Complex complex_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("complex values are [re, im] pairs");
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

json interval_to_json(const Interval& i) { return json::array({i.lo, i.hi}); }

Interval interval_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("intervals are [lo, hi] pairs");
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

json frame_to_json(const OfdmFrameCfg& f) {
  return {{"n_subcarriers", f.n_subcarriers}, {"cp_len", f.cp_len},
          {"bits_per_frame", f.bits_per_frame}, {"bits_per_symbol", f.bits_per_symbol},
          {"sample_rate", f.sample_rate},     {"layout", std::string(to_string(f.layout))},
          {"carrier_hz", f.carrier_hz},       {"tx_gain_db", f.tx_gain_db},
          {"rx_gain_db", f.rx_gain_db},       {"interpolation", f.interpolation},
          {"decimation", f.decimation}};
}

OfdmFrameCfg frame_from_json(const json& j) {
  OfdmFrameCfg f;
  f.n_subcarriers = j.at("n_subcarriers").get<std::size_t>();
  f.cp_len = j.at("cp_len").get<std::size_t>();
  f.bits_per_frame = j.at("bits_per_frame").get<std::size_t>();
  f.bits_per_symbol = j.at("bits_per_symbol").get<std::size_t>();
  f.sample_rate = j.at("sample_rate").get<double>();
  f.layout = parse_layout(j.at("layout").get<std::string>());
  f.carrier_hz = j.at("carrier_hz").get<double>();
  f.tx_gain_db = j.at("tx_gain_db").get<double>();
  f.rx_gain_db = j.at("rx_gain_db").get<double>();
  f.interpolation = j.at("interpolation").get<int>();
  f.decimation = j.at("decimation").get<int>();
  return f;
}

json profile_to_json(const HydrationProfile& p) {
  return {{"heart_rate_hz", interval_to_json(p.heart_rate)},
          {"reflection_scale", interval_to_json(p.reflection_scale)},
          {"heart_amp_rad", interval_to_json(p.heart_amp)},
          {"jitter_seed", p.jitter_seed}};
}

HydrationProfile profile_from_json(const json& j, Label label) {
  HydrationProfile p;
  p.label = label;
  p.heart_rate = interval_from_json(j.at("heart_rate_hz"));
  p.reflection_scale = interval_from_json(j.at("reflection_scale"));
  p.heart_amp = interval_from_json(j.at("heart_amp_rad"));
  p.jitter_seed = j.at("jitter_seed").get<std::uint64_t>();
  return p;
}

json preset_to_json(const ScenarioPreset& s) {
  json taps = json::array();
  for (const auto& t : s.static_taps) taps.push_back(complex_to_json(t));
  return {{"static_taps", std::move(taps)},
          {"motion_path_gain", complex_to_json(s.motion_path_gain)},
          {"motion_delay", s.motion_delay},
          {"breathing_rate_hz", s.breathing_rate},
          {"breathing_amp_rad", s.breathing_amp},
          {"drift_std", s.drift_std},
          {"subject_tap_jitter", s.subject_tap_jitter},
          {"session_tap_jitter", s.session_tap_jitter},
          {"subject_motion_phase", s.subject_motion_phase}};
}

ScenarioPreset preset_from_json(const json& j) {
  ScenarioPreset s;
  for (const auto& t : j.at("static_taps")) s.static_taps.push_back(complex_from_json(t));
  s.motion_path_gain = complex_from_json(j.at("motion_path_gain"));
  s.motion_delay = j.at("motion_delay").get<std::size_t>();
  s.breathing_rate = j.at("breathing_rate_hz").get<double>();
  s.breathing_amp = j.at("breathing_amp_rad").get<double>();
  s.drift_std = j.at("drift_std").get<double>();
  s.subject_tap_jitter = j.at("subject_tap_jitter").get<double>();
  s.session_tap_jitter = j.at("session_tap_jitter").get<double>();
  s.subject_motion_phase = j.at("subject_motion_phase").get<double>();
  return s;
}

json filter_to_json(const FilterSpec& f) {
  return {{"lowpass_cutoff_hz", f.lowpass_cutoff}, {"lowpass_taps", f.lowpass_taps},
          {"sg_window", f.sg_window},             {"sg_polyorder", f.sg_polyorder},
          {"outlier_mads", f.outlier_mads}};
}

FilterSpec filter_from_json(const json& j) {
  FilterSpec f;
  f.lowpass_cutoff = j.at("lowpass_cutoff_hz").get<double>();
  f.lowpass_taps = j.at("lowpass_taps").get<std::size_t>();
  f.sg_window = j.at("sg_window").get<std::size_t>();
  f.sg_polyorder = j.at("sg_polyorder").get<std::size_t>();
  f.outlier_mads = j.at("outlier_mads").get<double>();
  return f;
}

std::string methods_to_string(const std::vector<Method>& methods) {
  if (methods.size() == 2) return "both";
  return std::string(to_string(methods.at(0)));
}

// Objects merge key-wise; anything else (numbers, strings, arrays) replaces.
void overlay(json& base, const json& patch, const std::string& where) {
  if (!patch.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = where.empty() ? it.key() : where + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("unknown config key '" + key + "'");
    json& target = base[it.key()];
    if (target.is_object()) {
      overlay(target, it.value(), key);
    } else {
      target = it.value();
    }
  }
}

}  // namespace

std::filesystem::path RunConfig::data_root() const {
  return data_dir.empty() ? std::filesystem::path(out_dir) / "data" : std::filesystem::path(data_dir);
}

std::filesystem::path RunConfig::preprocessed_root() const {
  return std::filesystem::path(out_dir) / "preprocessed";
}

void RunConfig::validate() const {
  frame.validate();
  validate_profile_pair(hydrated, dehydrated);
  for (Method m : methods) {
    ChannelModel probe;
    probe.static_taps = preset(m).static_taps;
    probe.motion_delay = preset(m).motion_delay;
    probe.validate(frame.cp_len);
  }
  filter.validate(frame.snapshot_rate());
  if (methods.empty()) throw ConfigError("method: nothing selected");
  if (subjects == 0) throw ConfigError("dataset.subjects must be >= 1");
  if (sessions_per_class == 0) throw ConfigError("dataset.sessions_per_class must be >= 1");
  if (!(session_seconds > 0.0)) throw ConfigError("dataset.session_seconds must be > 0");
  if (!(noise_std >= 0.0)) throw ConfigError("link.noise_std must be >= 0");
  if (cv_k < 2) throw ConfigError("cv.k must be >= 2");
  if (cv_split == SplitUnit::session && cv_k > subjects * sessions_per_class)
    throw ConfigError("cv.k exceeds the number of sessions per class");
  if (roster.empty()) throw ConfigError("classifiers.roster is empty");
  for (const auto& name : roster) classifier_family(name);
  MlpSpec probe;
  probe.epochs = classifiers.mlp.epochs;
  probe.learning_rate = classifiers.mlp.learning_rate;
  probe.batch_size = classifiers.mlp.batch_size;
  probe.l2 = classifiers.mlp.l2;
  probe.momentum = classifiers.mlp.momentum;
  probe.validate();
}

std::vector<Method> parse_methods(std::string_view text) {
  if (text == "both") return {Method::cbdm, Method::hbdm};
  return {parse_method(text)};
}

json config_to_json(const RunConfig& c) {
  json j = to_json(c.classifiers);
  return {{"seed", c.seed},
          {"method", methods_to_string(c.methods)},
          {"out_dir", c.out_dir},
          {"workers", c.workers},
          {"frame", frame_to_json(c.frame)},
          {"link", {{"noise_std", c.noise_std}}},
          {"dataset",
           {{"root", c.data_dir},
            {"subjects", c.subjects},
            {"sessions_per_class", c.sessions_per_class},
            {"session_seconds", c.session_seconds}}},
          {"profiles",
           {{"hydrated", profile_to_json(c.hydrated)},
            {"dehydrated", profile_to_json(c.dehydrated)}}},
          {"scenarios", {{"CBDM", preset_to_json(c.cbdm)}, {"HBDM", preset_to_json(c.hbdm)}}},
          {"filter", filter_to_json(c.filter)},
          {"features", {{"examples_per_session", c.examples_per_session}}},
          {"cv",
           {{"k", c.cv_k},
            {"split", std::string(to_string(c.cv_split))},
            {"shuffle_labels", c.shuffle_labels}}},
          {"classifiers", {{"roster", c.roster}, {"hyperparameters", j.at("hyperparameters")}}},
          {"mlp", j.at("mlp")}};
}

RunConfig config_from_json(const json& overrides) {
  json doc = config_to_json(RunConfig{});
  overlay(doc, overrides, "");
  RunConfig c;
  std::string section;
  try {
    section = "seed";
    c.seed = doc.at("seed").get<std::uint64_t>();
    section = "method";
    c.methods = parse_methods(doc.at("method").get<std::string>());
    section = "out_dir";
    c.out_dir = doc.at("out_dir").get<std::string>();
    section = "workers";
    c.workers = doc.at("workers").get<std::size_t>();
    section = "frame";
    c.frame = frame_from_json(doc.at("frame"));
    section = "link";
    c.noise_std = doc.at("link").at("noise_std").get<double>();
    section = "dataset";
    const auto& d = doc.at("dataset");
    c.data_dir = d.at("root").get<std::string>();
    c.subjects = d.at("subjects").get<std::size_t>();
    c.sessions_per_class = d.at("sessions_per_class").get<std::size_t>();
    c.session_seconds = d.at("session_seconds").get<double>();
    section = "profiles";
    c.hydrated = profile_from_json(doc.at("profiles").at("hydrated"), Label::hydrated);
    c.dehydrated = profile_from_json(doc.at("profiles").at("dehydrated"), Label::dehydrated);
    section = "scenarios";
    c.cbdm = preset_from_json(doc.at("scenarios").at("CBDM"));
    c.hbdm = preset_from_json(doc.at("scenarios").at("HBDM"));
    section = "filter";
    c.filter = filter_from_json(doc.at("filter"));
    section = "features";
    c.examples_per_session = doc.at("features").at("examples_per_session").get<std::size_t>();
    section = "cv";
    c.cv_k = doc.at("cv").at("k").get<std::size_t>();
    c.cv_split = parse_split_unit(doc.at("cv").at("split").get<std::string>());
    c.shuffle_labels = doc.at("cv").at("shuffle_labels").get<bool>();
    section = "classifiers";
    c.roster = doc.at("classifiers").at("roster").get<std::vector<std::string>>();
    const auto& h = doc.at("classifiers").at("hyperparameters");
    auto& hp = c.classifiers.hyper;
    hp.knn_fine = h.at("knn_fine").get<std::size_t>();
    hp.knn_medium = h.at("knn_medium").get<std::size_t>();
    hp.knn_coarse = h.at("knn_coarse").get<std::size_t>();
    hp.svm_c = h.at("svm_c").get<double>();
    hp.svm_tolerance = h.at("svm_tolerance").get<double>();
    hp.tree_fine_splits = h.at("tree_fine_splits").get<std::size_t>();
    hp.tree_medium_splits = h.at("tree_medium_splits").get<std::size_t>();
    hp.tree_coarse_splits = h.at("tree_coarse_splits").get<std::size_t>();
    hp.boost_members = h.at("boost_members").get<std::size_t>();
    hp.boost_learning_rate = h.at("boost_learning_rate").get<double>();
    hp.boost_max_splits = h.at("boost_max_splits").get<std::size_t>();
    hp.bag_members = h.at("bag_members").get<std::size_t>();
    hp.subspace_members = h.at("subspace_members").get<std::size_t>();
    hp.subspace_dim = h.at("subspace_dim").get<std::size_t>();
    hp.lda_shrinkage = h.at("lda_shrinkage").get<double>();
    section = "mlp";
    const auto& m = doc.at("mlp");
    c.classifiers.mlp.epochs = m.at("epochs").get<std::size_t>();
    c.classifiers.mlp.learning_rate = m.at("learning_rate").get<double>();
    c.classifiers.mlp.batch_size = m.at("batch_size").get<std::size_t>();
    c.classifiers.mlp.l2 = m.at("l2").get<double>();
    c.classifiers.mlp.momentum = m.at("momentum").get<double>();
  } catch (const json::exception& e) {
    throw ConfigError("config section '" + section + "': " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError("config section '" + section + "': " + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  json j;
  try {
    j = json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

GenerateRequest generate_request(const RunConfig& c, Method method) {
  GenerateRequest r;
  r.frame = c.frame;
  r.hydrated = c.hydrated;
  r.dehydrated = c.dehydrated;
  r.preset = c.preset(method);
  r.method = method;
  r.subjects = c.subjects;
  r.sessions_per_class = c.sessions_per_class;
  r.session_seconds = c.session_seconds;
  r.noise_std = c.noise_std;
  r.seed = c.seed;
  r.workers = c.workers;
  const json doc = config_to_json(c);
  r.echo = {{"frame", doc.at("frame")},
            {"link", doc.at("link")},
            {"profiles", doc.at("profiles")},
            {"scenario", doc.at("scenarios").at(std::string(to_string(method)))},
            {"session_seconds", c.session_seconds}};
  return r;
}

}  // namespace rfhydro
