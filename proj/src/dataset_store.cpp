#include "rfhydro/dataset_store.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

#include "rfhydro/parallel.hpp"
#include "rfhydro/rng.hpp"

namespace rfhydro {

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

void append_double(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  out.append(buf, res.ptr);
}

void append_uint(std::string& out, std::size_t v) {
  char buf[24];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

std::string expected_header(std::size_t n) {
  std::string h = "frame_index,time_s";
  for (std::size_t i = 0; i < n; ++i)
    h += ",re_" + std::to_string(i) + ",im_" + std::to_string(i);
  return h;
}

std::size_t parse_prefixed_number(const std::string& part, std::string_view prefix,
                                  const fs::path& path) {
  if (part.rfind(prefix, 0) != 0)
    throw LoadError("session path " + path.string() + " lacks '" + std::string(prefix) + "'");
  std::size_t value = 0;
  const char* first = part.data() + prefix.size();
  const char* last = part.data() + part.size();
  auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last)
    throw LoadError("session path " + path.string() + " has a malformed number");
  return value;
}

DatasetManifest manifest_template(const GenerateRequest& r) {
  DatasetManifest m;
  m.method = r.method;
  m.subjects = r.subjects;
  m.sessions_per_class_per_subject = r.sessions_per_class;
  m.seed = r.seed;
  m.snapshot_rate = r.frame.snapshot_rate();
  m.n_subcarriers = r.frame.n_subcarriers;
  m.echo = r.echo;
  return m;
}

struct SessionSlot {
  std::size_t subject;
  Label label;
  std::size_t index;
};

std::vector<SessionSlot> session_slots(const GenerateRequest& r) {
  std::vector<SessionSlot> slots;
  for (std::size_t s = 1; s <= r.subjects; ++s)
    for (Label label : {Label::dehydrated, Label::hydrated})
      for (std::size_t n = 1; n <= r.sessions_per_class; ++n) slots.push_back({s, label, n});
  return slots;
}


}  // namespace

SessionEntry session_entry(const Session& s, std::string sha) {
  SessionEntry e;
  e.path = session_relpath(s.method, s.subject_id, s.label, s.session_index).generic_string();
  e.sha256 = std::move(sha);
  e.label = s.label;
  e.subject_id = s.subject_id;
  e.session_index = s.session_index;
  e.session_id = s.session_id;
  e.snapshots = s.snapshots.size();
  e.dropped_snapshots = s.dropped_snapshots;
  e.duration_s = s.duration();
  return e;
}

std::string sha256_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    throw Error("SHA-256 computation failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

fs::path session_relpath(Method method, std::size_t subject_id, Label label,
                         std::size_t session_index) {
  return fs::path(std::string(to_string(method))) / ("subject_" + std::to_string(subject_id)) /
         std::string(to_string(label)) / ("session_" + std::to_string(session_index) + ".csv");
}

std::string session_to_csv(const Session& session) {
  const std::size_t width = session.snapshots.empty() ? 64 : session.snapshots.front().h.size();
  std::string out = expected_header(width);
  out += '\n';
  out.reserve(out.size() + session.snapshots.size() * (40 + width * 48));
  for (const auto& snap : session.snapshots) {
    if (snap.h.size() != width) throw DimensionError("session has ragged snapshot widths");
    append_uint(out, snap.frame_index);
    out += ',';
    append_double(out, snap.time);
    for (const auto& v : snap.h) {
      out += ',';
      append_double(out, v.real());
      out += ',';
      append_double(out, v.imag());
    }
    out += '\n';
  }
  return out;
}

std::string save_session(const Session& session, const fs::path& path) {
  const std::string csv = session_to_csv(session);
  write_file(path, csv);
  return sha256_hex(csv);
}

Session parse_session_csv(std::string_view text, std::size_t n_subcarriers,
                          const std::string& origin) {
  const std::size_t nl = text.find('\n');
  std::string_view header = text.substr(0, nl);
  if (!header.empty() && header.back() == '\r') header.remove_suffix(1);
  if (header != expected_header(n_subcarriers)) {
    const auto columns = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',')) + 1;
    throw MalformedHeaderError(origin + ": malformed header (" + std::to_string(columns) +
                               " columns, expected " + std::to_string(2 + 2 * n_subcarriers) + ")");
  }

  Session session;
  const std::size_t fields = 2 + 2 * n_subcarriers;
  std::size_t pos = nl == std::string_view::npos ? text.size() : nl + 1;
  std::size_t line_no = 1;
  RealVector values(fields);
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    const char* p = line.data();
    const char* last = line.data() + line.size();
    std::size_t got = 0;
    std::size_t frame_index = 0;
    while (got < fields && p <= last) {
      const char* sep = std::find(p, last, ',');
      std::from_chars_result res{};
      if (got == 0) {
        res = std::from_chars(p, sep, frame_index);
      } else {
        res = std::from_chars(p, sep, values[got]);
      }
      if (res.ec != std::errc() || res.ptr != sep)
        throw LoadError(origin + ": bad value on line " + std::to_string(line_no) + ", column " +
                        std::to_string(got + 1));
      ++got;
      p = sep + 1;
      if (sep == last) break;
    }
    if (got < fields)
      throw TruncatedRowError(origin + ": line " + std::to_string(line_no) + " has " +
                              std::to_string(got) + " of " + std::to_string(fields) + " fields");
    if (p <= last)
      throw LoadError(origin + ": line " + std::to_string(line_no) + " has extra fields");

    CfrSnapshot snap;
    snap.frame_index = frame_index;
    snap.time = values[1];
    snap.h.resize(n_subcarriers);
    for (std::size_t k = 0; k < n_subcarriers; ++k)
      snap.h[k] = Complex(values[2 + 2 * k], values[3 + 2 * k]);
    session.snapshots.push_back(std::move(snap));
  }
  return session;
}

Session load_session(const fs::path& path, std::size_t n_subcarriers, double snapshot_rate,
                     std::optional<std::string> expected_sha256) {
  // <method>/subject_<id>/<label>/session_<n>.csv
  const fs::path label_dir = path.parent_path();
  const fs::path subject_dir = label_dir.parent_path();
  const fs::path method_dir = subject_dir.parent_path();
  if (path.extension() != ".csv") throw LoadError("not a session csv: " + path.string());

  const std::string bytes = read_file(path);
  if (expected_sha256 && sha256_hex(bytes) != *expected_sha256)
    throw ChecksumError("checksum mismatch for " + path.string());

  Session s = parse_session_csv(bytes, n_subcarriers, path.string());
  try {
    s.label = parse_label(label_dir.filename().string());
    s.method = parse_method(method_dir.filename().string());
  } catch (const ConfigError& e) {
    throw LoadError("session path " + path.string() + ": " + e.what());
  }
  s.subject_id = parse_prefixed_number(subject_dir.filename().string(), "subject_", path);
  s.session_index = parse_prefixed_number(path.stem().string(), "session_", path);
  s.snapshot_rate = snapshot_rate;
  return s;
}

double DatasetManifest::total_duration() const {
  double total = 0.0;
  for (const auto& f : files) total += f.duration_s;
  return total;
}

std::size_t DatasetManifest::count(Label label) const {
  return static_cast<std::size_t>(
      std::count_if(files.begin(), files.end(), [&](const auto& f) { return f.label == label; }));
}

std::string DatasetManifest::dataset_checksum() const {
  std::string joined;
  for (const auto& f : files) joined += f.sha256 + '\n';
  return sha256_hex(joined);
}

void DatasetManifest::check_balanced() const {
  std::map<std::size_t, std::array<std::size_t, 2>> per_subject;
  for (const auto& f : files) per_subject[f.subject_id][label_index(f.label)]++;
  for (const auto& [subject, counts] : per_subject)
    if (counts[0] != counts[1])
      throw DataError("unbalanced classes for subject " + std::to_string(subject));
}

nlohmann::json manifest_to_json(const DatasetManifest& m) {
  nlohmann::json files = nlohmann::json::array();
  for (const auto& f : m.files)
    files.push_back({{"path", f.path},
                     {"sha256", f.sha256},
                     {"label", to_string(f.label)},
                     {"subject_id", f.subject_id},
                     {"session_index", f.session_index},
                     {"session_id", f.session_id},
                     {"snapshots", f.snapshots},
                     {"dropped_snapshots", f.dropped_snapshots},
                     {"duration_s", f.duration_s}});
  return {{"format", "rfhydro-dataset"},
          {"format_version", m.format_version},
          {"stage", m.stage},
          {"method", to_string(m.method)},
          {"subjects", m.subjects},
          {"sessions_per_class_per_subject", m.sessions_per_class_per_subject},
          {"seed", m.seed},
          {"snapshot_rate", m.snapshot_rate},
          {"n_subcarriers", m.n_subcarriers},
          {"echo", m.echo},
          {"files", files},
          {"totals",
           {{"sessions", m.files.size()},
            {"duration_s", m.total_duration()},
            {"hydrated_sessions", m.count(Label::hydrated)},
            {"dehydrated_sessions", m.count(Label::dehydrated)}}},
          {"dataset_checksum", m.dataset_checksum()}};
}

DatasetManifest manifest_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "rfhydro-dataset")
      throw LoadError("not a dataset manifest");
    DatasetManifest m;
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != kManifestVersion)
      throw LoadError("unsupported manifest version " + std::to_string(m.format_version));
    m.stage = j.at("stage").get<std::string>();
    m.method = parse_method(j.at("method").get<std::string>());
    m.subjects = j.at("subjects").get<std::size_t>();
    m.sessions_per_class_per_subject = j.at("sessions_per_class_per_subject").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.snapshot_rate = j.at("snapshot_rate").get<double>();
    m.n_subcarriers = j.at("n_subcarriers").get<std::size_t>();
    m.echo = j.at("echo");
    for (const auto& f : j.at("files")) {
      SessionEntry e;
      e.path = f.at("path").get<std::string>();
      e.sha256 = f.at("sha256").get<std::string>();
      e.label = parse_label(f.at("label").get<std::string>());
      e.subject_id = f.at("subject_id").get<std::size_t>();
      e.session_index = f.at("session_index").get<std::size_t>();
      e.session_id = f.at("session_id").get<std::size_t>();
      e.snapshots = f.at("snapshots").get<std::size_t>();
      e.dropped_snapshots = f.at("dropped_snapshots").get<std::size_t>();
      e.duration_s = f.at("duration_s").get<double>();
      m.files.push_back(std::move(e));
    }
    if (j.contains("dataset_checksum") &&
        j.at("dataset_checksum").get<std::string>() != m.dataset_checksum())
      throw ChecksumError("manifest dataset_checksum does not match its file list");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed manifest: ") + e.what());
  } catch (const ConfigError& e) {
    throw LoadError(std::string("malformed manifest: ") + e.what());
  }
}

fs::path manifest_path(const fs::path& root, Method method) {
  return root / std::string(to_string(method)) / "manifest.json";
}

void save_manifest(const DatasetManifest& manifest, const fs::path& root) {
  write_file(manifest_path(root, manifest.method), manifest_to_json(manifest).dump(2) + "\n");
}

DatasetManifest load_manifest(const fs::path& root, Method method) {
  const fs::path path = manifest_path(root, method);
  if (!fs::exists(path)) throw LoadError("dataset manifest not found: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
  return manifest_from_json(j);
}

Session load_entry(const DatasetManifest& manifest, const SessionEntry& f, const fs::path& root) {
  Session s = load_session(root / f.path, manifest.n_subcarriers, manifest.snapshot_rate, f.sha256);
  if (s.label != f.label || s.subject_id != f.subject_id || s.session_index != f.session_index ||
      s.method != manifest.method)
    throw LoadError("session " + f.path + " disagrees with its manifest entry");
  s.session_id = f.session_id;
  s.dropped_snapshots = f.dropped_snapshots;
  return s;
}

std::vector<Session> load_dataset(const DatasetManifest& manifest, const fs::path& root) {
  std::vector<Session> sessions;
  sessions.reserve(manifest.files.size());
  for (const auto& f : manifest.files) sessions.push_back(load_entry(manifest, f, root));
  return sessions;
}

std::size_t frames_per_session(const GenerateRequest& r) {
  return static_cast<std::size_t>(std::llround(r.session_seconds * r.frame.snapshot_rate()));
}

Session synthesize_session(const GenerateRequest& r, std::size_t subject_id, Label label,
                           std::size_t session_index, std::size_t session_id) {
  const HydrationProfile& profile = label == Label::dehydrated ? r.dehydrated : r.hydrated;
  const std::uint64_t method_seed = derive_seed(r.seed, static_cast<std::uint64_t>(r.method) + 1);
  const std::uint64_t slot = static_cast<std::uint64_t>(label_index(label)) * 1000 + session_index;
  ChannelModel model = sample_channel(profile, r.preset, subject_id, slot, method_seed);
  BodyChannel channel(std::move(model), derive_seed(method_seed, 0x64726966ULL, subject_id, slot),
                      r.frame);

  Session s;
  s.snapshots = run_link(r.frame, channel, frames_per_session(r), r.noise_std,
                         derive_seed(method_seed, 0x6c696e6bULL, subject_id, slot));
  s.label = label;
  s.method = r.method;
  s.subject_id = subject_id;
  s.session_index = session_index;
  s.session_id = session_id;
  s.snapshot_rate = r.frame.snapshot_rate();
  return s;
}

std::vector<Session> generate_sessions(const GenerateRequest& r) {
  if (r.subjects == 0) throw ConfigError("subjects must be >= 1");
  if (r.sessions_per_class == 0) throw ConfigError("sessions_per_class must be >= 1");
  r.frame.validate();
  validate_profile_pair(r.hydrated, r.dehydrated);
  const auto slots = session_slots(r);
  std::vector<Session> sessions(slots.size());
  parallel_for(slots.size(), r.workers, [&](std::size_t i) {
    sessions[i] = synthesize_session(r, slots[i].subject, slots[i].label, slots[i].index, i);
  });
  return sessions;
}

DatasetManifest write_dataset(std::span<const Session> sessions, const fs::path& root,
                              DatasetManifest manifest) {
  manifest.files.clear();
  for (const auto& s : sessions) {
    const fs::path rel = session_relpath(s.method, s.subject_id, s.label, s.session_index);
    manifest.files.push_back(session_entry(s, save_session(s, root / rel)));
  }
  save_manifest(manifest, root);
  return manifest;
}

DatasetManifest generate_dataset(const GenerateRequest& r, const fs::path& root) {
  if (r.subjects == 0) throw ConfigError("subjects must be >= 1");
  if (r.sessions_per_class == 0) throw ConfigError("sessions_per_class must be >= 1");
  r.frame.validate();
  validate_profile_pair(r.hydrated, r.dehydrated);
  DatasetManifest manifest = manifest_template(r);
  const auto slots = session_slots(r);
  manifest.files.resize(slots.size());
  // Each session is written as soon as it is synthesized to bound memory.
  parallel_for(slots.size(), r.workers, [&](std::size_t i) {
    const Session s = synthesize_session(r, slots[i].subject, slots[i].label, slots[i].index, i);
    const fs::path rel = session_relpath(s.method, s.subject_id, s.label, s.session_index);
    manifest.files[i] = session_entry(s, save_session(s, root / rel));
  });
  manifest.check_balanced();
  save_manifest(manifest, root);
  return manifest;
}

std::vector<std::size_t> FoldPlan::fold_sessions(std::size_t fold) const {
  std::vector<std::size_t> ids;
  for (const auto& [id, f] : assignment)
    if (f == fold) ids.push_back(id);
  return ids;
}

void FoldPlan::check_partition(std::span<const SessionKey> sessions) const {
  if (assignment.size() != sessions.size())
    throw DataError("fold plan covers " + std::to_string(assignment.size()) + " sessions, dataset has " +
                    std::to_string(sessions.size()));
  std::vector<std::size_t> sizes(k, 0);
  for (const auto& s : sessions) {
    auto it = assignment.find(s.session_id);
    if (it == assignment.end())
      throw DataError("session " + std::to_string(s.session_id) + " missing from fold plan");
    if (it->second >= k) throw DataError("fold index out of range");
    sizes[it->second]++;
  }
  const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
  if (*hi - *lo > 1) throw DataError("fold sizes differ by more than one session");
}

FoldPlan make_folds(std::span<const SessionKey> sessions, std::size_t k, std::uint64_t seed) {
  if (k < 2 || k > sessions.size())
    throw ConfigError("k must satisfy 2 <= k <= sessions (" + std::to_string(sessions.size()) +
                      "), got " + std::to_string(k));
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  Rng rng(derive_seed(seed, 0x666f6c64ULL));
  std::size_t cursor = 0;
  for (Label label : {Label::hydrated, Label::dehydrated}) {
    std::vector<std::size_t> ids;
    for (const auto& s : sessions)
      if (s.label == label) ids.push_back(s.session_id);
    std::sort(ids.begin(), ids.end());
    for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.below(i)]);
    // Continuing the round-robin across classes keeps total fold sizes within one.
    for (auto id : ids) plan.assignment[id] = cursor++ % k;
  }
  plan.check_partition(sessions);
  return plan;
}

FoldPlan make_folds(const DatasetManifest& manifest, std::size_t k, std::uint64_t seed) {
  std::vector<SessionKey> keys;
  for (const auto& f : manifest.files) keys.push_back({f.session_id, f.label});
  return make_folds(keys, k, seed);
}

nlohmann::json fold_plan_to_json(const FoldPlan& plan) {
  nlohmann::json folds = nlohmann::json::array();
  for (std::size_t f = 0; f < plan.k; ++f) folds.push_back(plan.fold_sessions(f));
  return {{"k", plan.k}, {"seed", plan.seed}, {"folds", folds}};
}

FoldPlan fold_plan_from_json(const nlohmann::json& j) {
  FoldPlan plan;
  plan.k = j.at("k").get<std::size_t>();
  plan.seed = j.at("seed").get<std::uint64_t>();
  const auto& folds = j.at("folds");
  for (std::size_t f = 0; f < folds.size(); ++f)
    for (const auto& id : folds[f]) plan.assignment[id.get<std::size_t>()] = f;
  return plan;
}

}  // namespace rfhydro
