#pragma once

/**
 * @file dataset_store.hpp
 * @brief Session files, dataset manifests, synthetic dataset generation and
 *        session-level fold plans.
 *
 * On-disk layout: `<root>/<method>/manifest.json` and
 * `<root>/<method>/subject_<id>/<label>/session_<n>.csv`. Manifest file paths
 * are relative to `<root>`. Checksums are hex SHA-256 of the file bytes.
 */

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rfhydro/body_channel.hpp"
#include "rfhydro/ofdm_modem.hpp"
#include "rfhydro/session.hpp"

namespace rfhydro {

namespace fs = std::filesystem;

constexpr int kManifestVersion = 1;

/// Failure to load a session or manifest. The subclasses distinguish the
/// causes callers are expected to handle.
class LoadError : public DataError {
 public:
  using DataError::DataError;
};
class MalformedHeaderError : public LoadError {
 public:
  using LoadError::LoadError;
};
class TruncatedRowError : public LoadError {
 public:
  using LoadError::LoadError;
};
class ChecksumError : public LoadError {
 public:
  using LoadError::LoadError;
};

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const fs::path& path);

/// Relative path of a session file under the dataset root.
fs::path session_relpath(Method method, std::size_t subject_id, Label label,
                         std::size_t session_index);

/// Serializes a session to the CSV format (header `frame_index,time_s,re_0,im_0,...`,
/// 17 significant digits).
std::string session_to_csv(const Session& session);
/// Writes the CSV and returns its SHA-256.
std::string save_session(const Session& session, const fs::path& path);

/// Loads a session. Label, method, subject and session number come from the
/// path. If `expected_sha256` is given the file bytes are verified first.
Session load_session(const fs::path& path, std::size_t n_subcarriers = 64,
                     double snapshot_rate = 250.0,
                     std::optional<std::string> expected_sha256 = std::nullopt);
Session parse_session_csv(std::string_view text, std::size_t n_subcarriers,
                          const std::string& origin);

struct SessionEntry {
  std::string path;  ///< relative to the dataset root
  std::string sha256;
  Label label = Label::hydrated;
  std::size_t subject_id = 0;
  std::size_t session_index = 0;
  std::size_t session_id = 0;
  std::size_t snapshots = 0;
  std::size_t dropped_snapshots = 0;
  double duration_s = 0.0;
};

struct DatasetManifest {
  int format_version = kManifestVersion;
  std::string stage = "raw";  ///< "raw" or "preprocessed"
  Method method = Method::cbdm;
  std::size_t subjects = 0;
  std::size_t sessions_per_class_per_subject = 0;
  std::uint64_t seed = 0;
  double snapshot_rate = 250.0;
  std::size_t n_subcarriers = 64;
  nlohmann::json echo = nlohmann::json::object();  ///< frame cfg, profiles, scenario, link, filter
  std::vector<SessionEntry> files;

  double total_duration() const;
  std::size_t count(Label label) const;
  /// SHA-256 over the ordered per-file checksums; identifies the dataset content.
  std::string dataset_checksum() const;
  /// Throws DataError if the class counts per subject are unequal.
  void check_balanced() const;
};

nlohmann::json manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const nlohmann::json& j);
fs::path manifest_path(const fs::path& root, Method method);
void save_manifest(const DatasetManifest& manifest, const fs::path& root);
DatasetManifest load_manifest(const fs::path& root, Method method);

/// Manifest entry describing a saved session file.
SessionEntry session_entry(const Session& session, std::string sha256);

/// Loads one listed session, verifying its checksum and path metadata.
Session load_entry(const DatasetManifest& manifest, const SessionEntry& entry, const fs::path& root);

/// Loads every session of a manifest, verifying each checksum.
std::vector<Session> load_dataset(const DatasetManifest& manifest, const fs::path& root);

struct GenerateRequest {
  OfdmFrameCfg frame;
  HydrationProfile hydrated = default_hydrated_profile();
  HydrationProfile dehydrated = default_dehydrated_profile();
  ScenarioPreset preset;
  Method method = Method::cbdm;
  std::size_t subjects = 5;
  std::size_t sessions_per_class = 5;
  double session_seconds = 30.0;
  double noise_std = 0.056234132519034911;  ///< 25 dB per-subcarrier SNR
  std::uint64_t seed = 1;
  std::size_t workers = 0;
  nlohmann::json echo = nlohmann::json::object();
};

std::size_t frames_per_session(const GenerateRequest& request);

/// One synthetic session: samples the body channel for (subject, label,
/// session_index) and sounds it with the OFDM link.
Session synthesize_session(const GenerateRequest& request, std::size_t subject_id, Label label,
                           std::size_t session_index, std::size_t session_id);

/// All sessions of a dataset in manifest order (subject, dehydrated then
/// hydrated, session number), without touching the filesystem.
std::vector<Session> generate_sessions(const GenerateRequest& request);

/// Writes a manifest for already generated or processed sessions.
DatasetManifest write_dataset(std::span<const Session> sessions, const fs::path& root,
                              DatasetManifest manifest);

/// Generates and persists a full dataset; returns the saved manifest.
DatasetManifest generate_dataset(const GenerateRequest& request, const fs::path& root);

struct SessionKey {
  std::size_t session_id = 0;
  Label label = Label::hydrated;
};

struct FoldPlan {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::map<std::size_t, std::size_t> assignment;  ///< session_id -> fold

  std::vector<std::size_t> fold_sessions(std::size_t fold) const;
  /// Throws DataError unless the plan partitions `sessions` with fold sizes
  /// within one of each other.
  void check_partition(std::span<const SessionKey> sessions) const;
};

/// Label-stratified session-level K-fold plan.
FoldPlan make_folds(std::span<const SessionKey> sessions, std::size_t k, std::uint64_t seed);
FoldPlan make_folds(const DatasetManifest& manifest, std::size_t k, std::uint64_t seed);

nlohmann::json fold_plan_to_json(const FoldPlan& plan);
FoldPlan fold_plan_from_json(const nlohmann::json& j);

}  // namespace rfhydro
