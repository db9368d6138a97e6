#pragma once

/**
 * @file run_config.hpp
 * @brief The single JSON run configuration. Every tunable constant of the
 *        pipeline appears in it with its default; a config file only needs
 *        the keys it changes, and unknown keys are rejected at every level.
 */

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rfhydro/body_channel.hpp"
#include "rfhydro/dataset_store.hpp"
#include "rfhydro/dsp_preprocess.hpp"
#include "rfhydro/eval_harness.hpp"
#include "rfhydro/ofdm_modem.hpp"

namespace rfhydro {

struct RunConfig {
  std::uint64_t seed = 1;
  std::vector<Method> methods{Method::cbdm, Method::hbdm};
  std::string out_dir = "rfhydro_out";
  std::string data_dir;  ///< empty: <out_dir>/data
  std::size_t workers = 0;

  OfdmFrameCfg frame;
  double noise_std = 0.056234132519034911;

  std::size_t subjects = 5;
  std::size_t sessions_per_class = 5;
  double session_seconds = 30.0;

  HydrationProfile hydrated = default_hydrated_profile();
  HydrationProfile dehydrated = default_dehydrated_profile();
  ScenarioPreset cbdm = scenario(Method::cbdm);
  ScenarioPreset hbdm = scenario(Method::hbdm);

  FilterSpec filter;
  std::size_t examples_per_session = 40;

  std::size_t cv_k = 5;
  SplitUnit cv_split = SplitUnit::session;
  bool shuffle_labels = false;

  std::vector<std::string> roster = default_roster();
  ClassifierSettings classifiers;

  const ScenarioPreset& preset(Method method) const {
    return method == Method::cbdm ? cbdm : hbdm;
  }
  std::filesystem::path data_root() const;
  std::filesystem::path preprocessed_root() const;

  /// Cross-field checks; throws ConfigError.
  void validate() const;
};

/// The complete document, defaults included.
nlohmann::json config_to_json(const RunConfig& config);

/// Overlays `overrides` on the defaults. Throws ConfigError naming the key
/// for unknown keys, wrong types or invalid values.
RunConfig config_from_json(const nlohmann::json& overrides);

RunConfig load_config(const std::filesystem::path& path);

/// "CBDM", "HBDM" or "both".
std::vector<Method> parse_methods(std::string_view text);

/// Dataset synthesis request for one method.
GenerateRequest generate_request(const RunConfig& config, Method method);

}  // namespace rfhydro
