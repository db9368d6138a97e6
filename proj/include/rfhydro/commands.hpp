#pragma once

/**
 * @file commands.hpp
 * @brief Pipeline subcommands behind the command-line tool.
 *
 * Exit codes: 0 success, 1 validation error (bad flags or config), 2 runtime
 * or check failure (I/O, checksum mismatch, failed self-test).
 */

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rfhydro/eval_harness.hpp"
#include "rfhydro/run_config.hpp"

namespace rfhydro {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

/// Synthesizes the raw dataset for each configured method under data_root().
std::vector<DatasetManifest> cmd_simulate(const RunConfig& config, std::ostream& out);

struct SelftestResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Round-trip BER, Parseval and CFR-versus-analytic checks.
std::vector<SelftestResult> modem_selftest(std::size_t frames, std::uint64_t seed);
int cmd_modem_selftest(const RunConfig& config, std::ostream& out);

/// Filters every raw session and writes a "preprocessed" dataset under
/// preprocessed_root().
std::vector<DatasetManifest> cmd_preprocess(const RunConfig& config, std::ostream& out);

/// Loads and verifies the dataset of `method` (raw datasets are preprocessed
/// in memory) and extracts the feature examples.
ExampleSet load_examples(const RunConfig& config, const DatasetManifest& manifest,
                         const std::filesystem::path& root);

/// Cross-validates the roster on each method and writes report.json,
/// folds.json, comparison.csv and comparison.svg under <out_dir>/<method>/.
/// Timings go to <out_dir>/run.log only.
std::vector<EvalReport> cmd_train_eval(const RunConfig& config, std::ostream& out);

/// Merges evaluation reports of one dataset into comparison files in `out_dir`.
ComparisonTable cmd_report(std::span<const std::filesystem::path> reports,
                           const std::filesystem::path& out_dir, std::ostream& out);

/// Parses arguments, runs the subcommand and maps errors to exit codes.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rfhydro
