#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "metastab/config.hpp"
#include "metastab/oracles.hpp"

namespace metastab {

/// Exit codes of the command-line interface.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // oracle FAIL or precondition violation
inline constexpr int kExitUsage = 2;    // usage or configuration error

struct CommandContext {
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;
  std::string format = "json";  // json | csv | md
  /// Output directory after applying --out and METASTAB_OUT_DIR.
  std::string out_dir = "out";
  std::size_t workers = 0;
};

/// --out if given, else METASTAB_OUT_DIR if set and non-empty, else `configured`.
std::string resolve_output_directory(const std::optional<std::string>& flag, const std::string& configured);

/// Prints every closed-form bound as JSON followed by an aligned table
/// (json), as a Markdown table (md) or as key,value,anchor rows (csv).
int cmd_bounds(const ExperimentConfig& config, const CommandContext& ctx);

/// Runs the replicas of `config.run.kind` and writes the report, optional
/// trajectories and manifest.json into ctx.out_dir.
int cmd_simulate(const ExperimentConfig& config, const CommandContext& ctx);

/// Escape-time sweep over config.run.betas: escape_samples.csv and sweep.json.
int cmd_sweep(const ExperimentConfig& config, const CommandContext& ctx);

/// Names accepted by cmd_verify.
std::vector<std::string> oracle_names();

struct VerifyOptions {
  std::vector<std::string> names;
  bool all = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicas;
};

/// Default configuration of a named oracle, run at `seed`.
OracleVerdict run_named_oracle(const std::string& name, std::uint64_t seed, std::optional<std::size_t> replicas);
std::uint64_t default_oracle_seed(const std::string& name);
std::string verdict_to_json(const OracleVerdict& verdict);

/// Runs the named oracles, writes verdict_<name>.json per oracle and returns
/// 0 iff every verdict is PASS.
int cmd_verify(const VerifyOptions& options, const CommandContext& ctx);

/// Re-classifies stored binary trajectories against the tube of `config`.
int cmd_classify(const ExperimentConfig& config, const std::vector<std::string>& paths, const CommandContext& ctx);

/// Full command-line entry point (argv[0] is the program name).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace metastab
