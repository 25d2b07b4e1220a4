#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dip/network.hpp"
#include "dip/optimize.hpp"
#include "dip/tasks.hpp"

namespace dip::cli {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitRuntime = 3 };

/// Everything needed to reproduce one invocation. Round-trips through JSON;
/// unknown keys are rejected.
struct RunConfig {
  std::string task;  // denoise | sr | inpaint | flash | restore | impedance | ablate | bench

  std::string input;
  std::string gt;
  std::optional<double> sigma_synth;  // synthesize noise on a clean input (0-255 scale)
  std::size_t factor = 4;
  std::string mask = "bernoulli:0.5";
  std::string flash;
  std::string noflash;
  tasks::Normalization normalization = tasks::Normalization::Mean;
  std::optional<std::size_t> crop_border;  // PSNR border; factor for sr, 0 otherwise

  /// Input and output channel counts are not configured here: they follow
  /// code.channels and the observed image.
  net::ArchitectureSpec arch;
  opt::OptimConfig optim;
  tasks::CodeSpec code;

  std::vector<std::uint64_t> seeds{0};
  bool average = false;
  std::vector<std::size_t> snapshot_at;

  std::vector<std::string> archs;  // ablate
  std::string dataset;             // bench
  std::string manifest;            // bench; defaults to <dataset>/manifest.json
  std::string bench_task = "denoise";

  std::string out = "dip_out";
};

/// Task-specific defaults (iteration budget, code perturbation, energy
/// normalization). ConfigError for an unknown task.
RunConfig default_config(std::string_view task);

nlohmann::json to_json(const RunConfig& config);
/// Fields missing from `j` keep the values of `base`.
RunConfig config_from_json(const nlohmann::json& j, const RunConfig& base);
RunConfig load_config(const std::string& path, const RunConfig& base);
/// ConfigError / InvalidRange / InvalidShape / InvalidMask on the first problem.
void validate(const RunConfig& config);
/// FNV-1a of the canonical JSON form, excluding the output directory.
std::string config_hash(const RunConfig& config);

/// Worker threads for fan-out: DIP_THREADS if set (>= 1), else the hardware
/// concurrency.
std::size_t worker_count();

/// Runs the subcommand described by `config`, writing into config.out.
void execute(const RunConfig& config, std::ostream& log);

/// Full command-line entry point; returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dip::cli
