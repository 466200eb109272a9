#pragma once

#include <optional>
#include <string>
#include <vector>

namespace wingfea::cli {

// Exit codes: 0 success, 1 validation error, 2 runtime failure, 3 partial sweep.
constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitPartial = 3;

struct CommonFlags {
  std::string spec_path;
  std::string out_dir = "out";
  int workers = 0;           // 0 = auto
  int batch_max = 16;
  std::uint64_t mem_per_case = 0;  // bytes, 0 = auto-estimate
  int limit = 0;             // 0 = all configurations
  bool resume = false;
  bool follow = false;
  bool deck_only = false;
  std::string calculix_bin;  // optional external solver
  std::string kb_path;
  double load_gain = 100.0;
};

int cmd_geom(const CommonFlags& flags);
int cmd_run(const CommonFlags& flags);
int cmd_sweep(const CommonFlags& flags);
int cmd_analyze(const std::string& dataset_path, const std::string& out_dir,
                const std::vector<std::string>& objective_flags, double yield_strength);

// Reads WINGFEA_-prefixed environment variables into unset flags.
void apply_env(CommonFlags& flags);

}  // namespace wingfea::cli
