#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wingfea/solver.hpp"
#include "wingfea/spec.hpp"

namespace wingfea::orch {

struct InsufficientMemoryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ResourceEnvelope {
  std::uint64_t mem_available = 0;  // bytes
  std::uint64_t mem_per_case = 0;   // bytes
  int cores = 1;
  int batch_max = 16;
};

ResourceEnvelope detect_resources(std::uint64_t mem_per_case_hint = 0);

// B = min(floor(M_avail / M_case), N_cores, B_max); throws when the floor is 0.
int plan_batch(const ResourceEnvelope& env);

enum class CaseStatus { ok, failed, retried_ok };

const char* status_name(CaseStatus s);

struct CaseOutcome {
  spec::ConfigurationPoint config;
  CaseStatus status = CaseStatus::failed;
  int attempts = 0;
  std::optional<solve::CaseMetrics> metrics;
  std::string failure_reason;
  double wall_ms = 0.0;
};

struct MetricStats {
  double min = 0.0, max = 0.0, mean = 0.0, stddev = 0.0, cv = 0.0;
  std::size_t n = 0;
};

struct SweepDataset {
  std::vector<spec::ParameterRange> space;
  std::vector<CaseOutcome> outcomes;  // ordered by configuration index
  double convergence_rate = 0.0;
  std::map<std::string, MetricStats> stats;  // over converged cases
};

// Population statistics (and CV) per metric field over converged outcomes.
SweepDataset aggregate(const std::vector<spec::ParameterRange>& space,
                       std::vector<CaseOutcome> outcomes);

// What a retry should change, given the error class of a failed attempt.
struct RetryDecision {
  bool retry = false;
  bool upgrade_mesh_level = false;
  bool loosen_tolerance = false;
};

RetryDecision retry_policy(int attempt, const std::string& error_kind, int max_retries = 2);

struct SweepOptions {
  std::string work_dir;        // one subdirectory per configuration index
  int max_retries = 2;
  double load_gain = 100.0;    // tip-load gain for the 1.0g baseline
  solve::SolverOptions solver;
  // Early-termination predicate over streamed outcomes; default never stops.
  std::function<bool(const CaseOutcome&)> stop_when;
  std::function<void(const CaseOutcome&)> on_outcome;  // streaming hook
};

// Runs one configuration end to end (geometry -> mesh -> spectrum) in its own
// working directory; never throws, failures are recorded in the outcome.
CaseOutcome run_case(const spec::AnalysisSpec& base, const spec::ConfigurationPoint& config,
                     const SweepOptions& opts);

// Worker-pool sweep: at most plan_batch(env) cases in flight, streamed
// completion, final ordering by configuration index.
SweepDataset run_sweep(const spec::AnalysisSpec& base,
                       const std::vector<spec::ConfigurationPoint>& configs,
                       const ResourceEnvelope& env, const SweepOptions& opts);

std::string outcome_to_json(const CaseOutcome& o);
std::string dataset_to_json(const SweepDataset& d);
SweepDataset dataset_from_json(const std::string& text);

// Applies a configuration point onto the base geometry (shell_thickness,
// spar_width, rib_thickness, spar_count, rib_count are recognized).
spec::GeometryParams apply_config(const spec::GeometryParams& base,
                                  const spec::ConfigurationPoint& config);

}  // namespace wingfea::orch
