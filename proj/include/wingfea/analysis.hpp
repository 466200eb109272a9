#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wingfea/orchestrator.hpp"

namespace wingfea::analysis {

struct NoDataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- Pareto ------------------------------------------------------------------

struct ParetoPoint {
  int case_index = 0;
  std::vector<double> objectives;  // raw metric values, in objective order
  bool dominated = false;
};

// Non-dominated set under the given objectives (maximize handled by sign
// normalization). Distinct points with identical vectors are all kept;
// output sorted by the first objective.
std::vector<ParetoPoint> pareto_front(const orch::SweepDataset& dataset,
                                      const std::vector<spec::Objective>& objectives);

std::vector<ParetoPoint> pareto_front_of(const std::vector<std::vector<double>>& points);

// --- sensitivity -------------------------------------------------------------

struct CorrelationEntry {
  std::string parameter;
  std::string metric;
  double r = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  bool degenerate = false;  // zero variance on either side; r/p not meaningful
};

// Pearson r with two-sided t-distribution p-values per (parameter, metric)
// pair over converged cases.
std::vector<CorrelationEntry> sensitivity(const orch::SweepDataset& dataset,
                                          const std::vector<std::string>& parameters,
                                          const std::vector<std::string>& metrics);

double pearson_r(const std::vector<double>& a, const std::vector<double>& b);
double t_test_p_value(double r, std::size_t n);

// --- fatigue -----------------------------------------------------------------

struct SnCurve {
  double fatigue_limit = 160e6;        // Pa
  double limit_cycles = 1e7;
  double low_cycle_amplitude = 450e6;  // finite-life anchor (configurable default)
  double low_cycle_count = 1e3;

  // Cycles to failure at amplitude sa; +inf below the fatigue limit.
  double life(double amplitude) const;
};

enum class LifeClass { infinite, finite, redesign };

const char* life_class_name(LifeClass c);

struct FatigueAssessment {
  double stress_amplitude = 0.0;   // Pa, max over steps of sigma_max/2 (R=0)
  double predicted_cycles = 0.0;   // >= 1e8 reported for infinite life
  double miner_damage = 0.0;       // per mission over the GAG steps
  LifeClass life_class = LifeClass::infinite;
};

// Bands: infinite sa < 160 MPa (strict), redesign sa > 300 MPa, finite between
// (both boundaries inclusive to finite).
FatigueAssessment fatigue_life(const std::vector<double>& per_step_max_vm,
                               const SnCurve& sn = {});

double safety_factor(double max_stress, const kb::MaterialRecord& material);

struct DesignReportEntry {
  int case_index = 0;
  FatigueAssessment fatigue;
  double safety = 0.0;
};

DesignReportEntry classify_design(int case_index, const FatigueAssessment& assessment,
                                  double sf);

// --- report ------------------------------------------------------------------

struct BandCensus {
  std::size_t infinite = 0, finite = 0, redesign = 0;
  double pct_infinite = 0.0, pct_finite = 0.0, pct_redesign = 0.0;
  std::size_t total() const { return infinite + finite + redesign; }
};

struct AnalysisReport {
  std::vector<spec::Objective> objectives;
  std::vector<ParetoPoint> front;
  std::vector<CorrelationEntry> correlations;
  std::vector<DesignReportEntry> designs;
  BandCensus bands;
};

// yield_strength = 0 leaves safety factors unreported.
AnalysisReport analyze(const orch::SweepDataset& dataset,
                       const std::vector<spec::Objective>& objectives,
                       double yield_strength = 0.0, const SnCurve& sn = {});

std::string report_to_json(const AnalysisReport& report);
std::string front_csv(const AnalysisReport& report);
std::string correlations_csv(const AnalysisReport& report);

}  // namespace wingfea::analysis
