#pragma once

#include <array>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wingfea/kb.hpp"
#include "wingfea/mesher.hpp"
#include "wingfea/spec.hpp"

namespace wingfea::solve {

struct EmptySetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SingularSystemError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The eight-step load spectrum: cruise, maneuver, gust, landing, then the
// four ground-air-ground cycles.
constexpr std::array<double, 8> kLoadSpectrum = {1.0, 2.5, 1.8, 3.0, 0.5, 1.5, 0.75, 1.25};
constexpr std::size_t kGagFirstStep = 4;  // 0-based index of the first GAG step

struct LoadStep {
  std::string name;
  double factor = 1.0;
  int index = 1;  // 1..8
};

std::vector<LoadStep> standard_load_spectrum();

// Nodal load vector plus the constrained DOF set; everything downstream of
// semantic-location resolution.
struct LoadCase {
  std::vector<double> forces;       // 3*n_nodes, N
  std::vector<unsigned char> fixed; // 3*n_nodes, 1 = constrained
};

// Distributes spec loads over selector node sets (forces by tributary boundary
// area, pressures by facet normals, acceleration as body force) and marks
// constrained DOFs. EmptySetError when a referenced set resolves empty.
LoadCase build_load_case(const mesh::Mesh& mesh, const kb::MaterialRecord& material,
                         const std::vector<spec::LoadSpec>& loads,
                         const std::vector<spec::BcSpec>& bcs);

// Baseline 1.0g aerodynamic stand-in: total = mass * 9.80665 * gain, applied
// at the tip node set along -Z, tributary-area weighted.
void add_tip_gravity_load(const mesh::Mesh& mesh, const kb::MaterialRecord& material,
                          double gain, LoadCase& lc);

struct SolverOptions {
  double tolerance = 1e-8;  // relative residual
  int max_iterations = 10000;
};

struct FieldSolution {
  std::vector<double> displacement;        // 3*n_nodes, m
  std::vector<std::array<double, 6>> stress;  // per element: xx yy zz xy yz zx, Pa
  std::vector<double> von_mises;           // per element, Pa
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;

  double max_displacement() const;
  double max_von_mises() const;
};

FieldSolution assemble_and_solve(const mesh::Mesh& mesh, const kb::MaterialRecord& material,
                                 const LoadCase& lc, const SolverOptions& opts = {});

// Reaction forces at constrained DOFs (K u - f on the full system).
std::vector<double> reaction_forces(const mesh::Mesh& mesh, const kb::MaterialRecord& material,
                                    const LoadCase& lc, const FieldSolution& sol);

double structural_mass(const mesh::Mesh& mesh, const kb::MaterialRecord& material);

double von_mises(const std::array<double, 6>& s);

struct CaseMetrics {
  int case_index = 0;
  std::map<std::string, double> params;
  bool converged = false;
  double mass_kg = 0.0;
  double max_vm_stress_pa = 0.0;
  double max_disp_m = 0.0;
  std::vector<double> per_step_max_vm_pa;  // 8 entries
  int iterations = 0;
  double residual = 0.0;
  double scaling_check_rel_err = 0.0;  // step-2 re-solve vs scaled baseline
};

// Solves the 1.0g baseline, scales steps 2..8 by linearity, and verifies the
// scaling against one independent full re-solve at 2.5g.
CaseMetrics run_load_spectrum(const mesh::Mesh& mesh, const kb::MaterialRecord& material,
                              const LoadCase& baseline, const SolverOptions& opts = {});

CaseMetrics extract_results(const mesh::Mesh& mesh, const kb::MaterialRecord& material,
                            const FieldSolution& sol);

std::string metrics_to_json(const CaseMetrics& m, const std::vector<std::string>& fields = {});
CaseMetrics metrics_from_json(const std::string& text);

// --- CalculiX deck -----------------------------------------------------------

struct DeckOptions {
  spec::ElementOrder order = spec::ElementOrder::first_order_tet;
  std::string heading = "wingfea model";
  std::string material_name = "MAT";
};

// MPa-mm-tonne deck: *NODE, *ELEMENT, *NSET, *MATERIAL/*ELASTIC/*DENSITY,
// *SOLID SECTION, *BOUNDARY, one *STEP/*STATIC/*CLOAD block per load step.
// Byte-deterministic.
std::string write_inp(const mesh::Mesh& mesh, const kb::MaterialRecord& material,
                      const LoadCase& lc, const std::vector<spec::BcSpec>& bcs,
                      const std::vector<LoadStep>& steps, const DeckOptions& opts = {});

struct DeckSummary {
  std::size_t node_count = 0;
  std::size_t element_count = 0;
  std::string element_type;
  std::map<std::string, std::size_t> nset_sizes;
  std::size_t step_count = 0;
  std::vector<Vec3> nodes;  // deck units (mm)
};

DeckSummary parse_inp(const std::string& deck);

// --- optional external CalculiX runner --------------------------------------

struct FrdResult {
  std::vector<int> node_ids;
  std::vector<Vec3> displacement;                 // deck units (mm)
  std::vector<std::array<double, 6>> stress;      // MPa, node order as node_ids
};

FrdResult parse_frd(const std::string& frd_text);

// Runs the configured CalculiX binary on a written deck; returns the parsed
// last-step FRD result, or nullopt when no binary is configured.
std::optional<FrdResult> run_calculix(const std::string& ccx_binary,
                                      const std::string& deck_path);

}  // namespace wingfea::solve
