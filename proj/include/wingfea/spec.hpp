#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "wingfea/kb.hpp"

namespace wingfea::spec {

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct RangeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class LoadKind { force, pressure, acceleration_factor };
enum class Axis { X, Y, Z };

struct LoadSpec {
  LoadKind kind = LoadKind::force;
  double magnitude = 0.0;  // N, Pa or g (SI-normalized)
  Axis axis = Axis::X;
  int sign = +1;
  std::string location;    // canonical semantic-location token
};

struct BcSpec {
  std::string kind = "fixed";
  std::string location;
  std::vector<Axis> constrained_dofs;
};

enum class MeshDensity { ultra_fine, fine, medium, coarse };
enum class ElementOrder { first_order_tet, second_order_tet };

struct MeshSpec {
  MeshDensity density = MeshDensity::medium;
  ElementOrder element_type = ElementOrder::first_order_tet;
  std::vector<std::string> refinement_zones;
};

struct AnalysisDirective {
  std::string type = "static";
  std::string solver = "CalculiX";
};

enum class Goal { minimize, maximize };

struct Objective {
  Goal goal = Goal::minimize;
  std::string metric;  // canonical metric field name, e.g. "mass_kg"
};

enum class AnalysisMode { single, parametric, pareto };

struct DataAnalysisSpec {
  std::vector<Objective> objectives;
  std::vector<std::string> metrics;
  AnalysisMode mode = AnalysisMode::single;
};

struct SparSpec {
  int count = 2;
  double width = 1.5e-3;  // m
};

struct RibSpec {
  int count = 2;
  double thickness = 1.5e-3;  // m
};

struct GeometryParams {
  std::string naca_code = "4412";
  double chord = 0.2;            // m
  double span = 0.2;             // m
  double shell_thickness = 1.5e-3;
  SparSpec spar;
  RibSpec rib;
};

struct ParameterRange {
  std::string name;
  std::vector<double> values;  // SI-normalized; strictly increasing when numeric
  std::string unit;            // as written, for echoing
};

struct ConfigurationPoint {
  std::map<std::string, double> params;
  int index = 0;  // lexicographic rank in the Cartesian product
};

struct AnalysisSpec {
  kb::MaterialRecord material;
  std::vector<LoadSpec> loads;
  std::vector<BcSpec> boundary_conditions;
  MeshSpec mesh;
  AnalysisDirective analysis;
  DataAnalysisSpec data_analysis;
  GeometryParams geometry;
  std::vector<ParameterRange> sweep;
};

struct ValidationReport {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  bool ok() const { return errors.empty(); }
};

// --- unit handling -----------------------------------------------------------

// Kinds of physical quantity the parser knows how to normalize.
enum class Quantity { length, force, stress, density, dimensionless, acceleration };

// "0.5 kN" -> 500.0; bare numbers pass through as SI. UnitError on unknown unit,
// ParseError on malformed numbers.
double parse_quantity(const std::string& text, Quantity kind);
double unit_factor(const std::string& unit, Quantity kind);

// --- operations --------------------------------------------------------------

AnalysisSpec parse_spec(const std::string& document);
AnalysisSpec parse_spec_file(const std::string& path);

// Grammar: "<name> from A to B [unit] in S [unit] steps" or "<name> = v1, v2, ... [unit]".
ParameterRange parse_range_phrase(const std::string& phrase);

// Formats a range back into the phrase grammar (round-trip partner of the above).
std::string format_range_phrase(const ParameterRange& range);

std::vector<ConfigurationPoint> expand_parameter_space(
    const std::vector<ParameterRange>& ranges, std::size_t max_points = 100000);

ValidationReport validate_spec(const AnalysisSpec& spec);

// Deterministic canonical serialization (sorted keys, fixed layout); written
// alongside every run for provenance.
std::string canonical_spec_json(const AnalysisSpec& spec);

std::string axis_name(Axis a);
const char* density_name(MeshDensity d);

}  // namespace wingfea::spec
