#include "wingfea/spec.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "wingfea/common.hpp"

using nlohmann::json;

namespace wingfea::spec {

namespace {

Axis parse_axis(const std::string& s, int& sign) {
  sign = +1;
  std::string t = canonical_token(s);
  if (!s.empty() && s[0] == '-') sign = -1;
  if (t == "x") return Axis::X;
  if (t == "y") return Axis::Y;
  if (t == "z") return Axis::Z;
  throw SchemaError("direction must be one of X/Y/Z, got '" + s + "'");
}

double quantity_field(const json& j, Quantity kind) {
  if (j.is_number()) {
    double v = j.get<double>();
    if (!std::isfinite(v)) throw ParseError("non-finite number in spec");
    return v;  // bare numbers are SI
  }
  if (j.is_string()) return parse_quantity(j.get<std::string>(), kind);
  throw SchemaError("expected number or quantity string");
}

MeshDensity parse_density(const std::string& s) {
  std::string t = canonical_token(s);
  if (t == "ultra_fine") return MeshDensity::ultra_fine;
  if (t == "fine") return MeshDensity::fine;
  if (t == "medium") return MeshDensity::medium;
  if (t == "coarse") return MeshDensity::coarse;
  throw SchemaError("unknown mesh density '" + s + "'");
}

ElementOrder parse_element_type(const std::string& s) {
  std::string t = canonical_token(s);
  if (t == "c3d4" || t == "first_order_tet") return ElementOrder::first_order_tet;
  if (t == "c3d10" || t == "second_order_tet") return ElementOrder::second_order_tet;
  throw SchemaError("unknown element type '" + s + "'");
}

// Metric aliases the objective/metric lists may use.
std::string canonical_metric(const std::string& s) {
  std::string t = canonical_token(s);
  if (t == "stress" || t == "von_mises_stress" || t == "max_vm_stress_pa") return "max_vm_stress_pa";
  if (t == "weight" || t == "mass" || t == "mass_kg") return "mass_kg";
  if (t == "displacement" || t == "max_disp_m") return "max_disp_m";
  return t;
}

Objective parse_objective(const json& j) {
  Objective o;
  if (j.is_string()) {
    std::string t = canonical_token(j.get<std::string>());
    if (t.rfind("minimize_", 0) == 0) {
      o.goal = Goal::minimize;
      o.metric = canonical_metric(t.substr(9));
    } else if (t.rfind("maximize_", 0) == 0) {
      o.goal = Goal::maximize;
      o.metric = canonical_metric(t.substr(9));
    } else {
      throw SchemaError("objective '" + j.get<std::string>() + "' must start with minimize/maximize");
    }
    return o;
  }
  if (j.is_object()) {
    std::string dir = canonical_token(j.value("direction", "minimize"));
    o.goal = dir == "maximize" ? Goal::maximize : Goal::minimize;
    o.metric = canonical_metric(j.at("metric").get<std::string>());
    return o;
  }
  throw SchemaError("objective must be a string or object");
}

ParameterRange parse_range_object(const json& j) {
  if (j.is_string()) return parse_range_phrase(j.get<std::string>());
  if (!j.is_object()) throw SchemaError("sweep entries must be objects or phrase strings");
  if (j.contains("phrase")) return parse_range_phrase(j.at("phrase").get<std::string>());

  ParameterRange r;
  r.name = canonical_token(j.at("name").get<std::string>());
  r.unit = j.value("unit", "");
  double factor = 1.0;
  if (!r.unit.empty()) {
    // Sweep ranges in this schema are geometric lengths unless dimensionless.
    factor = unit_factor(r.unit, Quantity::length);
  }
  if (j.contains("values")) {
    for (const auto& v : j.at("values")) r.values.push_back(v.get<double>() * factor);
  } else {
    double from = j.at("from").get<double>();
    double to = j.at("to").get<double>();
    double step = j.at("step").get<double>();
    if (step <= 0.0) throw RangeError("range step must be positive");
    if (to < from) throw RangeError("range end below start");
    for (int k = 0;; ++k) {
      double v = from + k * step;
      if (v > to + 1e-9 * step) break;
      r.values.push_back(v * factor);
    }
  }
  if (r.values.empty()) throw RangeError("range '" + r.name + "' has no values");
  for (std::size_t i = 1; i < r.values.size(); ++i)
    if (r.values[i] <= r.values[i - 1]) throw RangeError("range values must be strictly increasing");
  return r;
}

const char* kKnownTopKeys[] = {"material", "loads",        "boundary_conditions",
                               "mesh",     "analysis",     "data_analysis",
                               "geometry", "sweep",        "name"};

}  // namespace

std::string axis_name(Axis a) {
  switch (a) {
    case Axis::X: return "X";
    case Axis::Y: return "Y";
    default: return "Z";
  }
}

const char* density_name(MeshDensity d) {
  switch (d) {
    case MeshDensity::ultra_fine: return "ultra_fine";
    case MeshDensity::fine: return "fine";
    case MeshDensity::medium: return "medium";
    default: return "coarse";
  }
}

AnalysisSpec parse_spec(const std::string& document) {
  json doc;
  try {
    doc = json::parse(document, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("spec document is not well-formed: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("spec document must be a JSON object");

  for (auto it = doc.begin(); it != doc.end(); ++it) {
    bool known = false;
    for (const char* k : kKnownTopKeys) known = known || it.key() == k;
    if (!known) std::cerr << "warning: ignoring unknown spec key '" << it.key() << "'\n";
  }

  AnalysisSpec s;

  if (!doc.contains("material")) throw SchemaError("missing required section 'material'");
  {
    const json& m = doc.at("material");
    s.material.name = m.value("name", "");
    if (m.contains("youngs_modulus"))
      s.material.youngs_modulus = quantity_field(m.at("youngs_modulus"), Quantity::stress);
    if (m.contains("poissons_ratio")) s.material.poissons_ratio = m.at("poissons_ratio").get<double>();
    if (m.contains("density")) s.material.density = quantity_field(m.at("density"), Quantity::density);
    if (m.contains("yield_strength"))
      s.material.yield_strength = quantity_field(m.at("yield_strength"), Quantity::stress);
    if (m.contains("fatigue_limit"))
      s.material.fatigue_limit = quantity_field(m.at("fatigue_limit"), Quantity::stress);
    if (m.contains("fatigue_limit_cycles"))
      s.material.fatigue_limit_cycles = m.at("fatigue_limit_cycles").get<double>();
  }

  for (const auto& l : doc.value("loads", json::array())) {
    LoadSpec ls;
    std::string kind = canonical_token(l.value("type", "force"));
    Quantity q = Quantity::force;
    if (kind == "force") {
      ls.kind = LoadKind::force;
    } else if (kind == "pressure") {
      ls.kind = LoadKind::pressure;
      q = Quantity::stress;
    } else if (kind == "acceleration_factor" || kind == "acceleration") {
      ls.kind = LoadKind::acceleration_factor;
      q = Quantity::acceleration;
    } else {
      throw SchemaError("unknown load type '" + kind + "'");
    }
    ls.magnitude = quantity_field(l.at("magnitude"), q);
    if (!std::isfinite(ls.magnitude)) throw ParseError("load magnitude must be finite");
    ls.axis = parse_axis(l.value("direction", "Z"), ls.sign);
    ls.location = canonical_token(l.at("location").get<std::string>());
    s.loads.push_back(ls);
  }

  for (const auto& b : doc.value("boundary_conditions", json::array())) {
    BcSpec bc;
    bc.kind = canonical_token(b.value("type", "fixed"));
    if (bc.kind != "fixed") throw SchemaError("unsupported BC type '" + bc.kind + "'");
    bc.location = canonical_token(b.at("location").get<std::string>());
    for (const auto& c : b.value("constraints", json::array({"X", "Y", "Z"}))) {
      int sign = 0;
      bc.constrained_dofs.push_back(parse_axis(c.get<std::string>(), sign));
    }
    if (bc.constrained_dofs.empty()) throw SchemaError("BC with empty constraint list");
    s.boundary_conditions.push_back(bc);
  }

  if (doc.contains("mesh")) {
    const json& m = doc.at("mesh");
    if (m.contains("density")) s.mesh.density = parse_density(m.at("density").get<std::string>());
    if (m.contains("element_type"))
      s.mesh.element_type = parse_element_type(m.at("element_type").get<std::string>());
    for (const auto& z : m.value("refinement_zones", json::array()))
      s.mesh.refinement_zones.push_back(canonical_token(z.get<std::string>()));
  }

  if (doc.contains("analysis")) {
    s.analysis.type = canonical_token(doc.at("analysis").value("type", "static"));
    s.analysis.solver = doc.at("analysis").value("solver", "CalculiX");
  }
  if (s.analysis.type != "static")
    throw SchemaError("analysis.type must be 'static', got '" + s.analysis.type + "'");

  if (doc.contains("data_analysis")) {
    const json& d = doc.at("data_analysis");
    for (const auto& o : d.value("objectives", json::array()))
      s.data_analysis.objectives.push_back(parse_objective(o));
    for (const auto& m : d.value("metrics", json::array()))
      s.data_analysis.metrics.push_back(canonical_metric(m.get<std::string>()));
    std::string mode = canonical_token(d.value("optimization", d.value("mode", "single")));
    if (mode == "pareto" || mode == "pareto_front")
      s.data_analysis.mode = AnalysisMode::pareto;
    else if (mode == "parametric")
      s.data_analysis.mode = AnalysisMode::parametric;
    else if (mode == "single")
      s.data_analysis.mode = AnalysisMode::single;
    else
      throw SchemaError("unknown optimization mode '" + mode + "'");
  }

  if (doc.contains("geometry")) {
    const json& g = doc.at("geometry");
    s.geometry.naca_code = g.value("naca_code", s.geometry.naca_code);
    if (g.contains("chord")) s.geometry.chord = quantity_field(g.at("chord"), Quantity::length);
    if (g.contains("span")) s.geometry.span = quantity_field(g.at("span"), Quantity::length);
    if (g.contains("shell_thickness"))
      s.geometry.shell_thickness = quantity_field(g.at("shell_thickness"), Quantity::length);
    if (g.contains("spar")) {
      const json& sp = g.at("spar");
      s.geometry.spar.count = sp.value("count", s.geometry.spar.count);
      if (sp.contains("width")) s.geometry.spar.width = quantity_field(sp.at("width"), Quantity::length);
    }
    if (g.contains("rib")) {
      const json& rb = g.at("rib");
      s.geometry.rib.count = rb.value("count", s.geometry.rib.count);
      if (rb.contains("thickness"))
        s.geometry.rib.thickness = quantity_field(rb.at("thickness"), Quantity::length);
    }
  }

  for (const auto& r : doc.value("sweep", json::array())) s.sweep.push_back(parse_range_object(r));

  return s;
}

AnalysisSpec parse_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open spec file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_spec(ss.str());
}

ParameterRange parse_range_phrase(const std::string& phrase) {
  static const std::regex from_to(
      R"(^\s*(.+?)\s+from\s+([-+0-9.eE]+)\s*([a-zA-Z]*)\s+to\s+([-+0-9.eE]+)\s*([a-zA-Z]*)\s+in\s+([-+0-9.eE]+)\s*([a-zA-Z]*)\s+steps?\s*$)");
  static const std::regex value_list(R"(^\s*(.+?)\s*=\s*([-+0-9.eE,\s]+?)\s*([a-zA-Z]*)\s*$)");

  std::smatch m;
  ParameterRange r;
  if (std::regex_match(phrase, m, from_to)) {
    r.name = canonical_token(m[1].str());
    r.unit = m[5].str().empty() ? m[3].str() : m[5].str();
    double factor = r.unit.empty() ? 1.0 : unit_factor(r.unit, Quantity::length);
    double a = std::stod(m[2].str());
    double b = std::stod(m[4].str());
    double step = std::stod(m[6].str());
    if (step <= 0.0) throw RangeError("step must be positive in '" + phrase + "'");
    if (b < a) throw RangeError("end below start in '" + phrase + "'");
    for (int k = 0;; ++k) {
      double v = a + k * step;
      if (v > b + 1e-9 * step) break;  // epsilon absorbs accumulated endpoint loss
      r.values.push_back(v * factor);
    }
    return r;
  }
  if (std::regex_match(phrase, m, value_list)) {
    r.name = canonical_token(m[1].str());
    r.unit = m[3].str();
    double factor = r.unit.empty() ? 1.0 : unit_factor(r.unit, Quantity::length);
    std::stringstream vs(m[2].str());
    std::string item;
    while (std::getline(vs, item, ',')) {
      if (item.find_first_not_of(" \t") == std::string::npos) continue;
      r.values.push_back(std::stod(item) * factor);
    }
    if (r.values.empty()) throw ParseError("no values in '" + phrase + "'");
    return r;
  }
  throw ParseError("range phrase '" + phrase + "' does not match the grammar");
}

std::string format_range_phrase(const ParameterRange& range) {
  std::ostringstream os;
  double factor = range.unit.empty() ? 1.0 : unit_factor(range.unit, Quantity::length);
  os.precision(12);
  std::string name = range.name;
  std::replace(name.begin(), name.end(), '_', ' ');
  os << name << " = ";
  for (std::size_t i = 0; i < range.values.size(); ++i) {
    if (i) os << ", ";
    os << range.values[i] / factor;
  }
  if (!range.unit.empty()) os << " " << range.unit;
  return os.str();
}

std::vector<ConfigurationPoint> expand_parameter_space(const std::vector<ParameterRange>& ranges,
                                                       std::size_t max_points) {
  if (ranges.empty()) throw RangeError("no parameter ranges to expand");
  for (std::size_t i = 0; i < ranges.size(); ++i)
    for (std::size_t j = i + 1; j < ranges.size(); ++j)
      if (ranges[i].name == ranges[j].name)
        throw RangeError("duplicate parameter name '" + ranges[i].name + "'");

  std::size_t total = 1;
  for (const auto& r : ranges) {
    if (r.values.empty()) throw RangeError("empty range '" + r.name + "'");
    if (total > max_points / r.values.size() + 1) total = max_points + 1;
    else total *= r.values.size();
  }
  if (total > max_points)
    throw CapacityError("parameter space exceeds the configured maximum of " +
                        std::to_string(max_points) + " points");

  std::vector<ConfigurationPoint> out;
  out.reserve(total);
  std::vector<std::size_t> idx(ranges.size(), 0);
  for (std::size_t rank = 0; rank < total; ++rank) {
    ConfigurationPoint p;
    p.index = static_cast<int>(rank);
    for (std::size_t i = 0; i < ranges.size(); ++i) p.params[ranges[i].name] = ranges[i].values[idx[i]];
    out.push_back(std::move(p));
    // lexicographic: last range varies fastest
    for (std::size_t i = ranges.size(); i-- > 0;) {
      if (++idx[i] < ranges[i].values.size()) break;
      idx[i] = 0;
    }
  }
  return out;
}

ValidationReport validate_spec(const AnalysisSpec& s) {
  ValidationReport rep;

  if (s.material.name.empty() && s.material.youngs_modulus <= 0.0)
    rep.errors.push_back("material has neither a name nor properties");
  if (s.material.youngs_modulus < 0.0) rep.errors.push_back("youngs_modulus must be positive");
  if (s.material.youngs_modulus == 0.0 && !s.material.name.empty())
    rep.warnings.push_back("material properties unresolved; knowledge base lookup required");
  if (s.material.youngs_modulus > 0.0) {
    if (s.material.poissons_ratio <= 0.0 || s.material.poissons_ratio >= 0.5)
      rep.errors.push_back("poissons_ratio must lie in (0, 0.5)");
    if (s.material.density <= 0.0) rep.errors.push_back("density must be positive");
    if (s.material.yield_strength <= 0.0)
      rep.warnings.push_back("yield_strength is zero: safety factor undefined");
  }

  if (s.boundary_conditions.empty()) {
    rep.errors.push_back("unconstrained model: no boundary conditions");
  } else {
    std::size_t total_dofs = 0;
    for (const auto& b : s.boundary_conditions) total_dofs += b.constrained_dofs.size();
    if (total_dofs < 3)
      rep.errors.push_back("fewer than 3 constrained DOFs: rigid-body motion possible");
  }

  if (s.loads.empty()) rep.warnings.push_back("no loads specified");
  for (const auto& l : s.loads)
    if (!std::isfinite(l.magnitude)) rep.errors.push_back("non-finite load magnitude");

  if (s.data_analysis.mode == AnalysisMode::pareto && s.data_analysis.objectives.size() < 2)
    rep.errors.push_back("pareto mode requires at least 2 objectives");

  if (s.geometry.chord <= 0.0 || s.geometry.span <= 0.0)
    rep.errors.push_back("geometry dimensions must be positive");
  if (s.geometry.spar.count < 2 || s.geometry.spar.count > 3 || s.geometry.rib.count < 2 ||
      s.geometry.rib.count > 3)
    rep.errors.push_back("spar/rib counts must be 2 or 3");

  return rep;
}

std::string canonical_spec_json(const AnalysisSpec& s) {
  json j;  // nlohmann::json orders keys lexicographically: deterministic dump
  j["material"] = {{"name", s.material.name},
                   {"youngs_modulus", s.material.youngs_modulus},
                   {"poissons_ratio", s.material.poissons_ratio},
                   {"density", s.material.density},
                   {"yield_strength", s.material.yield_strength}};
  if (s.material.fatigue_limit) j["material"]["fatigue_limit"] = *s.material.fatigue_limit;
  if (s.material.fatigue_limit_cycles)
    j["material"]["fatigue_limit_cycles"] = *s.material.fatigue_limit_cycles;

  j["loads"] = json::array();
  for (const auto& l : s.loads) {
    const char* kind = l.kind == LoadKind::force ? "force"
                       : l.kind == LoadKind::pressure ? "pressure"
                                                      : "acceleration_factor";
    j["loads"].push_back({{"type", kind},
                          {"magnitude", l.magnitude},
                          {"direction", (l.sign < 0 ? "-" : "") + axis_name(l.axis)},
                          {"location", l.location}});
  }

  j["boundary_conditions"] = json::array();
  for (const auto& b : s.boundary_conditions) {
    json dofs = json::array();
    for (Axis a : b.constrained_dofs) dofs.push_back(axis_name(a));
    j["boundary_conditions"].push_back(
        {{"type", b.kind}, {"location", b.location}, {"constraints", dofs}});
  }

  j["mesh"] = {{"density", density_name(s.mesh.density)},
               {"element_type", s.mesh.element_type == ElementOrder::first_order_tet
                                    ? "first_order_tet"
                                    : "second_order_tet"},
               {"refinement_zones", s.mesh.refinement_zones}};
  j["analysis"] = {{"type", s.analysis.type}, {"solver", s.analysis.solver}};

  json objectives = json::array();
  for (const auto& o : s.data_analysis.objectives)
    objectives.push_back(
        {{"direction", o.goal == Goal::minimize ? "minimize" : "maximize"}, {"metric", o.metric}});
  const char* mode = s.data_analysis.mode == AnalysisMode::pareto      ? "pareto"
                     : s.data_analysis.mode == AnalysisMode::parametric ? "parametric"
                                                                        : "single";
  j["data_analysis"] = {
      {"objectives", objectives}, {"metrics", s.data_analysis.metrics}, {"mode", mode}};

  j["geometry"] = {{"naca_code", s.geometry.naca_code},
                   {"chord", s.geometry.chord},
                   {"span", s.geometry.span},
                   {"shell_thickness", s.geometry.shell_thickness},
                   {"spar", {{"count", s.geometry.spar.count}, {"width", s.geometry.spar.width}}},
                   {"rib", {{"count", s.geometry.rib.count}, {"thickness", s.geometry.rib.thickness}}}};

  j["sweep"] = json::array();
  for (const auto& r : s.sweep)
    j["sweep"].push_back({{"name", r.name}, {"values", r.values}, {"unit", r.unit}});

  return j.dump(2) + "\n";
}

}  // namespace wingfea::spec
