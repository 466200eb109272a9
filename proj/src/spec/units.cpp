#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>

#include "wingfea/common.hpp"
#include "wingfea/spec.hpp"

namespace wingfea::spec {

namespace {

const std::map<std::string, double>& table_for(Quantity kind) {
  static const std::map<std::string, double> length = {
      {"m", 1.0}, {"mm", 1e-3}, {"cm", 1e-2}, {"in", 0.0254}};
  static const std::map<std::string, double> force = {{"n", 1.0}, {"kn", 1e3}};
  static const std::map<std::string, double> stress = {
      {"pa", 1.0}, {"kpa", 1e3}, {"mpa", 1e6}, {"gpa", 1e9}};
  static const std::map<std::string, double> density = {
      {"kg/m3", 1.0}, {"kg/m^3", 1.0}, {"tonne/mm3", 1e12}, {"tonne/mm^3", 1e12},
      {"t/mm3", 1e12}, {"g/cm3", 1e3}, {"g/cm^3", 1e3}};
  static const std::map<std::string, double> accel = {{"g", 1.0}};
  static const std::map<std::string, double> none = {};
  switch (kind) {
    case Quantity::length: return length;
    case Quantity::force: return force;
    case Quantity::stress: return stress;
    case Quantity::density: return density;
    case Quantity::acceleration: return accel;
    default: return none;
  }
}

std::string normalize_unit(const std::string& u) {
  std::string out;
  for (char c : u) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

double unit_factor(const std::string& unit, Quantity kind) {
  std::string u = normalize_unit(unit);
  if (u.empty()) return 1.0;
  if (kind == Quantity::dimensionless)
    throw UnitError("unit '" + unit + "' given for a dimensionless quantity");
  const auto& table = table_for(kind);
  auto it = table.find(u);
  if (it == table.end()) throw UnitError("unrecognized unit '" + unit + "'");
  return it->second;
}

double parse_quantity(const std::string& text, Quantity kind) {
  const char* begin = text.c_str();
  char* end = nullptr;
  double value = std::strtod(begin, &end);
  if (end == begin) throw ParseError("no number in quantity '" + text + "'");
  if (!std::isfinite(value)) throw ParseError("non-finite quantity '" + text + "'");
  std::string unit(end);
  // trim
  while (!unit.empty() && std::isspace(static_cast<unsigned char>(unit.front()))) unit.erase(0, 1);
  while (!unit.empty() && std::isspace(static_cast<unsigned char>(unit.back()))) unit.pop_back();
  return value * unit_factor(unit, kind);
}

}  // namespace wingfea::spec
