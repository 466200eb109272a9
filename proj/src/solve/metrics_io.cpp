#include <json.hpp>

#include "wingfea/solver.hpp"

using nlohmann::json;

namespace wingfea::solve {

std::string metrics_to_json(const CaseMetrics& m, const std::vector<std::string>& fields) {
  auto wanted = [&](const std::string& f) {
    return fields.empty() || std::find(fields.begin(), fields.end(), f) != fields.end();
  };
  json j;
  j["case_index"] = m.case_index;
  j["params"] = m.params;
  j["converged"] = m.converged;
  if (wanted("mass_kg")) j["mass_kg"] = m.mass_kg;
  if (m.converged) {
    if (wanted("max_vm_stress_pa")) j["max_vm_stress_pa"] = m.max_vm_stress_pa;
    if (wanted("max_disp_m")) j["max_disp_m"] = m.max_disp_m;
    if (wanted("per_step_max_vm_pa") && !m.per_step_max_vm_pa.empty())
      j["per_step_max_vm_pa"] = m.per_step_max_vm_pa;
    j["iterations"] = m.iterations;
    j["residual"] = m.residual;
    j["scaling_check_rel_err"] = m.scaling_check_rel_err;
  }
  return j.dump();
}

CaseMetrics metrics_from_json(const std::string& text) {
  json j = json::parse(text);
  CaseMetrics m;
  m.case_index = j.value("case_index", 0);
  if (j.contains("params"))
    for (auto it = j["params"].begin(); it != j["params"].end(); ++it)
      m.params[it.key()] = it.value().get<double>();
  m.converged = j.value("converged", false);
  m.mass_kg = j.value("mass_kg", 0.0);
  m.max_vm_stress_pa = j.value("max_vm_stress_pa", 0.0);
  m.max_disp_m = j.value("max_disp_m", 0.0);
  if (j.contains("per_step_max_vm_pa"))
    m.per_step_max_vm_pa = j["per_step_max_vm_pa"].get<std::vector<double>>();
  m.iterations = j.value("iterations", 0);
  m.residual = j.value("residual", 0.0);
  m.scaling_check_rel_err = j.value("scaling_check_rel_err", 0.0);
  return m;
}

}  // namespace wingfea::solve
