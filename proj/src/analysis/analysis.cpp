#include "wingfea/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

using nlohmann::json;

namespace wingfea::analysis {

namespace {

double metric_value(const solve::CaseMetrics& m, const std::string& name) {
  if (name == "mass_kg") return m.mass_kg;
  if (name == "max_vm_stress_pa") return m.max_vm_stress_pa;
  if (name == "max_disp_m") return m.max_disp_m;
  auto it = m.params.find(name);
  if (it != m.params.end()) return it->second;
  throw NoDataError("unknown metric '" + name + "'");
}

// a dominates b: <= everywhere, < somewhere (minimization convention).
bool dominates(const std::vector<double>& a, const std::vector<double>& b) {
  bool strict = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) return false;
    if (a[i] < b[i]) strict = true;
  }
  return strict;
}

}  // namespace

std::vector<ParetoPoint> pareto_front_of(const std::vector<std::vector<double>>& points) {
  std::vector<ParetoPoint> all(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    all[i].case_index = static_cast<int>(i);
    all[i].objectives = points[i];
  }
  if (points.empty()) return {};

  // Sort by the first objective, then the rest; a sweep keeping an incumbent
  // front list only needs to test against points that can still dominate.
  std::vector<int> order(points.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (points[a] != points[b]) return points[a] < points[b];
    return a < b;
  });

  std::vector<int> front;
  for (int idx : order) {
    bool dom = false;
    for (int f : front)
      if (dominates(points[f], points[idx])) {
        dom = true;
        break;
      }
    all[idx].dominated = dom;
    if (!dom) front.push_back(idx);
  }

  std::vector<ParetoPoint> out;
  for (int f : front) out.push_back(all[f]);
  std::sort(out.begin(), out.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
    if (a.objectives != b.objectives) return a.objectives < b.objectives;
    return a.case_index < b.case_index;
  });
  return out;
}

std::vector<ParetoPoint> pareto_front(const orch::SweepDataset& dataset,
                                      const std::vector<spec::Objective>& objectives) {
  if (objectives.size() < 2)
    throw std::invalid_argument("pareto front needs at least two objectives");

  std::vector<const orch::CaseOutcome*> cases;
  for (const auto& o : dataset.outcomes)
    if (o.status != orch::CaseStatus::failed && o.metrics && o.metrics->converged)
      cases.push_back(&o);
  if (cases.empty()) throw NoDataError("no converged cases in the dataset");

  std::vector<std::vector<double>> normalized(cases.size());
  for (std::size_t i = 0; i < cases.size(); ++i)
    for (const auto& obj : objectives) {
      double v = metric_value(*cases[i]->metrics, obj.metric);
      normalized[i].push_back(obj.goal == spec::Goal::maximize ? -v : v);
    }

  std::vector<ParetoPoint> raw = pareto_front_of(normalized);
  std::vector<ParetoPoint> out;
  for (auto& p : raw) {
    ParetoPoint q;
    q.case_index = cases[p.case_index]->config.index;
    for (std::size_t k = 0; k < objectives.size(); ++k) {
      double v = p.objectives[k];
      q.objectives.push_back(objectives[k].goal == spec::Goal::maximize ? -v : v);
    }
    out.push_back(std::move(q));
  }
  return out;
}

double pearson_r(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("pearson_r needs two equal series of length >= 2");
  double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0)
    throw std::domain_error("zero variance: correlation undefined");
  return sab / std::sqrt(saa * sbb);
}

double t_test_p_value(double r, std::size_t n) {
  if (n < 3) throw std::domain_error("p-value needs n >= 3");
  double df = static_cast<double>(n - 2);
  double denom = 1.0 - r * r;
  if (denom <= 0.0) return 0.0;  // |r| == 1: exact linear dependence
  double t = r * std::sqrt(df / denom);
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(dist, -std::abs(t));
}

std::vector<CorrelationEntry> sensitivity(const orch::SweepDataset& dataset,
                                          const std::vector<std::string>& parameters,
                                          const std::vector<std::string>& metrics) {
  std::vector<const solve::CaseMetrics*> cases;
  for (const auto& o : dataset.outcomes)
    if (o.status != orch::CaseStatus::failed && o.metrics && o.metrics->converged)
      cases.push_back(&*o.metrics);
  if (cases.size() < 3) throw NoDataError("sensitivity needs at least 3 converged cases");

  std::vector<CorrelationEntry> table;
  for (const auto& param : parameters) {
    std::vector<double> xs;
    for (const auto* c : cases) {
      auto it = c->params.find(param);
      xs.push_back(it != c->params.end() ? it->second : 0.0);
    }
    for (const auto& metric : metrics) {
      CorrelationEntry e;
      e.parameter = param;
      e.metric = metric;
      e.n = cases.size();
      std::vector<double> ys;
      for (const auto* c : cases) ys.push_back(metric_value(*c, metric));
      try {
        e.r = pearson_r(xs, ys);
        e.p_value = t_test_p_value(e.r, e.n);
      } catch (const std::domain_error&) {
        e.degenerate = true;
        e.r = 0.0;
        e.p_value = 1.0;
      }
      table.push_back(std::move(e));
    }
  }
  return table;
}

double SnCurve::life(double amplitude) const {
  if (amplitude < fatigue_limit) return std::numeric_limits<double>::infinity();
  // Log-log (Basquin-type) line through the two anchors.
  double slope = (std::log10(limit_cycles) - std::log10(low_cycle_count)) /
                 (std::log10(fatigue_limit) - std::log10(low_cycle_amplitude));
  double logn = std::log10(low_cycle_count) +
                slope * (std::log10(amplitude) - std::log10(low_cycle_amplitude));
  return std::pow(10.0, logn);
}

const char* life_class_name(LifeClass c) {
  switch (c) {
    case LifeClass::infinite: return "infinite";
    case LifeClass::finite: return "finite";
    default: return "redesign";
  }
}

FatigueAssessment fatigue_life(const std::vector<double>& per_step_max_vm, const SnCurve& sn) {
  if (per_step_max_vm.empty())
    throw NoDataError("fatigue assessment needs at least one step stress");
  double smax = *std::max_element(per_step_max_vm.begin(), per_step_max_vm.end());

  FatigueAssessment fa;
  fa.stress_amplitude = smax / 2.0;  // pulsating cycle, R = 0

  if (fa.stress_amplitude < sn.fatigue_limit) {
    fa.life_class = LifeClass::infinite;
    fa.predicted_cycles = 1e8;  // reported as "at least 1e8"
  } else {
    fa.life_class = fa.stress_amplitude > 300e6 ? LifeClass::redesign : LifeClass::finite;
    fa.predicted_cycles = sn.life(fa.stress_amplitude);
  }

  // Miner damage: one mission = one pass through the GAG steps, n_i = 1 each.
  fa.miner_damage = 0.0;
  for (std::size_t s = solve::kGagFirstStep; s < per_step_max_vm.size(); ++s) {
    double sa = per_step_max_vm[s] / 2.0;
    if (sa < sn.fatigue_limit) continue;
    fa.miner_damage += 1.0 / sn.life(sa);
  }
  return fa;
}

double safety_factor(double max_stress, const kb::MaterialRecord& material) {
  if (max_stress <= 0.0) throw std::invalid_argument("safety factor needs a positive stress");
  return material.yield_strength / max_stress;
}

DesignReportEntry classify_design(int case_index, const FatigueAssessment& assessment,
                                  double sf) {
  return {case_index, assessment, sf};
}

AnalysisReport analyze(const orch::SweepDataset& dataset,
                       const std::vector<spec::Objective>& objectives, double yield_strength,
                       const SnCurve& sn) {
  AnalysisReport rep;
  rep.objectives = objectives;
  rep.front = pareto_front(dataset, objectives);

  std::vector<std::string> params;
  for (const auto& r : dataset.space) params.push_back(r.name);
  if (params.empty() && !dataset.outcomes.empty() && dataset.outcomes[0].metrics)
    for (const auto& [k, v] : dataset.outcomes[0].metrics->params) params.push_back(k);
  std::vector<std::string> metrics = {"max_vm_stress_pa", "mass_kg", "max_disp_m"};
  if (!params.empty()) {
    try {
      rep.correlations = sensitivity(dataset, params, metrics);
    } catch (const NoDataError&) {
      // too few cases: leave the table empty
    }
  }

  for (const auto& o : dataset.outcomes) {
    if (o.status == orch::CaseStatus::failed || !o.metrics || !o.metrics->converged) continue;
    const auto& m = *o.metrics;
    FatigueAssessment fa = fatigue_life(
        m.per_step_max_vm_pa.empty() ? std::vector<double>{m.max_vm_stress_pa}
                                     : m.per_step_max_vm_pa,
        sn);
    double sf = 0.0;
    if (yield_strength > 0.0 && m.max_vm_stress_pa > 0.0)
      sf = yield_strength / m.max_vm_stress_pa;
    rep.designs.push_back(classify_design(o.config.index, fa, sf));
    switch (fa.life_class) {
      case LifeClass::infinite: rep.bands.infinite++; break;
      case LifeClass::finite: rep.bands.finite++; break;
      default: rep.bands.redesign++; break;
    }
  }
  std::size_t total = rep.bands.total();
  if (total > 0) {
    rep.bands.pct_infinite = 100.0 * rep.bands.infinite / total;
    rep.bands.pct_finite = 100.0 * rep.bands.finite / total;
    rep.bands.pct_redesign = 100.0 * rep.bands.redesign / total;
  }
  return rep;
}

std::string report_to_json(const AnalysisReport& rep) {
  json j;
  j["objectives"] = json::array();
  for (const auto& o : rep.objectives)
    j["objectives"].push_back(
        {{"direction", o.goal == spec::Goal::minimize ? "minimize" : "maximize"},
         {"metric", o.metric}});
  j["front"] = json::array();
  for (const auto& p : rep.front)
    j["front"].push_back({{"case_index", p.case_index}, {"objectives", p.objectives}});
  j["sensitivity"] = json::array();
  for (const auto& c : rep.correlations)
    j["sensitivity"].push_back({{"parameter", c.parameter},
                                {"metric", c.metric},
                                {"r", c.degenerate ? json() : json(c.r)},
                                {"p_value", c.degenerate ? json() : json(c.p_value)},
                                {"n", c.n},
                                {"degenerate", c.degenerate}});
  j["fatigue"] = json::array();
  for (const auto& d : rep.designs)
    j["fatigue"].push_back({{"case_index", d.case_index},
                            {"stress_amplitude_pa", d.fatigue.stress_amplitude},
                            {"life_class", life_class_name(d.fatigue.life_class)},
                            {"predicted_cycles_min", d.fatigue.predicted_cycles},
                            {"miner_damage_per_mission", d.fatigue.miner_damage},
                            {"safety_factor", d.safety}});
  j["bands"] = {
      {"infinite", {{"count", rep.bands.infinite}, {"pct", rep.bands.pct_infinite}}},
      {"finite", {{"count", rep.bands.finite}, {"pct", rep.bands.pct_finite}}},
      {"redesign", {{"count", rep.bands.redesign}, {"pct", rep.bands.pct_redesign}}}};
  return j.dump(2) + "\n";
}

std::string front_csv(const AnalysisReport& rep) {
  std::ostringstream os;
  os << "case_index";
  for (const auto& o : rep.objectives) os << "," << o.metric;
  os << "\n";
  os.precision(12);
  for (const auto& p : rep.front) {
    os << p.case_index;
    for (double v : p.objectives) os << "," << v;
    os << "\n";
  }
  return os.str();
}

std::string correlations_csv(const AnalysisReport& rep) {
  std::ostringstream os;
  os << "parameter,metric,r,p_value,n,degenerate\n";
  os.precision(12);
  for (const auto& c : rep.correlations) {
    os << c.parameter << "," << c.metric << ",";
    if (c.degenerate) os << ",";
    else os << c.r << "," << c.p_value;
    os << "," << c.n << "," << (c.degenerate ? "true" : "false") << "\n";
  }
  return os.str();
}

}  // namespace wingfea::analysis
