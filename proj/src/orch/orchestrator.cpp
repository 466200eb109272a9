#include "wingfea/orchestrator.hpp"

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <queue>
#include <thread>

#include <json.hpp>

#include "wingfea/geometry.hpp"
#include "wingfea/mesher.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace wingfea::orch {

const char* status_name(CaseStatus s) {
  switch (s) {
    case CaseStatus::ok: return "ok";
    case CaseStatus::retried_ok: return "retried_ok";
    default: return "failed";
  }
}

ResourceEnvelope detect_resources(std::uint64_t mem_per_case_hint) {
  ResourceEnvelope env;
  env.cores = std::max(1u, std::thread::hardware_concurrency());
  env.mem_available = 1ull << 31;  // conservative fallback: 2 GiB
  std::ifstream mi("/proc/meminfo");
  std::string key;
  std::uint64_t kb = 0;
  std::string unit;
  while (mi >> key >> kb >> unit) {
    if (key == "MemAvailable:") {
      env.mem_available = kb * 1024;
      break;
    }
  }
  env.mem_per_case = mem_per_case_hint ? mem_per_case_hint : (1ull << 29);  // 512 MiB default
  return env;
}

int plan_batch(const ResourceEnvelope& env) {
  if (env.mem_per_case == 0 || env.cores <= 0 || env.batch_max <= 0)
    throw std::invalid_argument("resource envelope fields must be positive");
  std::uint64_t by_mem = env.mem_available / env.mem_per_case;
  if (by_mem == 0)
    throw InsufficientMemoryError("one case needs " + std::to_string(env.mem_per_case) +
                                  " bytes but only " + std::to_string(env.mem_available) +
                                  " are available");
  std::uint64_t b = std::min<std::uint64_t>({by_mem, static_cast<std::uint64_t>(env.cores),
                                             static_cast<std::uint64_t>(env.batch_max)});
  return static_cast<int>(b);
}

RetryDecision retry_policy(int attempt, const std::string& error_kind, int max_retries) {
  RetryDecision d;
  if (attempt >= max_retries) return d;
  if (error_kind == "ResolutionError" || error_kind == "MeshQualityError") {
    d.retry = true;
    d.upgrade_mesh_level = true;
  } else if (error_kind == "NonConvergenceError") {
    d.retry = true;
    d.loosen_tolerance = true;
  }
  return d;
}

spec::GeometryParams apply_config(const spec::GeometryParams& base,
                                  const spec::ConfigurationPoint& config) {
  spec::GeometryParams g = base;
  for (const auto& [name, value] : config.params) {
    if (name == "shell_thickness") g.shell_thickness = value;
    else if (name == "spar_width") g.spar.width = value;
    else if (name == "rib_thickness") g.rib.thickness = value;
    else if (name == "spar_count") g.spar.count = static_cast<int>(std::lround(value));
    else if (name == "rib_count") g.rib.count = static_cast<int>(std::lround(value));
    else if (name == "chord") g.chord = value;
    else if (name == "span") g.span = value;
    // unrecognized parameters are carried in metrics but do not alter geometry
  }
  return g;
}

namespace {

geom::WingParams wing_params(const spec::GeometryParams& g) {
  geom::WingParams w;
  w.naca_code = g.naca_code;
  w.chord = g.chord;
  w.span = g.span;
  w.shell_thickness = g.shell_thickness;
  w.spar_count = g.spar.count;
  w.spar_width = g.spar.width;
  w.rib_count = g.rib.count;
  w.rib_thickness = g.rib.thickness;
  return w;
}

spec::MeshDensity upgraded(spec::MeshDensity d) {
  switch (d) {
    case spec::MeshDensity::coarse: return spec::MeshDensity::medium;
    case spec::MeshDensity::medium: return spec::MeshDensity::fine;
    default: return spec::MeshDensity::ultra_fine;
  }
}

std::string error_kind_of(const std::exception& e) {
  if (dynamic_cast<const mesh::ResolutionError*>(&e)) return "ResolutionError";
  if (dynamic_cast<const mesh::EmptyMeshError*>(&e)) return "EmptyMeshError";
  if (dynamic_cast<const solve::NonConvergenceError*>(&e)) return "NonConvergenceError";
  if (dynamic_cast<const solve::SingularSystemError*>(&e)) return "SingularSystemError";
  if (dynamic_cast<const solve::EmptySetError*>(&e)) return "EmptySetError";
  if (dynamic_cast<const geom::GeometryError*>(&e)) return "GeometryError";
  if (dynamic_cast<const geom::UnknownLocationError*>(&e)) return "UnknownLocationError";
  if (dynamic_cast<const spec::SchemaError*>(&e)) return "SchemaError";
  return "Error";
}

solve::CaseMetrics solve_one(const spec::AnalysisSpec& base,
                             const spec::ConfigurationPoint& config,
                             spec::MeshDensity density, const solve::SolverOptions& sopts,
                             const SweepOptions& opts, const std::string& case_dir) {
  spec::GeometryParams g = apply_config(base.geometry, config);
  geom::WingModel model(wing_params(g));

  spec::MeshSpec mspec = base.mesh;
  mspec.density = density;
  mesh::Mesh m = mesh::generate_mesh(model, mspec);

  mesh::MeshQualityReport q = mesh::validate_mesh(m);
  if (!q.valid()) throw mesh::ResolutionError("mesh failed validity checks");

  kb::MaterialRecord mat = base.material;
  solve::LoadCase lc = solve::build_load_case(m, mat, base.loads, base.boundary_conditions);
  if (base.loads.empty()) solve::add_tip_gravity_load(m, mat, opts.load_gain, lc);

  if (!case_dir.empty()) {
    std::error_code ec;
    fs::create_directories(case_dir, ec);
    std::ofstream deck(case_dir + "/model.inp", std::ios::binary);
    deck << solve::write_inp(m, mat, lc, base.boundary_conditions,
                             solve::standard_load_spectrum(),
                             {base.mesh.element_type, "wingfea case", "MAT"});
  }

  solve::CaseMetrics cm = solve::run_load_spectrum(m, mat, lc, sopts);
  cm.case_index = config.index;
  cm.params = config.params;

  if (!case_dir.empty()) {
    std::ofstream mf(case_dir + "/metrics.json", std::ios::binary);
    mf << solve::metrics_to_json(cm) << "\n";
  }
  return cm;
}

}  // namespace

CaseOutcome run_case(const spec::AnalysisSpec& base, const spec::ConfigurationPoint& config,
                     const SweepOptions& opts) {
  CaseOutcome outcome;
  outcome.config = config;
  auto t0 = std::chrono::steady_clock::now();

  std::string case_dir =
      opts.work_dir.empty() ? "" : opts.work_dir + "/case_" + std::to_string(config.index);

  spec::MeshDensity density = base.mesh.density;
  solve::SolverOptions sopts = opts.solver;
  int attempt = 0;
  while (true) {
    ++attempt;
    try {
      outcome.metrics = solve_one(base, config, density, sopts, opts, case_dir);
      outcome.status = attempt > 1 ? CaseStatus::retried_ok : CaseStatus::ok;
      outcome.failure_reason.clear();
      break;
    } catch (const std::exception& e) {
      std::string kind = error_kind_of(e);
      outcome.failure_reason = kind + ": " + e.what();
      RetryDecision d = retry_policy(attempt, kind, opts.max_retries);
      if (!d.retry) {
        outcome.status = CaseStatus::failed;
        break;
      }
      if (d.upgrade_mesh_level) density = upgraded(density);
      if (d.loosen_tolerance) sopts.tolerance *= 10.0;
    }
  }
  outcome.attempts = attempt;
  outcome.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return outcome;
}

SweepDataset run_sweep(const spec::AnalysisSpec& base,
                       const std::vector<spec::ConfigurationPoint>& configs,
                       const ResourceEnvelope& env, const SweepOptions& opts) {
  if (configs.empty()) throw std::invalid_argument("no configurations to run");
  int batch = plan_batch(env);

  std::vector<CaseOutcome> outcomes(configs.size());
  std::vector<char> done(configs.size(), 0);

  std::mutex mu;
  std::condition_variable cv;
  std::size_t next = 0;
  bool stopped = false;

  auto worker = [&]() {
    while (true) {
      std::size_t idx;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (stopped || next >= configs.size()) return;
        idx = next++;
      }
      CaseOutcome o = run_case(base, configs[idx], opts);
      {
        std::lock_guard<std::mutex> lock(mu);
        outcomes[idx] = std::move(o);
        done[idx] = 1;
        if (opts.on_outcome) opts.on_outcome(outcomes[idx]);
        if (opts.stop_when && opts.stop_when(outcomes[idx])) stopped = true;
      }
      cv.notify_all();
    }
  };

  std::vector<std::thread> pool;
  for (int w = 0; w < batch; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  // Early termination leaves unstarted cases marked failed-with-reason.
  std::vector<CaseOutcome> finished;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    if (!done[i]) {
      CaseOutcome o;
      o.config = configs[i];
      o.status = CaseStatus::failed;
      o.failure_reason = "skipped: sweep stopped early";
      o.attempts = 0;
      outcomes[i] = std::move(o);
    }
    finished.push_back(std::move(outcomes[i]));
  }

  std::vector<spec::ParameterRange> space = base.sweep;
  return aggregate(space, std::move(finished));
}

SweepDataset aggregate(const std::vector<spec::ParameterRange>& space,
                       std::vector<CaseOutcome> outcomes) {
  SweepDataset d;
  d.space = space;
  std::sort(outcomes.begin(), outcomes.end(),
            [](const CaseOutcome& a, const CaseOutcome& b) { return a.config.index < b.config.index; });
  d.outcomes = std::move(outcomes);

  std::size_t converged = 0;
  std::map<std::string, std::vector<double>> series;
  for (const auto& o : d.outcomes) {
    bool ok = o.status != CaseStatus::failed && o.metrics && o.metrics->converged;
    if (!ok) continue;
    ++converged;
    series["mass_kg"].push_back(o.metrics->mass_kg);
    series["max_vm_stress_pa"].push_back(o.metrics->max_vm_stress_pa);
    series["max_disp_m"].push_back(o.metrics->max_disp_m);
  }
  d.convergence_rate =
      d.outcomes.empty() ? 0.0 : static_cast<double>(converged) / d.outcomes.size();

  for (const auto& [name, values] : series) {
    MetricStats s;
    s.n = values.size();
    if (s.n == 0) continue;
    s.min = *std::min_element(values.begin(), values.end());
    s.max = *std::max_element(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / s.n;
    double var = 0.0;
    for (double v : values) var += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(var / s.n);  // population
    s.cv = s.mean != 0.0 ? s.stddev / s.mean : 0.0;
    d.stats[name] = s;
  }
  return d;
}

std::string outcome_to_json(const CaseOutcome& o) {
  json j;
  j["index"] = o.config.index;
  j["params"] = o.config.params;
  j["status"] = status_name(o.status);
  j["attempts"] = o.attempts;
  j["wall_ms"] = o.wall_ms;
  if (!o.failure_reason.empty()) j["failure_reason"] = o.failure_reason;
  if (o.metrics) j["metrics"] = json::parse(solve::metrics_to_json(*o.metrics));
  return j.dump();
}

std::string dataset_to_json(const SweepDataset& d) {
  json j;
  j["parameter_space"] = json::array();
  for (const auto& r : d.space)
    j["parameter_space"].push_back({{"name", r.name}, {"values", r.values}, {"unit", r.unit}});
  j["outcomes"] = json::array();
  for (const auto& o : d.outcomes) j["outcomes"].push_back(json::parse(outcome_to_json(o)));
  json stats;
  for (const auto& [name, s] : d.stats)
    stats[name] = {{"min", s.min},       {"max", s.max}, {"mean", s.mean},
                   {"stddev", s.stddev}, {"cv", s.cv},   {"n", s.n}};
  j["aggregate"] = {{"cases", d.outcomes.size()},
                    {"convergence_rate", d.convergence_rate},
                    {"metrics", stats}};
  return j.dump(2) + "\n";
}

SweepDataset dataset_from_json(const std::string& text) {
  json j = json::parse(text);
  SweepDataset d;
  for (const auto& r : j.value("parameter_space", json::array())) {
    spec::ParameterRange pr;
    pr.name = r.at("name").get<std::string>();
    pr.values = r.at("values").get<std::vector<double>>();
    pr.unit = r.value("unit", "");
    d.space.push_back(pr);
  }
  std::vector<CaseOutcome> outcomes;
  for (const auto& oj : j.value("outcomes", json::array())) {
    CaseOutcome o;
    o.config.index = oj.value("index", 0);
    if (oj.contains("params"))
      for (auto it = oj["params"].begin(); it != oj["params"].end(); ++it)
        o.config.params[it.key()] = it.value().get<double>();
    std::string st = oj.value("status", "failed");
    o.status = st == "ok" ? CaseStatus::ok
               : st == "retried_ok" ? CaseStatus::retried_ok
                                    : CaseStatus::failed;
    o.attempts = oj.value("attempts", 0);
    o.wall_ms = oj.value("wall_ms", 0.0);
    o.failure_reason = oj.value("failure_reason", "");
    if (oj.contains("metrics")) o.metrics = solve::metrics_from_json(oj["metrics"].dump());
    outcomes.push_back(std::move(o));
  }
  return aggregate(d.space, std::move(outcomes));
}

}  // namespace wingfea::orch
