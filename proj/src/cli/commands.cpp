#include "wingfea/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "wingfea/analysis.hpp"
#include "wingfea/geometry.hpp"
#include "wingfea/kb.hpp"
#include "wingfea/mesher.hpp"
#include "wingfea/orchestrator.hpp"
#include "wingfea/solver.hpp"
#include "wingfea/spec.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace wingfea::cli {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw spec::SchemaError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

std::string timestamp() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

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

// Resolve a named-but-valueless material from the knowledge base.
void resolve_material(spec::AnalysisSpec& s, const std::string& kb_path) {
  if (s.material.youngs_modulus > 0.0) return;
  kb::KnowledgeBase base;
  if (!kb_path.empty() && fs::exists(kb_path)) base = kb::KnowledgeBase::load(kb_path);
  else base.seed_defaults();
  s.material = base.lookup_material(s.material.name);
}

spec::AnalysisSpec load_spec(const CommonFlags& flags, bool validate = true) {
  spec::AnalysisSpec s = spec::parse_spec(read_file(flags.spec_path));
  resolve_material(s, flags.kb_path);
  if (validate) {
    spec::ValidationReport rep = spec::validate_spec(s);
    for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
    if (!rep.ok()) {
      for (const auto& e : rep.errors) std::cerr << "error: " << e << "\n";
      throw spec::SchemaError("specification failed validation");
    }
    // Every semantic location must be in the model vocabulary.
    geom::WingModel model(wing_params(s.geometry));
    for (const auto& l : s.loads) model.resolve_semantic_location(l.location);
    for (const auto& b : s.boundary_conditions) model.resolve_semantic_location(b.location);
  }
  return s;
}

void write_manifest(const CommonFlags& flags, const spec::AnalysisSpec& s,
                    const std::string& command, std::size_t n_configs) {
  json j;
  j["command"] = command;
  j["spec_path"] = flags.spec_path;
  j["spec_hash"] = to_hex(fnv1a64(spec::canonical_spec_json(s)));
  j["out_dir"] = flags.out_dir;
  j["started_at"] = timestamp();
  j["tool_version"] = "wingfea 1.0";
  j["configurations"] = n_configs;
  write_file(flags.out_dir + "/manifest.json", j.dump(2) + "\n");
  write_file(flags.out_dir + "/spec.canonical.json", spec::canonical_spec_json(s));
}

std::vector<spec::ConfigurationPoint> configs_of(const spec::AnalysisSpec& s, int limit) {
  std::vector<spec::ConfigurationPoint> configs;
  if (s.sweep.empty()) {
    spec::ConfigurationPoint p;
    p.index = 0;
    configs.push_back(p);
  } else {
    configs = spec::expand_parameter_space(s.sweep);
  }
  if (limit > 0 && static_cast<int>(configs.size()) > limit)
    configs.resize(static_cast<std::size_t>(limit));
  return configs;
}

int classify_exit(const std::exception& e) {
  if (dynamic_cast<const spec::SchemaError*>(&e) || dynamic_cast<const spec::UnitError*>(&e) ||
      dynamic_cast<const spec::ParseError*>(&e) || dynamic_cast<const spec::RangeError*>(&e) ||
      dynamic_cast<const spec::CapacityError*>(&e) ||
      dynamic_cast<const geom::CodeError*>(&e) ||
      dynamic_cast<const geom::GeometryError*>(&e) ||
      dynamic_cast<const geom::UnknownLocationError*>(&e) ||
      dynamic_cast<const kb::NoMatchError*>(&e))
    return kExitValidation;
  return kExitRuntime;
}

}  // namespace

void apply_env(CommonFlags& flags) {
  auto env = [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (v && *v) return std::string(v);
    return std::nullopt;
  };
  if (flags.kb_path.empty())
    if (auto v = env("WINGFEA_KB_PATH")) flags.kb_path = *v;
  if (flags.calculix_bin.empty())
    if (auto v = env("WINGFEA_CALCULIX_BIN")) flags.calculix_bin = *v;
  if (flags.workers == 0)
    if (auto v = env("WINGFEA_WORKERS")) flags.workers = std::atoi(v->c_str());
  if (flags.mem_per_case == 0)
    if (auto v = env("WINGFEA_MEM_PER_CASE")) flags.mem_per_case = std::strtoull(v->c_str(), nullptr, 10);
}

int cmd_geom(const CommonFlags& flags) {
  try {
    spec::AnalysisSpec s = load_spec(flags);
    fs::create_directories(flags.out_dir);
    geom::WingModel model(wing_params(s.geometry));
    model.export_surface_stl(flags.out_dir + "/surface.stl");

    json j;
    j["naca_code"] = s.geometry.naca_code;
    j["chord_m"] = s.geometry.chord;
    j["span_m"] = s.geometry.span;
    j["shell_thickness_m"] = s.geometry.shell_thickness;
    j["spar_count"] = s.geometry.spar.count;
    j["spar_width_m"] = s.geometry.spar.width;
    j["spar_stations"] = model.spar_stations();
    j["rib_count"] = s.geometry.rib.count;
    j["rib_thickness_m"] = s.geometry.rib.thickness;
    j["rib_stations_m"] = model.rib_stations();
    j["locations"] = model.location_names();
    write_file(flags.out_dir + "/geometry.json", j.dump(2) + "\n");
    std::cout << j.dump(2) << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return classify_exit(e);
  }
}

int cmd_run(const CommonFlags& flags) {
  try {
    spec::AnalysisSpec s = load_spec(flags);
    fs::create_directories(flags.out_dir);
    write_manifest(flags, s, "run", 1);

    geom::WingModel model(wing_params(s.geometry));
    mesh::Mesh m = mesh::generate_mesh(model, s.mesh);
    mesh::MeshQualityReport q = mesh::validate_mesh(m);
    mesh::write_mesh_text(m, flags.out_dir + "/mesh.txt");

    json qj = {{"elements", q.element_count},
               {"nodes", q.node_count},
               {"min_jacobian", q.min_jacobian},
               {"nonpositive_jacobians", q.nonpositive_jacobians},
               {"connected_components", q.connected_components},
               {"boundary_closed", q.boundary_closed},
               {"hanging_nodes", q.hanging_nodes},
               {"volume_m3", q.total_volume},
               {"level", spec::density_name(m.level)}};
    write_file(flags.out_dir + "/mesh_report.json", qj.dump(2) + "\n");
    if (!q.valid()) throw mesh::ResolutionError("mesh failed validity checks");

    solve::LoadCase lc = solve::build_load_case(m, s.material, s.loads, s.boundary_conditions);
    if (s.loads.empty()) solve::add_tip_gravity_load(m, s.material, flags.load_gain, lc);

    std::string deck = solve::write_inp(m, s.material, lc, s.boundary_conditions,
                                        solve::standard_load_spectrum(),
                                        {s.mesh.element_type, "wingfea case", "MAT"});
    write_file(flags.out_dir + "/model.inp", deck);
    if (flags.deck_only) {
      std::cout << "deck written to " << flags.out_dir << "/model.inp\n";
      return kExitOk;
    }

    solve::CaseMetrics cm = solve::run_load_spectrum(m, s.material, lc);
    cm.case_index = 0;
    write_file(flags.out_dir + "/metrics.json",
               solve::metrics_to_json(cm, s.data_analysis.metrics) + "\n");
    std::cout << solve::metrics_to_json(cm, s.data_analysis.metrics) << "\n";

    // Optional cross-check against an external CalculiX binary.
    if (!flags.calculix_bin.empty()) {
      auto frd = solve::run_calculix(flags.calculix_bin, flags.out_dir + "/model.inp");
      if (frd) {
        double ext_max = 0.0;
        for (const auto& d : frd->displacement) ext_max = std::max(ext_max, d.norm());
        json xj = {{"external_max_disp_mm", ext_max},
                   {"internal_max_disp_mm", cm.max_disp_m * 1e3}};
        write_file(flags.out_dir + "/external_check.json", xj.dump(2) + "\n");
      }
    }

    if (!flags.kb_path.empty() && cm.converged) {
      kb::KnowledgeBase base;
      if (fs::exists(flags.kb_path)) base = kb::KnowledgeBase::load(flags.kb_path);
      else base.seed_defaults();
      std::string key = "naca " + s.geometry.naca_code + " wing chord " +
                        std::to_string(s.geometry.chord) + " span " +
                        std::to_string(s.geometry.span);
      base.record_success(key, solve::metrics_to_json(cm));
      base.save(flags.kb_path);
    }
    return cm.converged ? kExitOk : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return classify_exit(e);
  }
}

int cmd_sweep(const CommonFlags& flags) {
  try {
    spec::AnalysisSpec s = load_spec(flags);
    fs::create_directories(flags.out_dir);
    std::vector<spec::ConfigurationPoint> configs = configs_of(s, flags.limit);
    write_manifest(flags, s, "sweep", configs.size());

    // Resume: drop configurations whose case directory already holds metrics.
    std::vector<spec::ConfigurationPoint> todo;
    std::vector<orch::CaseOutcome> prior;
    for (const auto& c : configs) {
      std::string mf = flags.out_dir + "/case_" + std::to_string(c.index) + "/metrics.json";
      if (flags.resume && fs::exists(mf)) {
        orch::CaseOutcome o;
        o.config = c;
        o.metrics = solve::metrics_from_json(read_file(mf));
        o.status = o.metrics->converged ? orch::CaseStatus::ok : orch::CaseStatus::failed;
        o.attempts = 1;
        prior.push_back(std::move(o));
      } else {
        todo.push_back(c);
      }
    }

    orch::ResourceEnvelope env = orch::detect_resources(flags.mem_per_case);
    if (flags.workers > 0) env.cores = flags.workers;
    env.batch_max = flags.batch_max;

    std::ofstream stream(flags.out_dir + "/outcomes.jsonl",
                         flags.resume ? std::ios::app : std::ios::trunc);
    orch::SweepOptions opts;
    opts.work_dir = flags.out_dir;
    opts.load_gain = flags.load_gain;
    opts.on_outcome = [&](const orch::CaseOutcome& o) {
      stream << orch::outcome_to_json(o) << "\n";
      stream.flush();
      if (flags.follow)
        std::cout << "case " << o.config.index << ": " << orch::status_name(o.status) << " ("
                  << o.wall_ms << " ms)\n";
    };

    orch::SweepDataset ds;
    if (todo.empty()) {
      ds = orch::aggregate(s.sweep, std::move(prior));
    } else {
      ds = orch::run_sweep(s, todo, env, opts);
      if (!prior.empty()) {
        std::vector<orch::CaseOutcome> all = std::move(ds.outcomes);
        for (auto& o : prior) all.push_back(std::move(o));
        ds = orch::aggregate(s.sweep, std::move(all));
      }
    }
    write_file(flags.out_dir + "/dataset.json", orch::dataset_to_json(ds));

    if (!flags.kb_path.empty()) {
      kb::KnowledgeBase base;
      if (fs::exists(flags.kb_path)) base = kb::KnowledgeBase::load(flags.kb_path);
      else base.seed_defaults();
      for (const auto& o : ds.outcomes) {
        std::string key = "naca " + s.geometry.naca_code + " case " +
                          std::to_string(o.config.index);
        if (o.status != orch::CaseStatus::failed && o.metrics)
          base.record_success(key, solve::metrics_to_json(*o.metrics));
        else
          base.record_failure(key, "{\"reason\":\"" + o.failure_reason + "\"}");
      }
      base.save(flags.kb_path);
    }

    std::size_t failed = 0;
    for (const auto& o : ds.outcomes)
      if (o.status == orch::CaseStatus::failed) failed++;
    std::cout << "sweep: " << ds.outcomes.size() - failed << "/" << ds.outcomes.size()
              << " converged, dataset at " << flags.out_dir << "/dataset.json\n";
    if (failed == ds.outcomes.size()) return kExitRuntime;
    return failed ? kExitPartial : kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return classify_exit(e);
  }
}

int cmd_analyze(const std::string& dataset_path, const std::string& out_dir,
                const std::vector<std::string>& objective_flags, double yield_strength) {
  try {
    orch::SweepDataset ds = orch::dataset_from_json(read_file(dataset_path));

    std::vector<spec::Objective> objectives;
    for (const auto& f : objective_flags) {
      auto colon = f.find(':');
      spec::Objective o;
      std::string metric = colon == std::string::npos ? f : f.substr(0, colon);
      std::string dir = colon == std::string::npos ? "min" : f.substr(colon + 1);
      o.metric = metric == "mass" ? "mass_kg" : metric == "stress" ? "max_vm_stress_pa" : metric;
      o.goal = dir.rfind("max", 0) == 0 ? spec::Goal::maximize : spec::Goal::minimize;
      objectives.push_back(o);
    }
    if (objectives.empty()) {
      objectives.push_back({spec::Goal::minimize, "mass_kg"});
      objectives.push_back({spec::Goal::minimize, "max_vm_stress_pa"});
    }

    analysis::AnalysisReport rep = analysis::analyze(ds, objectives, yield_strength);
    fs::create_directories(out_dir);
    write_file(out_dir + "/report.json", analysis::report_to_json(rep));
    write_file(out_dir + "/front.csv", analysis::front_csv(rep));
    write_file(out_dir + "/correlations.csv", analysis::correlations_csv(rep));

    std::cout << "front: " << rep.front.size() << " points; bands: infinite "
              << rep.bands.infinite << " (" << rep.bands.pct_infinite << "%), finite "
              << rep.bands.finite << " (" << rep.bands.pct_finite << "%), redesign "
              << rep.bands.redesign << " (" << rep.bands.pct_redesign << "%)\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (dynamic_cast<const analysis::NoDataError*>(&e)) return kExitValidation;
    return classify_exit(e);
  }
}

}  // namespace wingfea::cli
