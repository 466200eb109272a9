#include <CLI11.hpp>

#include "wingfea/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"wingfea: parametric NACA-wing FEA pipeline"};
  app.require_subcommand(1);

  wingfea::cli::CommonFlags flags;
  std::string dataset_path;
  std::vector<std::string> objectives;
  double yield_strength = 503e6;

  auto add_common = [&](CLI::App* cmd, bool needs_spec = true) {
    if (needs_spec) cmd->add_option("--spec", flags.spec_path, "specification file")->required();
    cmd->add_option("--out", flags.out_dir, "output directory");
    cmd->add_option("--kb-path", flags.kb_path, "knowledge base file");
  };

  CLI::App* geom = app.add_subcommand("geom", "build the wing model and export its surface");
  add_common(geom);

  CLI::App* run = app.add_subcommand("run", "single-case pipeline: mesh, deck, solve, metrics");
  add_common(run);
  run->add_flag("--deck-only", flags.deck_only, "write the INP deck and stop");
  run->add_option("--calculix-bin", flags.calculix_bin, "external CalculiX executable");
  run->add_option("--load-gain", flags.load_gain, "tip-load gain for the 1.0g baseline");

  CLI::App* sweep = app.add_subcommand("sweep", "expand the parameter space and run every case");
  add_common(sweep);
  sweep->add_option("--workers", flags.workers, "worker cap (default: core count)");
  sweep->add_option("--batch-max", flags.batch_max, "batch size ceiling");
  sweep->add_option("--mem-per-case", flags.mem_per_case, "bytes per case for batch planning");
  sweep->add_option("--limit", flags.limit, "run only the first N configurations");
  sweep->add_flag("--resume", flags.resume, "skip cases with existing metrics");
  sweep->add_flag("--follow", flags.follow, "print outcomes as they stream in");
  sweep->add_option("--load-gain", flags.load_gain, "tip-load gain for the 1.0g baseline");

  CLI::App* analyze = app.add_subcommand("analyze", "Pareto, sensitivity and fatigue reports");
  analyze->add_option("--dataset", dataset_path, "dataset.json from a sweep")->required();
  analyze->add_option("--out", flags.out_dir, "output directory");
  analyze->add_option("--objective", objectives,
                      "objective as metric:min|max (repeatable; default mass+stress)");
  analyze->add_option("--yield-strength", yield_strength, "yield strength in Pa for safety factors");

  CLI11_PARSE(app, argc, argv);
  wingfea::cli::apply_env(flags);

  if (geom->parsed()) return wingfea::cli::cmd_geom(flags);
  if (run->parsed()) return wingfea::cli::cmd_run(flags);
  if (sweep->parsed()) return wingfea::cli::cmd_sweep(flags);
  return wingfea::cli::cmd_analyze(dataset_path, flags.out_dir, objectives, yield_strength);
}
