#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "gmcf/io.hpp"

namespace fs = std::filesystem;
using namespace gmcf;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string output_dir;
  std::optional<std::uint64_t> seed;
  double tol_scale = 1.0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "run configuration file (JSON)")->required();
  cmd->add_option("--output", args.output_dir, "output directory (overrides config)");
  cmd->add_option("--seed", args.seed, "random seed (overrides config)");
  cmd->add_option("--tol-scale", args.tol_scale, "scale factor on check tolerances");
}

RunConfig load(const CommonArgs& args) {
  RunConfig cfg = load_run_config(args.config_path);
  if (!args.output_dir.empty()) cfg.output_dir = args.output_dir;
  if (const char* env = std::getenv("GMCF_OUTPUT_DIR"); env && args.output_dir.empty())
    cfg.output_dir = env;
  if (args.seed) cfg.seed = *args.seed;
  cfg.tol_scale *= args.tol_scale;
  return cfg;
}

int run_check(const CommonArgs& args) {
  RunConfig cfg = load(args);
  BuiltGeometry built = build_geometry(cfg.geometry);
  std::vector<ChartPoint> pts = sample_chart_points(
      *built.geometry, cfg.check_points, cfg.seed, 4.0 * cfg.fd.stencil_radius());

  const double structure_tol =
      (cfg.structure_tol > 0.0 ? cfg.structure_tol
                               : built.geometry->has_analytic_derivatives() ? 1e-8 : 1e-6) *
      cfg.tol_scale;
  const double connection_tol = cfg.connection_tol * cfg.tol_scale;
  const double einstein_tol = cfg.einstein_tol * cfg.tol_scale;

  CheckReport sr = check_structure(*built.geometry, pts, structure_tol, cfg.fd);
  CheckReport cr = check_connection_class(*built.connection, pts, connection_tol, cfg.fd);
  EinsteinReport er = einstein_report(*built.connection, pts, cfg.fd);

  std::printf("geometry: %s\n", built.geometry->name.c_str());
  std::printf("connection: %s\n", built.connection->name.c_str());
  std::printf("structure: residual %.6e tol %.6e %s\n", sr.max_residual, sr.tol,
              sr.pass ? "pass" : "FAIL");
  for (const char* key : {"j_squared", "compatibility", "omega_skew", "d_omega"})
    std::printf("  %-14s %.6e\n", key, sr.max_of(key));
  std::printf("connection_class: residual %.6e tol %.6e %s\n", cr.max_residual, cr.tol,
              cr.pass ? "pass" : "FAIL");
  std::printf("  %-14s %.6e\n", "nabla_g", cr.max_of("nabla_g"));
  std::printf("  %-14s %.6e\n", "nabla_j", cr.max_of("nabla_j"));
  const bool einstein_pass = er.residual <= einstein_tol;
  std::printf("einstein: f = %.9g residual %.6e tol %.6e %s\n", er.f_estimate, er.residual,
              einstein_tol, einstein_pass ? "pass" : "FAIL");
  return (sr.pass && cr.pass && einstein_pass) ? 0 : 1;
}

int run_flow_cmd(const CommonArgs& args) {
  RunConfig cfg = load(args);
  if (cfg.resolution.empty()) throw ConfigError("flow: 'resolution' required");
  BuiltGeometry built = build_geometry(cfg.geometry);
  ImmersedGrid initial = build_initial(cfg.initial, built, cfg.resolution, cfg.fd);

  fs::create_directories(cfg.output_dir);
  const fs::path out_dir(cfg.output_dir);
  auto hook = [&](const ImmersedGrid& grid, int step, double) {
    if (step % cfg.snapshot_stride != 0) return;
    write_snapshot_csv((out_dir / ("snapshot_" + std::to_string(step) + ".csv")).string(),
                       grid);
  };
  FlowResult result = run(initial, cfg.flow, hook);
  // final snapshot regardless of stride, aligned with the final monitor row
  const int last_step = result.records.empty() ? 0 : result.records.back().step;
  write_snapshot_csv((out_dir / ("snapshot_" + std::to_string(last_step) + ".csv")).string(),
                     result.final_state);
  write_monitors_csv((out_dir / "monitors.csv").string(), result.records);

  std::printf("termination: %s\n", termination_name(result.termination));
  if (!result.records.empty()) {
    const MonitorRecord& r = result.records.back();
    std::printf("final: t=%.9g volume=%.9g max|F*omega|=%.3e sup|H|=%.3e\n", r.t, r.volume,
                r.max_pullback_omega, r.sup_speed);
  }
  switch (result.termination) {
    case Termination::reached_t_end: return 0;
    case Termination::eta_degenerate: return 3;
    case Termination::speed_blowup: return 4;
    case Termination::chart_exit: return 5;
  }
  return 4;
}

int run_identities(const CommonArgs& args) {
  RunConfig cfg = load(args);
  BuiltGeometry built = build_geometry(cfg.geometry);
  std::optional<ImmersedGrid> grid;
  if (!cfg.resolution.empty() && !cfg.initial.kind.empty())
    grid = build_initial(cfg.initial, built, cfg.resolution, cfg.fd);

  SuiteOptions opt;
  opt.scheme = cfg.fd;
  opt.tol_scale = cfg.tol_scale;
  IdentitySuiteReport rep = run_suite(*built.connection, grid ? &*grid : nullptr,
                                      cfg.suite_samples, cfg.seed, opt);
  std::fputs(rep.to_text().c_str(), stdout);
  return rep.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"generalized Lagrangian mean curvature flow in almost Kaehler charts"};
  app.require_subcommand(1);

  CommonArgs check_args, flow_args, id_args;
  CLI::App* check_cmd = app.add_subcommand(
      "check", "structure, connection-class and Einstein certification");
  add_common(check_cmd, check_args);
  CLI::App* flow_cmd =
      app.add_subcommand("flow", "integrate the flow and write monitors/snapshots");
  add_common(flow_cmd, flow_args);
  CLI::App* id_cmd = app.add_subcommand("identities", "randomized identity suite");
  add_common(id_cmd, id_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (check_cmd->parsed()) return run_check(check_args);
    if (flow_cmd->parsed()) return run_flow_cmd(flow_args);
    if (id_cmd->parsed()) return run_identities(id_args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const SpecError& e) {
    std::cerr << "spec error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
