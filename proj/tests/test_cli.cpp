#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gmcf/io.hpp"

using namespace gmcf;
namespace fs = std::filesystem;

namespace {

struct RunOutput {
  int exit_code = -1;
  std::string text;
};

RunOutput run_cli(const std::string& args) {
  const char* bin = std::getenv("GMCFLOW_BIN");
  REQUIRE(bin != nullptr);
  const std::string cmd = std::string(bin) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunOutput out;
  std::array<char, 512> buf;
  while (fgets(buf.data(), buf.size(), pipe)) out.text += buf.data();
  const int status = pclose(pipe);
  out.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return out;
}

fs::path temp_dir() {
  fs::path dir =
      fs::temp_directory_path() / ("gmcf_cli_" + std::to_string(::getpid()) + "_" +
                                   std::to_string(rand()));
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& body) {
  fs::path p = dir / name;
  std::ofstream out(p);
  out << body;
  return p;
}

const char* kCotangentCheck = R"({
  "geometry": {
    "kind": "cotangent_bundle",
    "base": {"kind": "torus_of_revolution", "params": {"a": 2.0, "b": 0.5}}
  },
  "seed": 21
})";

const char* kCorruptedJ = R"({
  "geometry": {"kind": "flat_cn", "params": {"n": 1, "corrupt_j": 0.05}}
})";

const char* kCircleFlow = R"({
  "geometry": {"kind": "flat_cn", "params": {"n": 1}},
  "initial": {"kind": "circle", "params": {"r": 1.0}},
  "resolution": [96],
  "flow": {"t_end": 0.1, "integrator": "rk4", "cfl": 0.2, "monitor_stride": 10},
  "snapshot_stride": 40
})";

}  // namespace

TEST_CASE("cmd_check: cotangent config passes with f = 0") {
  fs::path dir = temp_dir();
  fs::path cfg = write_config(dir, "check.json", kCotangentCheck);
  RunOutput out = run_cli("check --config " + cfg.string());
  INFO(out.text);
  CHECK(out.exit_code == 0);
  CHECK(out.text.find("einstein: f = ") != std::string::npos);
  CHECK(out.text.find("FAIL") == std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("cmd_check: corrupted J exits 1, missing config exits 2") {
  fs::path dir = temp_dir();
  fs::path cfg = write_config(dir, "bad.json", kCorruptedJ);
  RunOutput out = run_cli("check --config " + cfg.string());
  CHECK(out.exit_code == 1);
  CHECK(out.text.find("FAIL") != std::string::npos);

  // an absurd tolerance scale waves the same config through
  RunOutput waved = run_cli("check --config " + cfg.string() + " --tol-scale 1e8");
  CHECK(waved.exit_code == 0);

  RunOutput missing = run_cli("check --config " + (dir / "nope.json").string());
  CHECK(missing.exit_code == 2);

  fs::path garbled = write_config(dir, "garbled.json", "{ not json");
  RunOutput parse = run_cli("check --config " + garbled.string());
  CHECK(parse.exit_code == 2);
  fs::remove_all(dir);
}

TEST_CASE("cmd_flow: writes monitors and snapshots, exits by termination") {
  fs::path dir = temp_dir();
  fs::path cfg = write_config(dir, "flow.json", kCircleFlow);
  fs::path out_dir = dir / "out";
  RunOutput out = run_cli("flow --config " + cfg.string() + " --output " + out_dir.string());
  INFO(out.text);
  CHECK(out.exit_code == 0);
  CHECK(out.text.find("termination: reached_t_end") != std::string::npos);

  REQUIRE(fs::exists(out_dir / "monitors.csv"));
  std::ifstream mon(out_dir / "monitors.csv");
  std::string header;
  std::getline(mon, header);
  CHECK(header ==
        "t,max_pullback_omega,volume,sup_speed,eta_margin,dh_residual,vector_mismatch");

  std::vector<MonitorRecord> records = read_monitors_csv((out_dir / "monitors.csv").string());
  REQUIRE(!records.empty());
  // final volume ~ 2 pi sqrt(1 - 2 t_end)
  const double want = 2.0 * 3.14159265358979323846 * std::sqrt(1.0 - 0.2);
  CHECK(records.back().volume == doctest::Approx(want).epsilon(2e-3));
  CHECK(fs::exists(out_dir / "snapshot_0.csv"));
  fs::remove_all(dir);
}

TEST_CASE("snapshot round-trip reproduces the monitor row") {
  fs::path dir = temp_dir();
  fs::path cfg = write_config(dir, "flow.json", kCircleFlow);
  fs::path out_dir = dir / "out";
  RunOutput out = run_cli("flow --config " + cfg.string() + " --output " + out_dir.string());
  REQUIRE(out.exit_code == 0);

  std::vector<MonitorRecord> records = read_monitors_csv((out_dir / "monitors.csv").string());
  REQUIRE(!records.empty());
  const MonitorRecord& last = records.back();

  // find the final snapshot (largest step index)
  int max_step = -1;
  for (const auto& entry : fs::directory_iterator(out_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("snapshot_", 0) == 0)
      max_step = std::max(max_step, std::stoi(name.substr(9)));
  }
  REQUIRE(max_step >= 0);

  RunConfig rc = load_run_config(cfg.string());
  BuiltGeometry built = build_geometry(rc.geometry);
  ImmersedGrid grid = read_snapshot_csv(
      (out_dir / ("snapshot_" + std::to_string(max_step) + ".csv")).string(), built, rc.fd);

  FrameField frames = compute_frames(grid);
  LagrangianDiagnostics diag = lagrangian_diagnostics(grid, frames);
  double sup_speed = 0.0;
  for (const NodeFrame& f : frames.frames)
    sup_speed = std::max(sup_speed, f.ambient_norm(f.H_generalized));
  CHECK(std::abs(grid_volume(grid, frames) - last.volume) < 1e-12);
  CHECK(std::abs(diag.max_pullback_omega - last.max_pullback_omega) < 1e-12);
  CHECK(std::abs(diag.eta_margin - last.eta_margin) < 1e-12);
  CHECK(std::abs(sup_speed - last.sup_speed) < 1e-12);
  fs::remove_all(dir);
}

TEST_CASE("cmd_flow: collapse and chart-exit exit codes") {
  fs::path dir = temp_dir();
  // 16^2 torus past the focal time -> degenerate (3) or blowup (4)
  const char* collapse = R"({
    "geometry": {"kind": "flat_cn", "params": {"n": 2}},
    "initial": {"kind": "product_torus", "params": {"r1": 1.0, "r2": 1.0}},
    "resolution": [16, 16],
    "flow": {"t_end": 0.6, "monitor_stride": 50}
  })";
  fs::path cfg1 = write_config(dir, "collapse.json", collapse);
  RunOutput out1 = run_cli("flow --config " + cfg1.string() + " --output " +
                           (dir / "out1").string());
  INFO(out1.text);
  CHECK((out1.exit_code == 3 || out1.exit_code == 4));

  // momentum box too small -> chart exit (5)
  const char* exit_cfg = R"({
    "geometry": {
      "kind": "cotangent_bundle",
      "params": {"p_box": 0.2201},
      "base": {"kind": "flat_torus", "params": {"n": 1}}
    },
    "initial": {"kind": "graph_of_one_form", "params": {"c1": 0.2, "pot_amp": 0.02}},
    "resolution": [32],
    "flow": {"t_end": 0.5}
  })";
  fs::path cfg2 = write_config(dir, "exit.json", exit_cfg);
  RunOutput out2 = run_cli("flow --config " + cfg2.string() + " --output " +
                           (dir / "out2").string());
  INFO(out2.text);
  CHECK(out2.exit_code == 5);
  fs::remove_all(dir);
}

TEST_CASE("cmd_identities: pass, fail and byte determinism") {
  fs::path dir = temp_dir();
  const char* suite = R"({
    "geometry": {"kind": "flat_cn", "params": {"n": 2}},
    "initial": {"kind": "product_torus", "params": {"r1": 1.0, "r2": 1.0}},
    "resolution": [16, 16],
    "suite_samples": 12,
    "seed": 5
  })";
  fs::path cfg = write_config(dir, "suite.json", suite);
  RunOutput a = run_cli("identities --config " + cfg.string());
  INFO(a.text);
  CHECK(a.exit_code == 0);
  RunOutput b = run_cli("identities --config " + cfg.string());
  CHECK(a.text == b.text);  // identical bytes for an identical seed

  RunOutput c = run_cli("identities --config " + cfg.string() + " --seed 6");
  CHECK(c.exit_code == 0);

  const char* broken = R"({
    "geometry": {"kind": "flat_cn", "params": {"n": 2, "perturb_connection": 0.01}},
    "suite_samples": 12
  })";
  fs::path bad = write_config(dir, "broken.json", broken);
  RunOutput d = run_cli("identities --config " + bad.string());
  CHECK(d.exit_code == 1);
  CHECK(d.text.find("FAIL") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("config parsing errors and field coverage") {
  CHECK_THROWS_AS(parse_run_config("{}"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("not json"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"geometry": {"kind": "flat_cn"},
    "flow": {"integrator": "leapfrog"}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"geometry": {"kind": "flat_cn"},
    "fd": {"order": 3}})"),
                  ConfigError);

  RunConfig cfg = parse_run_config(R"({
    "geometry": {"kind": "conformal_plane", "params": {"psi_amp": 0.2}},
    "initial": {"kind": "circle", "params": {"r": 0.5, "cx": 3.14, "cy": 3.14}},
    "resolution": [64],
    "fd": {"step": 1e-5, "order": 2, "richardson": false},
    "flow": {"dt_mode": "fixed", "dt": 1e-4, "t_end": 0.01, "integrator": "euler"},
    "output_dir": "somewhere",
    "snapshot_stride": 7,
    "seed": 99,
    "tolerances": {"structure": 1e-7, "einstein": 1e-5}
  })");
  CHECK(cfg.geometry.kind == "conformal_plane");
  CHECK(cfg.initial.param("cx", 0.0) == 3.14);
  CHECK(cfg.fd.order == 2);
  CHECK(cfg.flow.dt_mode == FlowConfig::DtMode::fixed);
  CHECK(cfg.output_dir == "somewhere");
  CHECK(cfg.snapshot_stride == 7);
  CHECK(cfg.seed == 99);
  CHECK(cfg.structure_tol == 1e-7);
  CHECK(cfg.einstein_tol == 1e-5);
}

TEST_CASE("format_double round-trips exactly") {
  for (double v : {1.0 / 3.0, 6.283185307179586, 1e-300, -0.0, 123456.789012345678}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}
