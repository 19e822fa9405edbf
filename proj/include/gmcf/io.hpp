#pragma once

#include <string>

#include "gmcf/flow.hpp"
#include "gmcf/verify.hpp"
#include "gmcf/zoo.hpp"

namespace gmcf {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Parsed run configuration (JSON file with sections geometry / initial /
/// flow / fd plus scalars; see README for the schema).
struct RunConfig {
  GeometrySpec geometry;
  InitialSubmanifoldSpec initial;
  FlowConfig flow;
  std::vector<int> resolution;
  std::string output_dir = "out";
  int snapshot_stride = 50;
  FdScheme fd;
  std::uint64_t seed = 12345;
  double tol_scale = 1.0;
  int check_points = 20;
  int suite_samples = 40;
  double structure_tol = -1.0;  // < 0: pick by analytic/FD defaults
  double connection_tol = 1e-6;
  double einstein_tol = 1e-6;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

/// monitors.csv: full double precision, '.' radix, '\n' line ends.
void write_monitors_csv(const std::string& path, const std::vector<MonitorRecord>& records);
std::vector<MonitorRecord> read_monitors_csv(const std::string& path);

/// snapshot_<step>.csv: intrinsic index columns, then 2n chart coordinates.
void write_snapshot_csv(const std::string& path, const ImmersedGrid& grid);
ImmersedGrid read_snapshot_csv(const std::string& path, const BuiltGeometry& built,
                               const FdScheme& scheme);

std::string format_double(double v);  // round-trip exact

}  // namespace gmcf
