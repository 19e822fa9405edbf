#include "gmcf/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace gmcf {

using nlohmann::json;

namespace {

std::map<std::string, double> param_map(const json& j, const char* where) {
  std::map<std::string, double> out;
  if (!j.is_object()) throw ConfigError(std::string(where) + ": params must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_number())
      throw ConfigError(std::string(where) + ": parameter '" + it.key() + "' must be a number");
    out[it.key()] = it.value().get<double>();
  }
  return out;
}

GeometrySpec parse_geometry(const json& j) {
  if (!j.is_object() || !j.contains("kind"))
    throw ConfigError("geometry: object with 'kind' required");
  GeometrySpec spec;
  spec.kind = j.at("kind").get<std::string>();
  if (j.contains("params")) spec.params = param_map(j.at("params"), "geometry");
  if (j.contains("base")) {
    const json& b = j.at("base");
    if (!b.is_object() || !b.contains("kind"))
      throw ConfigError("geometry.base: object with 'kind' required");
    spec.base_kind = b.at("kind").get<std::string>();
    if (b.contains("params")) spec.base_params = param_map(b.at("params"), "geometry.base");
  }
  return spec;
}

InitialSubmanifoldSpec parse_initial(const json& j) {
  if (!j.is_object() || !j.contains("kind"))
    throw ConfigError("initial: object with 'kind' required");
  InitialSubmanifoldSpec spec;
  spec.kind = j.at("kind").get<std::string>();
  if (j.contains("base_kind")) spec.base_kind = j.at("base_kind").get<std::string>();
  if (j.contains("params")) spec.params = param_map(j.at("params"), "initial");
  return spec;
}

FlowConfig parse_flow(const json& j) {
  FlowConfig cfg;
  if (!j.is_object()) throw ConfigError("flow: must be an object");
  if (j.contains("dt_mode")) {
    const std::string mode = j.at("dt_mode").get<std::string>();
    if (mode == "fixed")
      cfg.dt_mode = FlowConfig::DtMode::fixed;
    else if (mode == "cfl")
      cfg.dt_mode = FlowConfig::DtMode::cfl;
    else
      throw ConfigError("flow.dt_mode: expected 'fixed' or 'cfl'");
  }
  if (j.contains("dt")) cfg.dt = j.at("dt").get<double>();
  if (j.contains("cfl")) cfg.cfl_constant = j.at("cfl").get<double>();
  if (j.contains("t_end")) cfg.t_end = j.at("t_end").get<double>();
  if (j.contains("integrator")) {
    const std::string name = j.at("integrator").get<std::string>();
    if (name == "euler")
      cfg.integrator = FlowConfig::Integrator::euler;
    else if (name == "rk4")
      cfg.integrator = FlowConfig::Integrator::rk4;
    else
      throw ConfigError("flow.integrator: expected 'euler' or 'rk4'");
  }
  if (j.contains("monitor_stride")) cfg.monitor_stride = j.at("monitor_stride").get<int>();
  if (j.contains("stop_eta_margin")) cfg.stop_eta_margin = j.at("stop_eta_margin").get<double>();
  if (j.contains("stop_speed")) cfg.stop_speed = j.at("stop_speed").get<double>();
  cfg.validate();
  return cfg;
}

FdScheme parse_fd(const json& j) {
  FdScheme fd;
  if (!j.is_object()) throw ConfigError("fd: must be an object");
  if (j.contains("step")) fd.step = j.at("step").get<double>();
  if (j.contains("order")) fd.order = j.at("order").get<int>();
  if (j.contains("richardson")) fd.richardson = j.at("richardson").get<bool>();
  fd.validate();
  return fd;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& exc) {
    throw ConfigError(std::string("invalid JSON: ") + exc.what());
  }
  if (!root.is_object()) throw ConfigError("config: top level must be an object");
  RunConfig cfg;
  try {
    if (!root.contains("geometry")) throw ConfigError("config: 'geometry' section required");
    cfg.geometry = parse_geometry(root.at("geometry"));
    if (root.contains("initial")) cfg.initial = parse_initial(root.at("initial"));
    if (root.contains("flow")) cfg.flow = parse_flow(root.at("flow"));
    if (root.contains("fd")) cfg.fd = parse_fd(root.at("fd"));
    if (root.contains("resolution")) {
      if (!root.at("resolution").is_array())
        throw ConfigError("resolution: expected an array of grid sizes");
      for (const json& v : root.at("resolution")) cfg.resolution.push_back(v.get<int>());
    }
    if (root.contains("output_dir")) cfg.output_dir = root.at("output_dir").get<std::string>();
    if (root.contains("snapshot_stride"))
      cfg.snapshot_stride = root.at("snapshot_stride").get<int>();
    if (root.contains("seed")) cfg.seed = root.at("seed").get<std::uint64_t>();
    if (root.contains("tol_scale")) cfg.tol_scale = root.at("tol_scale").get<double>();
    if (root.contains("check_points")) cfg.check_points = root.at("check_points").get<int>();
    if (root.contains("suite_samples")) cfg.suite_samples = root.at("suite_samples").get<int>();
    if (root.contains("tolerances")) {
      const json& t = root.at("tolerances");
      if (t.contains("structure")) cfg.structure_tol = t.at("structure").get<double>();
      if (t.contains("connection")) cfg.connection_tol = t.at("connection").get<double>();
      if (t.contains("einstein")) cfg.einstein_tol = t.at("einstein").get<double>();
    }
  } catch (const json::exception& exc) {
    throw ConfigError(std::string("config: ") + exc.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& exc) {
    throw ConfigError(std::string("config: ") + exc.what());
  }
  if (cfg.snapshot_stride < 1) throw ConfigError("snapshot_stride must be >= 1");
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in.is_open()) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_monitors_csv(const std::string& path, const std::vector<MonitorRecord>& records) {
  std::ofstream out(path, std::ios::binary);  // '\n' line ends everywhere
  if (!out.is_open()) throw ConfigError("cannot write " + path);
  out << "t,max_pullback_omega,volume,sup_speed,eta_margin,dh_residual,vector_mismatch\n";
  for (const MonitorRecord& r : records)
    out << format_double(r.t) << ',' << format_double(r.max_pullback_omega) << ','
        << format_double(r.volume) << ',' << format_double(r.sup_speed) << ','
        << format_double(r.eta_margin) << ',' << format_double(r.dh_residual) << ','
        << format_double(r.vector_form_mismatch) << '\n';
  if (!out.good()) throw ConfigError("failed writing " + path);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::vector<MonitorRecord> read_monitors_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in.is_open()) throw ConfigError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path + ": empty file");
  std::vector<MonitorRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 7) throw ConfigError(path + ": malformed row");
    MonitorRecord r;
    r.t = std::stod(f[0]);
    r.max_pullback_omega = std::stod(f[1]);
    r.volume = std::stod(f[2]);
    r.sup_speed = std::stod(f[3]);
    r.eta_margin = std::stod(f[4]);
    r.dh_residual = std::stod(f[5]);
    r.vector_form_mismatch = std::stod(f[6]);
    out.push_back(r);
  }
  return out;
}

void write_snapshot_csv(const std::string& path, const ImmersedGrid& grid) {
  std::ofstream out(path, std::ios::binary);
  if (!out.is_open()) throw ConfigError("cannot write " + path);
  const int n = grid.intrinsic_dim;
  const int d = grid.geometry->dim;
  out << (n == 1 ? "i" : "i,j");
  for (int a = 1; a <= d; ++a) out << ",y" << a;
  out << '\n';
  for (int node = 0; node < grid.node_count(); ++node) {
    auto [i, j] = grid.unflatten(node);
    out << i;
    if (n == 2) out << ',' << j;
    const double* p = grid.points.data() + static_cast<size_t>(node) * d;
    for (int a = 0; a < d; ++a) out << ',' << format_double(p[a]);
    out << '\n';
  }
  if (!out.good()) throw ConfigError("failed writing " + path);
}

ImmersedGrid read_snapshot_csv(const std::string& path, const BuiltGeometry& built,
                               const FdScheme& scheme) {
  std::ifstream in(path);
  if (!in.is_open()) throw ConfigError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path + ": empty file");
  std::vector<std::string> header = split_csv_line(line);
  const int d = built.geometry->dim;
  const int n = header.size() == static_cast<size_t>(d) + 1 ? 1 : 2;
  if (header.size() != static_cast<size_t>(n + d))
    throw ConfigError(path + ": header does not match the geometry dimension");

  std::vector<std::array<int, 2>> indices;
  std::vector<double> coords;
  int max_i = 0, max_j = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f = split_csv_line(line);
    if (f.size() != static_cast<size_t>(n + d)) throw ConfigError(path + ": malformed row");
    std::array<int, 2> idx{std::stoi(f[0]), n == 2 ? std::stoi(f[1]) : 0};
    max_i = std::max(max_i, idx[0]);
    if (n == 2) max_j = std::max(max_j, idx[1]);
    indices.push_back(idx);
    for (int a = 0; a < d; ++a) coords.push_back(std::stod(f[static_cast<size_t>(n + a)]));
  }
  ImmersedGrid grid;
  grid.intrinsic_dim = n;
  grid.shape = n == 1 ? std::vector<int>{max_i + 1} : std::vector<int>{max_i + 1, max_j + 1};
  for (int s : grid.shape) grid.spacing.push_back(6.283185307179586476925286766559 / s);
  grid.geometry = built.geometry;
  grid.connection = built.connection;
  grid.scheme = scheme;
  if (indices.size() != static_cast<size_t>(grid.node_count()))
    throw ConfigError(path + ": row count does not fill the grid");
  grid.points.assign(static_cast<size_t>(grid.node_count()) * d, 0.0);
  std::vector<bool> seen(indices.size(), false);
  for (std::size_t row = 0; row < indices.size(); ++row) {
    const int node = grid.flat_index(indices[row][0], indices[row][1]);
    if (seen[static_cast<size_t>(node)]) throw ConfigError(path + ": duplicate node row");
    seen[static_cast<size_t>(node)] = true;
    for (int a = 0; a < d; ++a)
      grid.points[static_cast<size_t>(node) * d + a] = coords[row * d + a];
  }
  grid.validate();
  return grid;
}

}  // namespace gmcf
