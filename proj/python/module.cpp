#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gmcf/io.hpp"

namespace py = pybind11;
using namespace gmcf;

namespace {

ChartPoint point_from(const std::vector<double>& y) {
  ChartPoint p = ChartPoint::zero(static_cast<int>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) p[static_cast<int>(i)] = y[i];
  if (!p.finite()) throw TensorError("non-finite chart point");
  return p;
}

py::array_t<double> tensor_to_array(const DenseTensor& t) {
  std::vector<py::ssize_t> shape;
  for (int d : t.dims()) shape.push_back(d);
  if (shape.empty()) shape.push_back(1);
  py::array_t<double> out(shape);
  std::copy(t.entries().begin(), t.entries().end(), out.mutable_data());
  return out;
}

struct PyGeometry {
  BuiltGeometry built;

  int dim() const { return built.geometry->dim; }
  std::string name() const { return built.geometry->name; }
  std::string connection_name() const { return built.connection->name; }

  py::array_t<double> metric(const std::vector<double>& y) const {
    return tensor_to_array(built.geometry->metric_at(point_from(y)));
  }
  py::array_t<double> complex_structure(const std::vector<double>& y) const {
    return tensor_to_array(built.geometry->j_at(point_from(y)));
  }
  py::array_t<double> omega(const std::vector<double>& y) const {
    return tensor_to_array(built.geometry->omega_at(point_from(y)));
  }
  py::array_t<double> christoffels(const std::vector<double>& y) const {
    return tensor_to_array(built.connection->gamma_at(point_from(y)));
  }
  py::array_t<double> torsion_at(const std::vector<double>& y) const {
    return tensor_to_array(torsion(*built.connection, point_from(y)));
  }
  py::array_t<double> ricci_form_at(const std::vector<double>& y) const {
    return tensor_to_array(ricci_form(*built.connection, point_from(y)));
  }

  py::dict check(int points, std::uint64_t seed) const {
    std::vector<ChartPoint> pts =
        sample_chart_points(*built.geometry, points, seed, 0.25);
    const double structure_tol = built.geometry->has_analytic_derivatives() ? 1e-8 : 1e-6;
    CheckReport sr = check_structure(*built.geometry, pts, structure_tol);
    CheckReport cr = check_connection_class(*built.connection, pts, 1e-6);
    EinsteinReport er = einstein_report(*built.connection, pts);
    py::dict out;
    out["structure_residual"] = sr.max_residual;
    out["structure_pass"] = sr.pass;
    out["connection_residual"] = cr.max_residual;
    out["connection_pass"] = cr.pass;
    out["einstein_f"] = er.f_estimate;
    out["einstein_residual"] = er.residual;
    out["per_point_f"] = er.per_point_f;
    return out;
  }
};

struct PyGrid {
  ImmersedGrid grid;

  std::vector<int> shape() const { return grid.shape; }
  py::array_t<double> points() const {
    const int d = grid.geometry->dim;
    py::array_t<double> out({static_cast<py::ssize_t>(grid.node_count()),
                             static_cast<py::ssize_t>(d)});
    std::copy(grid.points.begin(), grid.points.end(), out.mutable_data());
    return out;
  }
  py::array_t<double> velocity() const {
    const int d = grid.geometry->dim;
    std::vector<double> v = velocity_field(grid);
    py::array_t<double> out({static_cast<py::ssize_t>(grid.node_count()),
                             static_cast<py::ssize_t>(d)});
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
  }
  py::dict diagnostics() const {
    FrameField frames = compute_frames(grid);
    LagrangianDiagnostics diag = lagrangian_diagnostics(grid, frames);
    py::dict out;
    out["max_pullback_omega"] = diag.max_pullback_omega;
    out["eta_margin"] = diag.eta_margin;
    out["dh_residual"] = diag.dh_residual;
    out["vector_form_mismatch"] = diag.vector_form_mismatch;
    out["volume"] = grid_volume(grid, frames);
    return out;
  }
};

PyGeometry py_build_geometry(const std::string& config_json) {
  RunConfig cfg = parse_run_config(config_json);
  return PyGeometry{build_geometry(cfg.geometry)};
}

PyGrid py_build_initial(const PyGeometry& geo, const std::string& config_json) {
  RunConfig cfg = parse_run_config(config_json);
  if (cfg.resolution.empty()) throw ConfigError("resolution required");
  return PyGrid{build_initial(cfg.initial, geo.built, cfg.resolution, cfg.fd)};
}

py::dict py_run_flow(const std::string& config_json) {
  RunConfig cfg = parse_run_config(config_json);
  if (cfg.resolution.empty()) throw ConfigError("resolution required");
  BuiltGeometry built = build_geometry(cfg.geometry);
  ImmersedGrid initial = build_initial(cfg.initial, built, cfg.resolution, cfg.fd);
  FlowResult result = run(initial, cfg.flow);

  py::dict out;
  out["termination"] = std::string(termination_name(result.termination));
  py::list records;
  for (const MonitorRecord& r : result.records) {
    py::dict rec;
    rec["t"] = r.t;
    rec["step"] = r.step;
    rec["max_pullback_omega"] = r.max_pullback_omega;
    rec["volume"] = r.volume;
    rec["sup_speed"] = r.sup_speed;
    rec["eta_margin"] = r.eta_margin;
    rec["dh_residual"] = r.dh_residual;
    rec["vector_form_mismatch"] = r.vector_form_mismatch;
    records.append(rec);
  }
  out["records"] = records;
  const int d = built.geometry->dim;
  py::array_t<double> pts({static_cast<py::ssize_t>(result.final_state.node_count()),
                           static_cast<py::ssize_t>(d)});
  std::copy(result.final_state.points.begin(), result.final_state.points.end(),
            pts.mutable_data());
  out["final_points"] = pts;
  return out;
}

py::list py_run_identities(const std::string& config_json) {
  RunConfig cfg = parse_run_config(config_json);
  BuiltGeometry built = build_geometry(cfg.geometry);
  std::optional<ImmersedGrid> grid;
  if (!cfg.resolution.empty() && !cfg.initial.kind.empty())
    grid = build_initial(cfg.initial, built, cfg.resolution, cfg.fd);
  SuiteOptions opt;
  opt.scheme = cfg.fd;
  opt.tol_scale = cfg.tol_scale;
  IdentitySuiteReport rep =
      run_suite(*built.connection, grid ? &*grid : nullptr, cfg.suite_samples, cfg.seed, opt);
  py::list out;
  for (const IdentityResult& r : rep.rows) {
    py::dict row;
    row["name"] = r.name;
    row["samples"] = r.samples;
    row["max_residual"] = r.max_residual;
    row["tolerance"] = r.tolerance;
    row["pass"] = r.pass;
    row["asserted"] = r.asserted;
    row["skipped"] = r.skipped;
    out.append(row);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(gmcf, m) {
  m.doc() = "generalized Lagrangian mean curvature flow in almost Kaehler charts";
  m.attr("__version__") = "0.1.0";

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<SpecError>(m, "SpecError");

  py::class_<PyGeometry>(m, "Geometry")
      .def_property_readonly("dim", &PyGeometry::dim)
      .def_property_readonly("name", &PyGeometry::name)
      .def_property_readonly("connection_name", &PyGeometry::connection_name)
      .def("metric", &PyGeometry::metric, py::arg("y"))
      .def("complex_structure", &PyGeometry::complex_structure, py::arg("y"))
      .def("omega", &PyGeometry::omega, py::arg("y"))
      .def("christoffels", &PyGeometry::christoffels, py::arg("y"))
      .def("torsion", &PyGeometry::torsion_at, py::arg("y"))
      .def("ricci_form", &PyGeometry::ricci_form_at, py::arg("y"))
      .def("check", &PyGeometry::check, py::arg("points") = 20, py::arg("seed") = 12345);

  py::class_<PyGrid>(m, "Grid")
      .def_property_readonly("shape", &PyGrid::shape)
      .def("points", &PyGrid::points)
      .def("velocity", &PyGrid::velocity)
      .def("diagnostics", &PyGrid::diagnostics);

  m.def("build_geometry", &py_build_geometry, py::arg("config_json"),
        "construct a chart geometry and its connection from a JSON run config");
  m.def("build_initial", &py_build_initial, py::arg("geometry"), py::arg("config_json"),
        "discretize the configured initial submanifold");
  m.def("run_flow", &py_run_flow, py::arg("config_json"),
        "integrate the generalized mean curvature flow described by the config");
  m.def("run_identities", &py_run_identities, py::arg("config_json"),
        "run the structural identity suite described by the config");
}
