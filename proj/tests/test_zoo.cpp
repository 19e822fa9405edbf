#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gmcf/frame.hpp"
#include "gmcf/zoo.hpp"

using namespace gmcf;

namespace {

GeometrySpec spec_of(const std::string& kind) {
  GeometrySpec s;
  s.kind = kind;
  if (kind == "conformal_plane") {
    s.params["psi_amp"] = 0.15;
  } else if (kind == "cotangent_bundle") {
    s.base_kind = "torus_of_revolution";
    s.base_params["a"] = 2.0;
    s.base_params["b"] = 0.5;
  }
  return s;
}

}  // namespace

TEST_CASE("every zoo geometry passes the geometry checkers at random points") {
  for (const std::string& kind : {"flat_cn", "conformal_plane", "cotangent_bundle"}) {
    GeometrySpec spec = spec_of(kind);
    BuiltGeometry b = build_geometry(spec);
    std::vector<ChartPoint> pts = sample_chart_points(*b.geometry, 20, 2024, 0.1);
    CheckReport sr = check_structure(*b.geometry, pts, 1e-8);
    CheckReport cr = check_connection_class(*b.connection, pts, 1e-6);
    EinsteinReport er = einstein_report(*b.connection, pts);
    INFO(kind);
    CHECK(sr.pass);
    CHECK(cr.pass);
    CHECK(er.residual < 1e-6);
    CHECK(std::abs(er.f_estimate) < 1e-6);  // all three ship Ricci-flat connections
  }
}

TEST_CASE("flat C1 ships the zero connection") {
  BuiltGeometry b = build_geometry(spec_of("flat_cn"));
  const ChartPoint p = ChartPoint::of({0.7, -1.1});
  CHECK(b.connection->gamma_at(p).inf_norm() == 0.0);
  CHECK(ricci_form(*b.connection, p).inf_norm() < 1e-12);
}

TEST_CASE("cotangent bundle over a flat circle base is globally flat") {
  GeometrySpec spec;
  spec.kind = "cotangent_bundle";
  spec.base_kind = "flat_torus";
  spec.base_params["n"] = 1;
  BuiltGeometry b = build_geometry(spec);
  for (const ChartPoint& p : sample_chart_points(*b.geometry, 10, 5, 0.1)) {
    CHECK(b.connection->gamma_at(p).inf_norm() < 1e-14);
    DenseTensor g = b.geometry->metric_at(p);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        CHECK(g(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-14));
  }
}

TEST_CASE("invalid specs are rejected") {
  GeometrySpec bad;
  bad.kind = "flat_cn";
  bad.params["n"] = 3;
  CHECK_THROWS_AS(build_geometry(bad), SpecError);

  GeometrySpec torus;
  torus.kind = "cotangent_bundle";
  torus.base_kind = "torus_of_revolution";
  torus.base_params["a"] = 1.0;
  torus.base_params["b"] = 1.5;  // needs a > b
  CHECK_THROWS_AS(build_geometry(torus), SpecError);

  CHECK_THROWS_AS(build_geometry(GeometrySpec{"nope", {}, "", {}}), SpecError);
}

TEST_CASE("circle initial data is a valid grid with the exact radius") {
  BuiltGeometry b = build_geometry(spec_of("flat_cn"));
  InitialSubmanifoldSpec init;
  init.kind = "circle";
  init.params["r"] = 1.0;
  ImmersedGrid grid = build_initial(init, b, {64});
  CHECK(grid.node_count() == 64);
  for (int node = 0; node < grid.node_count(); ++node) {
    ChartPoint p = grid.point(node);
    CHECK(std::abs(p[0] * p[0] + p[1] * p[1] - 1.0) < 1e-14);
  }
}

TEST_CASE("product torus pullback of omega vanishes to machine precision") {
  GeometrySpec spec;
  spec.kind = "flat_cn";
  spec.params["n"] = 2;
  BuiltGeometry b = build_geometry(spec);
  InitialSubmanifoldSpec init;
  init.kind = "product_torus";
  init.params["r1"] = 1.0;
  init.params["r2"] = 1.0;
  ImmersedGrid grid = build_initial(init, b, {24, 24});
  LagrangianDiagnostics diag = lagrangian_diagnostics(grid);
  CHECK(diag.max_pullback_omega < 1e-13);
}

TEST_CASE("graphs of closed one-forms are Lagrangian up to grid truncation") {
  BuiltGeometry b = build_geometry(spec_of("cotangent_bundle"));
  InitialSubmanifoldSpec init;
  init.kind = "graph_of_one_form";
  init.params["c1"] = 0.1;
  init.params["c2"] = 0.05;
  init.params["pot_amp"] = 0.05;
  init.params["pot_amp2"] = 0.04;
  init.params["pot_mix"] = 0.03;

  FdScheme order2;
  order2.order = 2;
  ImmersedGrid coarse = build_initial(init, b, {24, 24}, order2);
  ImmersedGrid fine = build_initial(init, b, {48, 48}, order2);
  const double omega_coarse = lagrangian_diagnostics(coarse).max_pullback_omega;
  const double omega_fine = lagrangian_diagnostics(fine).max_pullback_omega;
  CHECK(omega_coarse < 1e-2);          // < C h^2
  CHECK(omega_coarse > 1e-8);          // FD route is not exact
  CHECK(omega_coarse / omega_fine > 3.0);  // h-halving reduces at the scheme order
}

TEST_CASE("zero_section and graph satisfy the almost-Lagrangian margin") {
  BuiltGeometry b = build_geometry(spec_of("cotangent_bundle"));
  for (const std::string& kind : {"zero_section", "graph_of_one_form"}) {
    InitialSubmanifoldSpec init;
    init.kind = kind;
    init.params["c1"] = 0.1;
    init.params["pot_amp"] = 0.05;
    ImmersedGrid grid = build_initial(init, b, {16, 16});
    FrameField frames = compute_frames(grid);
    for (const NodeFrame& f : frames.frames)
      CHECK(f.min_eig_eta >= 0.5 * f.min_eig_g);
  }
}

TEST_CASE("perturbed with eps = 0 reproduces the base kind bit for bit") {
  GeometrySpec spec;
  spec.kind = "flat_cn";
  spec.params["n"] = 2;
  BuiltGeometry b = build_geometry(spec);

  InitialSubmanifoldSpec base;
  base.kind = "product_torus";
  base.params["r1"] = 1.0;
  base.params["r2"] = 0.8;
  InitialSubmanifoldSpec pert;
  pert.kind = "perturbed";
  pert.base_kind = "product_torus";
  pert.params = base.params;
  pert.params["eps"] = 0.0;

  ImmersedGrid g0 = build_initial(base, b, {16, 16});
  ImmersedGrid g1 = build_initial(pert, b, {16, 16});
  REQUIRE(g0.points.size() == g1.points.size());
  for (std::size_t i = 0; i < g0.points.size(); ++i) CHECK(g0.points[i] == g1.points[i]);
}

TEST_CASE("perturbed torus stays almost Lagrangian at eps = 0.05") {
  GeometrySpec spec;
  spec.kind = "flat_cn";
  spec.params["n"] = 2;
  BuiltGeometry b = build_geometry(spec);
  InitialSubmanifoldSpec pert;
  pert.kind = "perturbed";
  pert.base_kind = "product_torus";
  pert.params["r1"] = 1.0;
  pert.params["r2"] = 1.0;
  pert.params["eps"] = 0.05;
  ImmersedGrid grid = build_initial(pert, b, {24, 24});
  LagrangianDiagnostics diag = lagrangian_diagnostics(grid);
  CHECK(diag.max_pullback_omega > 1e-3);  // genuinely non-Lagrangian
  CHECK(diag.eta_margin > 0.9);           // but comfortably almost Lagrangian
}

TEST_CASE("incompatible initial/geometry pairs are rejected") {
  BuiltGeometry flat1 = build_geometry(spec_of("flat_cn"));
  InitialSubmanifoldSpec torus;
  torus.kind = "product_torus";
  CHECK_THROWS_AS(build_initial(torus, flat1, {16, 16}), SpecError);

  InitialSubmanifoldSpec circle;
  circle.kind = "circle";
  CHECK_THROWS_AS(build_initial(circle, flat1, {4}), GeometryError);  // shape < 8
}
