#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gmcf/frame.hpp"
#include "gmcf/zoo.hpp"

using namespace gmcf;

namespace {

BuiltGeometry flat(int n) {
  GeometrySpec spec;
  spec.kind = "flat_cn";
  spec.params["n"] = n;
  return build_geometry(spec);
}

BuiltGeometry cotangent_torus() {
  GeometrySpec spec;
  spec.kind = "cotangent_bundle";
  spec.base_kind = "torus_of_revolution";
  spec.base_params["a"] = 2.0;
  spec.base_params["b"] = 0.5;
  return build_geometry(spec);
}

ImmersedGrid circle_grid(const BuiltGeometry& b, double r, int nodes) {
  InitialSubmanifoldSpec init;
  init.kind = "circle";
  init.params["r"] = r;
  return build_initial(init, b, {nodes});
}

ImmersedGrid torus_grid(const BuiltGeometry& b, double r1, double r2, int nodes) {
  InitialSubmanifoldSpec init;
  init.kind = "product_torus";
  init.params["r1"] = r1;
  init.params["r2"] = r2;
  return build_initial(init, b, {nodes, nodes});
}

ImmersedGrid graph_grid(const BuiltGeometry& b, int nodes, double amp = 1.0) {
  InitialSubmanifoldSpec init;
  init.kind = "graph_of_one_form";
  init.params["c1"] = 0.1 * amp;
  init.params["c2"] = 0.05 * amp;
  init.params["pot_amp"] = 0.05 * amp;
  init.params["pot_amp2"] = 0.04 * amp;
  init.params["pot_mix"] = 0.03 * amp;
  return build_initial(init, b, {nodes, nodes});
}

ImmersedGrid perturbed_torus(const BuiltGeometry& b, double eps, int nodes) {
  InitialSubmanifoldSpec init;
  init.kind = "perturbed";
  init.base_kind = "product_torus";
  init.params["r1"] = 1.0;
  init.params["r2"] = 1.0;
  init.params["eps"] = eps;
  return build_initial(init, b, {nodes, nodes});
}

}  // namespace

TEST_CASE("circle immersion derivatives match the analytic tangent") {
  BuiltGeometry b = flat(1);
  const double r = 1.3;
  ImmersedGrid grid = circle_grid(b, r, 64);
  ImmersionDerivatives derivs = differentiate_immersion(grid);
  const double h = grid.spacing[0];
  const double tol = 2.0 * std::pow(h, 4) * r;  // C h^4 with order-4 stencils
  for (int node = 0; node < grid.node_count(); ++node) {
    const double s = grid.intrinsic_coord(0, node);
    const double* fs = derivs.first[0].node(node);
    CHECK(std::abs(fs[0] - (-r * std::sin(s))) < tol);
    CHECK(std::abs(fs[1] - (r * std::cos(s))) < tol);
  }
}

TEST_CASE("constant map fails the immersion rank check") {
  BuiltGeometry b = flat(1);
  ImmersedGrid grid = circle_grid(b, 1.0, 16);
  for (int node = 0; node < grid.node_count(); ++node)
    grid.set_point(node, ChartPoint::of({0.5, 0.5}));
  CHECK_THROWS_AS(differentiate_immersion(grid), GeometryError);
}

TEST_CASE("product torus tangent lengths are the factor radii") {
  BuiltGeometry b = flat(2);
  ImmersedGrid grid = torus_grid(b, 1.0, 0.7, 16);
  FrameField frames = compute_frames(grid);
  for (const NodeFrame& f : frames.frames) {
    CHECK(std::sqrt(f.g[0][0]) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(std::sqrt(f.g[1][1]) == doctest::Approx(0.7).epsilon(1e-3));
    CHECK(std::abs(f.g[0][1]) < 1e-12);
  }
}

TEST_CASE("circle frame reproduces the geodesic curvature") {
  BuiltGeometry b = flat(1);
  for (double r : {0.5, 1.0, 2.0}) {
    ImmersedGrid grid = circle_grid(b, r, 128);
    FrameField frames = compute_frames(grid);
    for (int node = 0; node < grid.node_count(); ++node) {
      const NodeFrame& f = frames.at(node);
      // H_form is 1 for every radius in this parameterization; the vector
      // has length 1/r and points inward
      CHECK(f.H_form[0] == doctest::Approx(1.0).epsilon(1e-6));
      CHECK(f.ambient_norm(f.H_generalized) == doctest::Approx(1.0 / r).epsilon(1e-6));
      const double s = grid.intrinsic_coord(0, node);
      CHECK(f.H_generalized[0] ==
            doctest::Approx(-std::cos(s) / r).epsilon(1e-5).scale(1.0));
      CHECK(f.H_generalized[1] ==
            doctest::Approx(-std::sin(s) / r).epsilon(1e-5).scale(1.0));
    }
  }
}

TEST_CASE("unit product torus has |H| = sqrt(2) everywhere") {
  BuiltGeometry b = flat(2);
  ImmersedGrid grid = torus_grid(b, 1.0, 1.0, 24);
  FrameField frames = compute_frames(grid);
  for (const NodeFrame& f : frames.frames) {
    CHECK(f.ambient_norm(f.H_classical) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
    // flat space, torsion-free connection: generalized == classical
    for (int a = 0; a < 4; ++a)
      CHECK(f.H_generalized[a] == doctest::Approx(f.H_classical[a]).epsilon(1e-12));
  }
}

TEST_CASE("Lagrangian nodes have eta = g and eta-inverse = g-inverse") {
  BuiltGeometry b = flat(2);
  ImmersedGrid grid = torus_grid(b, 1.0, 1.0, 16);
  FrameField frames = compute_frames(grid);
  for (const NodeFrame& f : frames.frames)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        CHECK(std::abs(f.eta[i][j] - f.g[i][j]) < 1e-13);
        CHECK(std::abs(f.etai[i][j] - f.gi[i][j]) < 1e-12);
      }
}

TEST_CASE("normal projection is orthogonal to the tangent space") {
  BuiltGeometry b = cotangent_torus();
  ImmersedGrid grid = graph_grid(b, 24);
  FrameField frames = compute_frames(grid);
  for (const NodeFrame& f : frames.frames)
    for (int k = 0; k < 2; ++k)
      for (int m = 0; m < 2; ++m) {
        double dot = 0.0;
        for (int a = 0; a < 4; ++a)
          for (int bb = 0; bb < 4; ++bb) dot += f.amb_g[a][bb] * f.phi[k][a] * f.F_i[m][bb];
        CHECK(std::abs(dot) < 1e-12);
      }
}

TEST_CASE("antisymmetrized A_hat equals the pulled-back torsion") {
  BuiltGeometry b = cotangent_torus();
  ImmersedGrid grid = graph_grid(b, 24);
  FrameField frames = compute_frames(grid);
  double max_res = 0.0, max_torsion = 0.0;
  for (const NodeFrame& f : frames.frames)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int a = 0; a < 4; ++a) {
          double tf = 0.0;
          for (int bb = 0; bb < 4; ++bb)
            for (int c = 0; c < 4; ++c)
              tf += f.torsion_amb[a][bb][c] * f.F_i[i][bb] * f.F_i[j][c];
          max_res = std::max(max_res, std::abs(f.A_hat[i][j][a] - f.A_hat[j][i][a] - tf));
          max_torsion = std::max(max_torsion, std::abs(tf));
        }
  CHECK(max_torsion > 1e-3);  // the connection genuinely has torsion here
  CHECK(max_res < 1e-12);
}

TEST_CASE("s_kij is skew in its outer indices to near machine precision") {
  BuiltGeometry b = cotangent_torus();
  ImmersedGrid grid = graph_grid(b, 24);
  FrameField frames = compute_frames(grid);
  for (const NodeFrame& f : frames.frames)
    for (int k = 0; k < 2; ++k)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          CHECK(std::abs(f.s_hat[k][i][j] + f.s_hat[j][i][k]) < 1e-11);
}

TEST_CASE("h, r, s and the mean curvature form relations are algebraic") {
  BuiltGeometry b = cotangent_torus();
  ImmersedGrid grid = graph_grid(b, 16);
  FrameField frames = compute_frames(grid);
  for (const NodeFrame& f : frames.frames) {
    for (int k = 0; k < 2; ++k)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          double want = f.r_hat[k][i][j];
          for (int m = 0; m < 2; ++m) {
            double wkm = 0.0;
            for (int l = 0; l < 2; ++l) wkm += f.omega[k][l] * f.gi[l][m];
            want -= wkm * f.s_hat[m][i][j];
          }
          CHECK(std::abs(f.h_hat[k][i][j] - want) < 1e-12);
        }
    for (int i = 0; i < 2; ++i) {
      // H_i = r_{ki}^k + omega^{mk} s_{mik}
      double want = 0.0;
      for (int k = 0; k < 2; ++k)
        for (int j = 0; j < 2; ++j) want += f.gi[k][j] * f.r_hat[k][i][j];
      for (int m = 0; m < 2; ++m)
        for (int k = 0; k < 2; ++k) {
          double wmk = 0.0;
          for (int a = 0; a < 2; ++a)
            for (int bb = 0; bb < 2; ++bb) wmk += f.gi[m][a] * f.gi[k][bb] * f.omega[a][bb];
          want += wmk * f.s_hat[m][i][k];
        }
      CHECK(std::abs(f.H_form[i] - want) < 1e-12);
    }
  }
}

TEST_CASE("nabla omega equals the r-tensor antisymmetrization") {
  BuiltGeometry b = flat(2);
  ImmersedGrid grid = perturbed_torus(b, 0.05, 48);
  FrameField frames = compute_frames(grid);
  const int n = 2, nodes = grid.node_count();

  GridField omega_field(n * n, nodes);
  for (int node = 0; node < nodes; ++node)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        omega_field.node(node)[i * n + j] = frames.at(node).omega[i][j];
  GridField dw0 = grid_derivative(grid, omega_field, 0);
  GridField dw1 = grid_derivative(grid, omega_field, 1);

  double max_res = 0.0, max_lhs = 0.0;
  for (int node = 0; node < nodes; ++node) {
    const NodeFrame& f = frames.at(node);
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const GridField& dwk = k == 0 ? dw0 : dw1;
          double lhs = dwk.node(node)[i * n + j];
          for (int m = 0; m < n; ++m)
            lhs -= f.gamma_ind[m][k][i] * f.omega[m][j] + f.gamma_ind[m][k][j] * f.omega[i][m];
          const double rhs = f.r_hat[i][k][j] - f.r_hat[j][k][i];
          max_res = std::max(max_res, std::abs(lhs - rhs));
          max_lhs = std::max(max_lhs, std::abs(lhs));
        }
  }
  CHECK(max_lhs > 1e-4);  // the perturbed torus has genuinely varying omega
  CHECK(max_res < 10.0 * propagated_fd_error(grid, frames));
}

TEST_CASE("H_form does not depend on the induced Christoffels") {
  BuiltGeometry b = cotangent_torus();
  ImmersedGrid grid = graph_grid(b, 16);
  ImmersionDerivatives derivs = differentiate_immersion(grid);
  FrameField frames = compute_frames(grid, derivs);
  for (int node = 0; node < grid.node_count(); ++node) {
    const NodeFrame& f = frames.at(node);
    // recompute H_i with the induced-Christoffel term dropped: it pairs with
    // phi F_k through <phi F_k, F_m> = 0
    for (int i = 0; i < 2; ++i) {
      double h_without = 0.0;
      for (int k = 0; k < 2; ++k)
        for (int j = 0; j < 2; ++j) {
          double a_no_gamma[kMaxDim];
          for (int a = 0; a < 4; ++a) {
            a_no_gamma[a] = f.A_hat[i][j][a];
            for (int m = 0; m < 2; ++m) a_no_gamma[a] += f.gamma_ind[m][i][j] * f.F_i[m][a];
          }
          double dot = 0.0;
          for (int a = 0; a < 4; ++a)
            for (int bb = 0; bb < 4; ++bb) dot += f.amb_g[a][bb] * f.phi[k][a] * a_no_gamma[bb];
          h_without += f.gi[k][j] * dot;
        }
      CHECK(std::abs(h_without - f.H_form[i]) < 1e-11);
    }
  }
}

TEST_CASE("mean curvature vector: definition and form routes agree") {
  BuiltGeometry b = flat(2);
  SUBCASE("exact product torus") {
    ImmersedGrid grid = torus_grid(b, 1.0, 1.0, 24);
    FrameField frames = compute_frames(grid);
    std::vector<double> via = gmc_vector_via_form(grid, frames);
    for (int node = 0; node < grid.node_count(); ++node) {
      const NodeFrame& f = frames.at(node);
      double diff[kMaxDim];
      for (int a = 0; a < 4; ++a) diff[a] = f.H_generalized[a] - via[static_cast<size_t>(node) * 4 + a];
      CHECK(f.ambient_norm(diff) < 1e-8);
    }
  }
  SUBCASE("perturbed torus converges under refinement") {
    ImmersedGrid coarse = perturbed_torus(b, 0.05, 24);
    ImmersedGrid fine = perturbed_torus(b, 0.05, 48);
    LagrangianDiagnostics dc = lagrangian_diagnostics(coarse);
    LagrangianDiagnostics df = lagrangian_diagnostics(fine);
    FrameField fc = compute_frames(coarse);
    FrameField ff = compute_frames(fine);
    CHECK(dc.vector_form_mismatch < 10.0 * propagated_fd_error(coarse, fc));
    CHECK(df.vector_form_mismatch < 10.0 * propagated_fd_error(fine, ff));
    CHECK(dc.vector_form_mismatch / df.vector_form_mismatch > 3.0);
  }
  SUBCASE("graph in the curved cotangent chart") {
    BuiltGeometry ct = cotangent_torus();
    ImmersedGrid grid = graph_grid(ct, 32);
    FrameField frames = compute_frames(grid);
    LagrangianDiagnostics diag = lagrangian_diagnostics(grid, frames);
    CHECK(diag.vector_form_mismatch < 10.0 * propagated_fd_error(grid, frames));
  }
}

TEST_CASE("connection difference residual against the torsion relation") {
  BuiltGeometry b = cotangent_torus();
  const ChartPoint p = ChartPoint::of({1.1, 0.4, 0.3, -0.2});
  const double x[4] = {1.0, 0.2, -0.4, 0.7};
  const double y[4] = {0.3, -1.0, 0.5, 0.1};
  const double z[4] = {-0.2, 0.6, 1.0, -0.5};
  CHECK(connection_difference_residual(*b.connection, p, x, y, z) < 1e-6);

  // shifted flat connection with random vectors
  BuiltGeometry f = flat(1);
  OneFormField sigma = [](const ChartPoint& q) {
    DenseTensor s({2}, {Variance::Lower});
    s.ref(0) = std::sin(q[1]);
    s.ref(1) = 0.2 * std::cos(q[0]);
    return s;
  };
  Connection shifted = shift_connection(*f.connection, sigma);
  const double x2[2] = {0.8, -0.3};
  const double y2[2] = {0.1, 1.1};
  const double z2[2] = {-0.7, 0.4};
  CHECK(connection_difference_residual(shifted, ChartPoint::of({0.3, 0.9}), x2, y2, z2) <
        1e-8);

  // Levi-Civita: both sides vanish
  CHECK(connection_difference_residual(*f.connection, ChartPoint::of({0.1, 0.2}), x2, y2,
                                       z2) < 1e-13);
}

TEST_CASE("zero section of T* torus is stationary") {
  BuiltGeometry b = cotangent_torus();
  InitialSubmanifoldSpec init;
  init.kind = "zero_section";
  ImmersedGrid grid = build_initial(init, b, {24, 24});
  FrameField frames = compute_frames(grid);
  std::vector<double> via = gmc_vector_via_form(grid, frames);
  double sup_def = 0.0, sup_via = 0.0;
  for (int node = 0; node < grid.node_count(); ++node) {
    const NodeFrame& f = frames.at(node);
    sup_def = std::max(sup_def, f.ambient_norm(f.H_generalized));
    sup_via = std::max(sup_via, f.ambient_norm(via.data() + static_cast<size_t>(node) * 4));
  }
  CHECK(sup_def < 1e-6);
  CHECK(sup_via < 1e-6);
}

TEST_CASE("lagrangian diagnostics on the canonical examples") {
  SUBCASE("product torus in flat C2") {
    BuiltGeometry b = flat(2);
    ImmersedGrid grid = torus_grid(b, 1.0, 1.0, 32);
    LagrangianDiagnostics diag = lagrangian_diagnostics(grid);
    CHECK(diag.dh_residual < 1e-6);
    CHECK(diag.max_pullback_omega < 1e-12);
    CHECK(diag.eta_margin == doctest::Approx(1.0).epsilon(1e-10));
  }
  SUBCASE("graph of a closed one-form in T*(torus of revolution)") {
    BuiltGeometry b = cotangent_torus();
    ImmersedGrid grid = graph_grid(b, 48, 0.4);
    LagrangianDiagnostics diag = lagrangian_diagnostics(grid);
    CHECK(diag.dh_residual < 1e-5);
  }
  SUBCASE("circle has no 2-forms") {
    BuiltGeometry b = flat(1);
    ImmersedGrid grid = circle_grid(b, 1.0, 32);
    LagrangianDiagnostics diag = lagrangian_diagnostics(grid);
    CHECK(diag.dh_residual == 0.0);
    CHECK(diag.max_pullback_omega < 1e-15);
  }
}

TEST_CASE("eta degeneracy is detected") {
  SUBCASE("rank failure when the immersion collapses") {
    BuiltGeometry b = flat(1);
    ImmersedGrid grid = circle_grid(b, 1.0, 32);
    for (int node = 0; node < grid.node_count(); ++node) {
      ChartPoint p = grid.point(node);
      p[1] *= 1e-9;
      grid.set_point(node, p);
    }
    CHECK_THROWS(compute_frames(grid));
  }
  SUBCASE("full-rank torus inside a complex line has J(TM) meeting TM") {
    BuiltGeometry b = flat(2);
    InitialSubmanifoldSpec any;
    any.kind = "product_torus";
    ImmersedGrid grid = build_initial(any, b, {16, 16});
    for (int node = 0; node < grid.node_count(); ++node) {
      auto [i, j] = grid.unflatten(node);
      const double s = grid.intrinsic_coord(0, i);
      const double t = grid.intrinsic_coord(1, j);
      const double rho = 1.5 + 0.4 * std::cos(t);
      grid.set_point(node,
                     ChartPoint::of({rho * std::cos(s), rho * std::sin(s),
                                     0.2 * std::sin(t), 0.0}));
    }
    // dF keeps rank 2 but at cos t = 0 the tangent plane contains J F_s
    differentiate_immersion(grid);  // rank check passes
    CHECK_THROWS_AS(compute_frames(grid), SingularError);
  }
}
