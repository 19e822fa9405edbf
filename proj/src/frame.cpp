#include "gmcf/frame.hpp"

#include <cmath>
#include <string>

namespace gmcf {

namespace {

// min eigenvalue of a symmetric n x n (n <= 2) matrix
double min_eig_small(int n, const double m[kMaxN][kMaxN]) {
  if (n == 1) return m[0][0];
  const double tr = m[0][0] + m[1][1];
  const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
  const double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * det));
  return 0.5 * (tr - disc);
}

void invert_small(int n, const double m[kMaxN][kMaxN], double out[kMaxN][kMaxN],
                  const char* what) {
  if (n == 1) {
    if (m[0][0] == 0.0) throw SingularError(std::string(what) + ": singular");
    out[0][0] = 1.0 / m[0][0];
    return;
  }
  const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
  if (det == 0.0) throw SingularError(std::string(what) + ": singular");
  out[0][0] = m[1][1] / det;
  out[1][1] = m[0][0] / det;
  out[0][1] = -m[0][1] / det;
  out[1][0] = -m[1][0] / det;
}

struct AmbientEval {
  int d = 0;
  double g[kMaxDim][kMaxDim];
  double gi[kMaxDim][kMaxDim];
  double j[kMaxDim][kMaxDim];
  double omega[kMaxDim][kMaxDim];
  double dg[kMaxDim][kMaxDim][kMaxDim];      // d_c g_ab -> dg[a][b][c]
  double gamma_hat[kMaxDim][kMaxDim][kMaxDim];
  double gamma_lc[kMaxDim][kMaxDim][kMaxDim];
  double torsion[kMaxDim][kMaxDim][kMaxDim];
};

AmbientEval eval_ambient(const ImmersedGrid& grid, const ChartPoint& at) {
  AmbientEval amb;
  const ChartGeometry& geo = *grid.geometry;
  const int d = geo.dim;
  amb.d = d;
  DenseTensor g = geo.metric_at(at);
  DenseTensor j = geo.j_at(at);
  DenseTensor dg = geo.metric_d(at, grid.scheme);
  DenseTensor gh = grid.connection->gamma_at(at);
  DenseTensor gi = matrix_inverse(g);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      amb.g[a][b] = g(a, b);
      amb.gi[a][b] = gi(a, b);
      amb.j[a][b] = j(a, b);
    }
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      double w = 0.0;
      for (int m = 0; m < d; ++m) w += amb.j[m][a] * amb.g[m][b];
      amb.omega[a][b] = w;
    }
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c) {
        amb.dg[a][b][c] = dg(a, b, c);
        amb.gamma_hat[a][b][c] = gh(a, b, c);
      }
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c) {
        double s = 0.0;
        for (int m = 0; m < d; ++m)
          s += amb.gi[a][m] * (amb.dg[m][c][b] + amb.dg[m][b][c] - amb.dg[b][c][m]);
        amb.gamma_lc[a][b][c] = 0.5 * s;
        amb.torsion[a][b][c] = 0.0;
      }
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c)
        amb.torsion[a][b][c] = amb.gamma_hat[a][b][c] - amb.gamma_hat[a][c][b];
  return amb;
}

}  // namespace

double NodeFrame::ambient_norm(const double* v) const {
  double s = 0.0;
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b) s += amb_g[a][b] * v[a] * v[b];
  return std::sqrt(std::max(0.0, s));
}

NodeFrame node_frame(const ImmersedGrid& grid, const ImmersionDerivatives& derivs,
                     int node) {
  NodeFrame f;
  const int n = grid.intrinsic_dim;
  const int d = grid.geometry->dim;
  f.n = n;
  f.dim = d;
  const ChartPoint at = grid.point(node);
  const AmbientEval amb = eval_ambient(grid, at);

  for (int a = 0; a < d; ++a) f.F[a] = at[a];
  for (int i = 0; i < n; ++i) {
    const double* fi = derivs.first[static_cast<size_t>(i)].node(node);
    for (int a = 0; a < d; ++a) f.F_i[i][a] = fi[a];
    for (int j = 0; j < n; ++j) {
      const double* fij = derivs.second[static_cast<size_t>(i)][static_cast<size_t>(j)].node(node);
      for (int a = 0; a < d; ++a) f.F_ij[i][j][a] = fij[a];
    }
  }
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) f.amb_g[a][b] = amb.g[a][b];
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c) f.torsion_amb[a][b][c] = amb.torsion[a][b][c];

  // induced metric and omega pullback
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double sg = 0.0, sw = 0.0;
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
          sg += amb.g[a][b] * f.F_i[i][a] * f.F_i[j][b];
          sw += amb.omega[a][b] * f.F_i[i][a] * f.F_i[j][b];
        }
      f.g[i][j] = sg;
      f.omega[i][j] = sw;
    }
  invert_small(n, f.g, f.gi, "induced metric");

  // eta_ij = g_ij - omega_i^m omega_jm
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = f.g[i][j];
      for (int k = 0; k < n; ++k)
        for (int m = 0; m < n; ++m) s -= f.omega[i][k] * f.gi[k][m] * f.omega[j][m];
      f.eta[i][j] = s;
    }
  f.min_eig_g = min_eig_small(n, f.g);
  f.min_eig_eta = min_eig_small(n, f.eta);
  if (!(f.min_eig_eta >= 1e-6 * f.min_eig_g))
    throw SingularError("node " + std::to_string(node) +
                        " is not almost Lagrangian (eta degenerate)");
  invert_small(n, f.eta, f.etai, "eta");

  // phi F_k = J F_k - omega_k^l F_l  (normal projection)
  for (int k = 0; k < n; ++k) {
    for (int a = 0; a < d; ++a) {
      double v = 0.0;
      for (int b = 0; b < d; ++b) v += amb.j[a][b] * f.F_i[k][b];
      f.phi[k][a] = v;
    }
    for (int l = 0; l < n; ++l) {
      double wkl = 0.0;
      for (int m = 0; m < n; ++m) wkl += f.omega[k][m] * f.gi[m][l];
      for (int a = 0; a < d; ++a) f.phi[k][a] -= wkl * f.F_i[l][a];
    }
  }

  // d_i g_jk by the product rule (same FD ingredients as A_hat, so the
  // Koszul terms cancel exactly in s_kij + s_jik)
  double dgij[kMaxN][kMaxN][kMaxN];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int mu = 0; mu < d; ++mu)
          for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
              s += amb.dg[a][b][mu] * f.F_i[i][mu] * f.F_i[j][a] * f.F_i[k][b];
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b)
            s += amb.g[a][b] * (f.F_ij[i][j][a] * f.F_i[k][b] + f.F_i[j][a] * f.F_ij[i][k][b]);
        dgij[i][j][k] = s;
      }
  for (int m = 0; m < n; ++m)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int k = 0; k < n; ++k)
          s += f.gi[m][k] * 0.5 * (dgij[i][j][k] + dgij[j][i][k] - dgij[k][i][j]);
        f.gamma_ind[m][i][j] = s;
      }

  // second fundamental tensors
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int a = 0; a < d; ++a) {
        double base = f.F_ij[i][j][a];
        for (int m = 0; m < n; ++m) base -= f.gamma_ind[m][i][j] * f.F_i[m][a];
        double hat = base, cl = base;
        for (int b = 0; b < d; ++b)
          for (int c = 0; c < d; ++c) {
            hat += amb.gamma_hat[a][b][c] * f.F_i[i][b] * f.F_i[j][c];
            cl += amb.gamma_lc[a][b][c] * f.F_i[i][b] * f.F_i[j][c];
          }
        f.A_hat[i][j][a] = hat;
        f.A_cl[i][j][a] = cl;
      }

  // r, s, h tensors and the mean curvature form
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double r = 0.0, s = 0.0, h = 0.0;
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b) {
            r += amb.omega[a][b] * f.F_i[k][a] * f.A_hat[i][j][b];
            s += amb.g[a][b] * f.F_i[k][a] * f.A_hat[i][j][b];
            h += amb.g[a][b] * f.phi[k][a] * f.A_hat[i][j][b];
          }
        f.r_hat[k][i][j] = r;
        f.s_hat[k][i][j] = s;
        f.h_hat[k][i][j] = h;
      }
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j) s += f.gi[k][j] * f.h_hat[k][i][j];
    f.H_form[i] = s;
  }

  // classical mean curvature: eta^{ij} g^{kl} <A_kl, phi F_i> phi F_j
  double a_dot_phi[kMaxN][kMaxN][kMaxN];  // [k][l][i] = <A_kl, phi F_i>
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l)
      for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b) s += amb.g[a][b] * f.A_cl[k][l][a] * f.phi[i][b];
        a_dot_phi[k][l][i] = s;
      }
  for (int a = 0; a < d; ++a) f.H_classical[a] = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double coef = 0.0;
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) coef += f.gi[k][l] * a_dot_phi[k][l][i];
      coef *= f.etai[i][j];
      for (int a = 0; a < d; ++a) f.H_classical[a] += coef * f.phi[j][a];
    }

  // generalized vector: add the torsion contractions of Definition 4.1
  auto torsion_contract = [&](const double* x, const double* y, const double* z) {
    double s = 0.0;
    for (int a = 0; a < d; ++a) {
      double ta = 0.0;
      for (int b = 0; b < d; ++b)
        for (int c = 0; c < d; ++c) ta += amb.torsion[a][b][c] * x[b] * y[c];
      for (int b = 0; b < d; ++b) s += amb.g[a][b] * ta * z[b];
    }
    return s;
  };
  for (int a = 0; a < d; ++a) f.H_generalized[a] = f.H_classical[a];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double coef = 0.0;
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          coef += f.gi[k][l] * (torsion_contract(f.phi[i], f.F_i[k], f.F_i[l]) +
                                torsion_contract(f.F_i[i], f.F_i[k], f.phi[l]));
      coef *= f.etai[i][j];
      for (int a = 0; a < d; ++a) f.H_generalized[a] += coef * f.phi[j][a];
    }
  return f;
}

FrameField compute_frames(const ImmersedGrid& grid) {
  ImmersionDerivatives derivs = differentiate_immersion(grid);
  return compute_frames(grid, derivs);
}

FrameField compute_frames(const ImmersedGrid& grid, const ImmersionDerivatives& derivs) {
  FrameField out;
  const int nodes = grid.node_count();
  out.frames.reserve(static_cast<size_t>(nodes));
  for (int node = 0; node < nodes; ++node) out.frames.push_back(node_frame(grid, derivs, node));
  return out;
}

void gmc_vector_definition(const NodeFrame& frame, double* out) {
  for (int a = 0; a < frame.dim; ++a) out[a] = frame.H_generalized[a];
}

std::vector<double> gmc_vector_via_form(const ImmersedGrid& grid, const FrameField& frames) {
  const int n = grid.intrinsic_dim;
  const int d = grid.geometry->dim;
  const int nodes = grid.node_count();

  GridField omega_field(n * n, nodes);
  for (int node = 0; node < nodes; ++node) {
    const NodeFrame& f = frames.at(node);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) omega_field.node(node)[i * n + j] = f.omega[i][j];
  }
  std::array<GridField, kMaxN> domega;
  for (int k = 0; k < n; ++k) domega[static_cast<size_t>(k)] = grid_derivative(grid, omega_field, k);

  std::vector<double> out(static_cast<size_t>(nodes) * d, 0.0);
  for (int node = 0; node < nodes; ++node) {
    const NodeFrame& f = frames.at(node);
    // nabla_k omega_ij, then div_i = g^{kl} nabla_l omega_{ki}
    double nabla_omega[kMaxN][kMaxN][kMaxN];
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double s = domega[static_cast<size_t>(k)].node(node)[i * n + j];
          for (int m = 0; m < n; ++m)
            s -= f.gamma_ind[m][k][i] * f.omega[m][j] + f.gamma_ind[m][k][j] * f.omega[i][m];
          nabla_omega[k][i][j] = s;
        }
    double div[kMaxN];
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) s += f.gi[k][l] * nabla_omega[l][k][i];
      div[i] = s;
    }
    double bracket[kMaxN];
    for (int i = 0; i < n; ++i) {
      double s = f.H_form[i] - div[i];
      // - omega_i^m s_{mk}^k
      for (int m = 0; m < n; ++m) {
        double wim = 0.0;
        for (int l = 0; l < n; ++l) wim += f.omega[i][l] * f.gi[l][m];
        double smk = 0.0;
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) smk += f.gi[k][l] * f.s_hat[m][k][l];
        s -= wim * smk;
      }
      // - omega^{mk} s_{mki}
      for (int m = 0; m < n; ++m)
        for (int k = 0; k < n; ++k) {
          double wmk = 0.0;
          for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) wmk += f.gi[m][a] * f.gi[k][b] * f.omega[a][b];
          s -= wmk * f.s_hat[m][k][i];
        }
      bracket[i] = s;
    }
    double* v = out.data() + static_cast<size_t>(node) * d;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int a = 0; a < d; ++a) v[a] += f.etai[i][j] * bracket[i] * f.phi[j][a];
  }
  return out;
}

double connection_difference_residual(const Connection& conn, const ChartPoint& at,
                                      const double* X, const double* Y, const double* Z,
                                      const FdScheme& scheme, bool force_fd) {
  const ChartGeometry& geo = *conn.geometry;
  const int d = geo.dim;
  DenseTensor g = geo.metric_at(at);
  DenseTensor gamma_hat = conn.gamma_at(at);
  DenseTensor gamma_lc = levi_civita(geo, at, scheme, force_fd);
  auto pair_g = [&](const double* u, const double* v) {
    double s = 0.0;
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) s += g(a, b) * u[a] * v[b];
    return s;
  };
  double diff[kMaxDim] = {};
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c)
        diff[a] += (gamma_hat(a, b, c) - gamma_lc(a, b, c)) * X[b] * Y[c];
  auto tors = [&](const double* u, const double* v, double* w) {
    for (int a = 0; a < d; ++a) {
      double s = 0.0;
      for (int b = 0; b < d; ++b)
        for (int c = 0; c < d; ++c)
          s += (gamma_hat(a, b, c) - gamma_hat(a, c, b)) * u[b] * v[c];
      w[a] = s;
    }
  };
  double txy[kMaxDim], tzx[kMaxDim], tzy[kMaxDim];
  tors(X, Y, txy);
  tors(Z, X, tzx);
  tors(Z, Y, tzy);
  const double lhs = 2.0 * pair_g(diff, Z);
  const double rhs = pair_g(txy, Z) + pair_g(tzx, Y) + pair_g(tzy, X);
  return std::abs(lhs - rhs);
}

namespace {

double form_norm_induced(const NodeFrame& f, const double alpha[kMaxN][kMaxN]) {
  double s = 0.0;
  const int n = f.n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) s += alpha[i][j] * alpha[k][l] * f.gi[i][k] * f.gi[j][l];
  return std::sqrt(std::max(0.0, s));
}

}  // namespace

LagrangianDiagnostics lagrangian_diagnostics(const ImmersedGrid& grid) {
  return lagrangian_diagnostics(grid, compute_frames(grid));
}

LagrangianDiagnostics lagrangian_diagnostics(const ImmersedGrid& grid,
                                             const FrameField& frames) {
  LagrangianDiagnostics diag;
  const int n = grid.intrinsic_dim;
  const int d = grid.geometry->dim;
  const int nodes = grid.node_count();
  diag.eta_margin = 1e300;
  for (int node = 0; node < nodes; ++node) {
    const NodeFrame& f = frames.at(node);
    diag.max_pullback_omega = std::max(diag.max_pullback_omega, form_norm_induced(f, f.omega));
    diag.eta_margin = std::min(diag.eta_margin, f.min_eig_eta / f.min_eig_g);
  }

  std::vector<double> via_form = gmc_vector_via_form(grid, frames);
  for (int node = 0; node < nodes; ++node) {
    const NodeFrame& f = frames.at(node);
    double diff[kMaxDim];
    for (int a = 0; a < d; ++a)
      diff[a] = f.H_generalized[a] - via_form[static_cast<size_t>(node) * d + a];
    diag.vector_form_mismatch = std::max(diag.vector_form_mismatch, f.ambient_norm(diff));
  }

  if (n == 2) {
    GridField h_field(n, nodes);
    for (int node = 0; node < nodes; ++node)
      for (int i = 0; i < n; ++i) h_field.node(node)[i] = frames.at(node).H_form[i];
    GridField dh0 = grid_derivative(grid, h_field, 0);
    GridField dh1 = grid_derivative(grid, h_field, 1);
    for (int node = 0; node < nodes; ++node) {
      const NodeFrame& f = frames.at(node);
      DenseTensor rho = ricci_form(*grid.connection, grid.point(node), grid.scheme);
      double total[kMaxN][kMaxN] = {};
      const double dh01 = dh0.node(node)[1] - dh1.node(node)[0];
      total[0][1] = dh01;
      total[1][0] = -dh01;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double s = 0.0;
          for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) s += rho(a, b) * f.F_i[i][a] * f.F_i[j][b];
          total[i][j] += s;
        }
      diag.dh_residual = std::max(diag.dh_residual, form_norm_induced(f, total));
    }
  }
  return diag;
}

double propagated_fd_error(const ImmersedGrid& grid, const FrameField& frames) {
  double h = 0.0;
  for (double s : grid.spacing) h = std::max(h, s);
  double scale = 1.0;
  for (const NodeFrame& f : frames.frames) {
    for (int i = 0; i < f.n; ++i)
      for (int j = 0; j < f.n; ++j)
        scale = std::max(scale, f.ambient_norm(f.A_hat[i][j]));
    for (int a = 0; a < f.dim; ++a)
      for (int b = 0; b < f.dim; ++b)
        for (int c = 0; c < f.dim; ++c) scale = std::max(scale, std::abs(f.torsion_amb[a][b][c]));
  }
  return std::pow(h, grid.scheme.order) * scale;
}

}  // namespace gmcf
