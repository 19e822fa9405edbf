#include "gmcf/geometry.hpp"

#include <cmath>
#include <random>

namespace gmcf {

DenseTensor ChartGeometry::metric_at(const ChartPoint& at) const {
  DenseTensor g = metric(at);
  if (g.rank() != 2 || g.dims()[0] != dim || g.dims()[1] != dim)
    throw GeometryError("metric: wrong shape");
  g.require_finite("metric");
  return g;
}

DenseTensor ChartGeometry::j_at(const ChartPoint& at) const {
  DenseTensor j = complex_structure(at);
  if (j.rank() != 2 || j.dims()[0] != dim || j.dims()[1] != dim)
    throw GeometryError("complex structure: wrong shape");
  j.require_finite("complex structure");
  return j;
}

DenseTensor ChartGeometry::metric_d(const ChartPoint& at, const FdScheme& scheme,
                                    bool force_fd) const {
  if (metric_derivative && !force_fd) return metric_derivative(at);
  return fd_derivative(metric, at, scheme);
}

DenseTensor ChartGeometry::j_d(const ChartPoint& at, const FdScheme& scheme,
                               bool force_fd) const {
  if (complex_structure_derivative && !force_fd) return complex_structure_derivative(at);
  return fd_derivative(complex_structure, at, scheme);
}

DenseTensor ChartGeometry::omega_at(const ChartPoint& at) const {
  DenseTensor g = metric_at(at);
  DenseTensor j = j_at(at);
  DenseTensor w({dim, dim}, {Variance::Lower, Variance::Lower});
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b) {
      double s = 0.0;
      for (int m = 0; m < dim; ++m) s += j(m, a) * g(m, b);
      w.ref(a, b) = s;
    }
  return w;
}

DenseTensor ChartGeometry::omega_d(const ChartPoint& at, const FdScheme& scheme,
                                   bool force_fd) const {
  if (has_analytic_derivatives() && !force_fd) {
    DenseTensor g = metric_at(at);
    DenseTensor j = j_at(at);
    DenseTensor dg = metric_d(at, scheme);
    DenseTensor dj = j_d(at, scheme);
    DenseTensor out({dim, dim, dim}, {Variance::Lower, Variance::Lower, Variance::Lower});
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < dim; ++b)
        for (int c = 0; c < dim; ++c) {
          double s = 0.0;
          for (int m = 0; m < dim; ++m)
            s += dj(m, a, c) * g(m, b) + j(m, a) * dg(m, b, c);
          out.ref(a, b, c) = s;
        }
    return out;
  }
  auto field = [this](const ChartPoint& p) { return omega_at(p); };
  return fd_derivative(field, at, scheme);
}

bool ChartGeometry::inside_box(const ChartPoint& at, double margin) const {
  for (int i = 0; i < dim; ++i) {
    const CoordSpec& cs = coords[static_cast<size_t>(i)];
    if (cs.periodic) continue;
    if (at[i] < cs.lo + margin || at[i] > cs.hi - margin) return false;
  }
  return true;
}

DenseTensor Connection::gamma_at(const ChartPoint& at) const {
  DenseTensor g = christoffels(at);
  g.require_finite("christoffels");
  return g;
}

DenseTensor Connection::gamma_d(const ChartPoint& at, const FdScheme& scheme,
                                bool force_fd) const {
  if (christoffel_derivative && !force_fd) return christoffel_derivative(at);
  return fd_derivative(christoffels, at, scheme);
}

double CheckReport::max_of(const std::string& key) const {
  double m = 0.0;
  for (const Row& r : rows) {
    auto it = r.residuals.find(key);
    if (it != r.residuals.end()) m = std::max(m, it->second);
  }
  return m;
}

DenseTensor levi_civita(const ChartGeometry& geometry, const ChartPoint& at,
                        const FdScheme& scheme, bool force_fd) {
  const int d = geometry.dim;
  DenseTensor g = geometry.metric_at(at);
  DenseTensor gi = matrix_inverse(g);
  DenseTensor dg = geometry.metric_d(at, scheme, force_fd);
  DenseTensor gamma({d, d, d}, {Variance::Upper, Variance::Lower, Variance::Lower});
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c) {
        double s = 0.0;
        for (int m = 0; m < d; ++m)
          s += gi(a, m) * (dg(m, c, b) + dg(m, b, c) - dg(b, c, m));
        gamma.ref(a, b, c) = 0.5 * s;
      }
  return gamma;
}

namespace {

// (nabla_b J)^a_c from dJ, Gamma
DenseTensor nabla_j(int d, const DenseTensor& dj, const DenseTensor& j,
                    const DenseTensor& gamma) {
  DenseTensor out({d, d, d}, {Variance::Upper, Variance::Lower, Variance::Lower});
  // out(a, b, c) = (nabla_b J)^a_c
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c) {
        double s = dj(a, c, b);
        for (int m = 0; m < d; ++m)
          s += gamma(a, b, m) * j(m, c) - gamma(m, b, c) * j(a, m);
        out.ref(a, b, c) = s;
      }
  return out;
}

}  // namespace

Connection canonical_connection(std::shared_ptr<const ChartGeometry> geometry,
                                const FdScheme& scheme) {
  auto geo = geometry;
  TensorField gamma_field = [geo, scheme](const ChartPoint& at) {
    const int d = geo->dim;
    DenseTensor lc = levi_civita(*geo, at, scheme);
    DenseTensor j = geo->j_at(at);
    DenseTensor dj = geo->j_d(at, scheme);
    DenseTensor nj = nabla_j(d, dj, j, lc);
    DenseTensor out = lc;
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        for (int c = 0; c < d; ++c) {
          double corr = 0.0;
          for (int m = 0; m < d; ++m) corr += j(a, m) * nj(m, b, c);
          out.ref(a, b, c) -= 0.5 * corr;
        }
    return out;
  };
  Connection conn;
  conn.geometry = std::move(geometry);
  conn.name = "canonical(" + conn.geometry->name + ")";
  conn.christoffels = std::move(gamma_field);
  return conn;
}

Connection shift_connection(const Connection& conn, OneFormField sigma,
                            OneFormField sigma_derivative, const std::string& label) {
  auto geo = conn.geometry;
  TensorField base = conn.christoffels;
  TensorField shifted = [geo, base, sigma](const ChartPoint& at) {
    const int d = geo->dim;
    DenseTensor out = base(at);
    DenseTensor s = sigma(at);
    DenseTensor j = geo->j_at(at);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        for (int c = 0; c < d; ++c) out.ref(a, b, c) += s(b) * j(a, c);
    return out;
  };
  Connection out;
  out.geometry = geo;
  out.name = label + "(" + conn.name + ")";
  out.christoffels = std::move(shifted);
  if (conn.christoffel_derivative && sigma_derivative &&
      geo->complex_structure_derivative) {
    TensorField base_d = conn.christoffel_derivative;
    TensorField sig = sigma;
    TensorField sig_d = sigma_derivative;
    out.christoffel_derivative = [geo, base_d, sig, sig_d](const ChartPoint& at) {
      const int d = geo->dim;
      DenseTensor dout = base_d(at);
      DenseTensor s = sig(at);
      DenseTensor ds = sig_d(at);
      DenseTensor j = geo->j_at(at);
      DenseTensor dj = geo->complex_structure_derivative(at);
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
          for (int c = 0; c < d; ++c)
            for (int m = 0; m < d; ++m)
              dout.ref(a, b, c, m) += ds(b, m) * j(a, c) + s(b) * dj(a, c, m);
      return dout;
    };
  }
  return out;
}

DenseTensor torsion(const Connection& conn, const ChartPoint& at) {
  const int d = conn.geometry->dim;
  DenseTensor gamma = conn.gamma_at(at);
  DenseTensor t({d, d, d}, {Variance::Upper, Variance::Lower, Variance::Lower});
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c) t.ref(a, b, c) = gamma(a, b, c) - gamma(a, c, b);
  return t;
}

CurvatureAtPoint curvature(const Connection& conn, const ChartPoint& at,
                           const FdScheme& scheme, bool force_fd) {
  const int d = conn.geometry->dim;
  DenseTensor gamma = conn.gamma_at(at);
  DenseTensor dgamma = conn.gamma_d(at, scheme, force_fd);
  // R^a_{dbe} = d_b Gamma^a_{ed} - d_e Gamma^a_{bd}
  //           + Gamma^a_{bm} Gamma^m_{ed} - Gamma^a_{em} Gamma^m_{bd}
  DenseTensor r({d, d, d, d},
                {Variance::Upper, Variance::Lower, Variance::Lower, Variance::Lower});
  for (int a = 0; a < d; ++a)
    for (int dd = 0; dd < d; ++dd)
      for (int b = 0; b < d; ++b)
        for (int e = 0; e < d; ++e) {
          double s = dgamma(a, e, dd, b) - dgamma(a, b, dd, e);
          for (int m = 0; m < d; ++m)
            s += gamma(a, b, m) * gamma(m, e, dd) - gamma(a, e, m) * gamma(m, b, dd);
          r.ref(a, dd, b, e) = s;
        }
  CurvatureAtPoint out;
  out.torsion = torsion(conn, at);
  DenseTensor j = conn.geometry->j_at(at);
  DenseTensor rho({d, d}, {Variance::Lower, Variance::Lower});
  for (int b = 0; b < d; ++b)
    for (int e = 0; e < d; ++e) {
      double s = 0.0;
      for (int a = 0; a < d; ++a)
        for (int dd = 0; dd < d; ++dd) s += r(a, dd, b, e) * j(dd, a);
      rho.ref(b, e) = 0.5 * s;
    }
  out.riemann = std::move(r);
  out.ricci_form = std::move(rho);
  return out;
}

DenseTensor ricci_form(const Connection& conn, const ChartPoint& at,
                       const FdScheme& scheme, bool force_fd) {
  return curvature(conn, at, scheme, force_fd).ricci_form;
}

DenseTensor covariant_metric_deriv(const Connection& conn, const ChartPoint& at,
                                   const FdScheme& scheme, bool force_fd) {
  const int d = conn.geometry->dim;
  DenseTensor g = conn.geometry->metric_at(at);
  DenseTensor dg = conn.geometry->metric_d(at, scheme, force_fd);
  DenseTensor gamma = conn.gamma_at(at);
  DenseTensor out({d, d, d}, {Variance::Lower, Variance::Lower, Variance::Lower});
  // out(b, c, e) = nabla_b g_{ce}
  for (int b = 0; b < d; ++b)
    for (int c = 0; c < d; ++c)
      for (int e = 0; e < d; ++e) {
        double s = dg(c, e, b);
        for (int m = 0; m < d; ++m)
          s -= gamma(m, b, c) * g(m, e) + gamma(m, b, e) * g(c, m);
        out.ref(b, c, e) = s;
      }
  return out;
}

DenseTensor covariant_j_deriv(const Connection& conn, const ChartPoint& at,
                              const FdScheme& scheme, bool force_fd) {
  const int d = conn.geometry->dim;
  DenseTensor j = conn.geometry->j_at(at);
  DenseTensor dj = conn.geometry->j_d(at, scheme, force_fd);
  DenseTensor gamma = conn.gamma_at(at);
  DenseTensor out({d, d, d}, {Variance::Upper, Variance::Lower, Variance::Lower});
  // out(a, b, c) = (nabla_b J)^a_c
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c) {
        double s = dj(a, c, b);
        for (int m = 0; m < d; ++m)
          s += gamma(a, b, m) * j(m, c) - gamma(m, b, c) * j(a, m);
        out.ref(a, b, c) = s;
      }
  return out;
}

CheckReport check_structure(const ChartGeometry& geometry,
                            const std::vector<ChartPoint>& points, double tol,
                            const FdScheme& scheme) {
  CheckReport rep;
  rep.tol = tol;
  const int d = geometry.dim;
  for (const ChartPoint& p : points) {
    DenseTensor g = geometry.metric_at(p);
    DenseTensor j = geometry.j_at(p);
    DenseTensor w = geometry.omega_at(p);
    CheckReport::Row row;
    row.at = p;

    double jj = 0.0;  // |J^2 + Id|
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        double s = (a == b) ? 1.0 : 0.0;
        for (int m = 0; m < d; ++m) s += j(a, m) * j(m, b);
        jj = std::max(jj, std::abs(s));
      }
    row.residuals["j_squared"] = jj;

    double comp = 0.0;  // |g(J.,J.) - g|
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        double s = -g(a, b);
        for (int m = 0; m < d; ++m)
          for (int l = 0; l < d; ++l) s += j(m, a) * j(l, b) * g(m, l);
        comp = std::max(comp, std::abs(s));
      }
    row.residuals["compatibility"] = comp;

    double skew = 0.0;
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) skew = std::max(skew, std::abs(w(a, b) + w(b, a)));
    row.residuals["omega_skew"] = skew;

    DenseTensor dw = geometry.omega_d(p, scheme);
    double domega = 0.0;  // cyclic sum d_a w_bc + d_b w_ca + d_c w_ab
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        for (int c = 0; c < d; ++c)
          domega = std::max(domega,
                            std::abs(dw(b, c, a) + dw(c, a, b) + dw(a, b, c)));
    row.residuals["d_omega"] = domega;

    row.residuals["metric_pd"] = min_symmetric_eigenvalue(g) > 0.0 ? 0.0 : 1.0;

    for (auto& kv : row.residuals) rep.max_residual = std::max(rep.max_residual, kv.second);
    rep.rows.push_back(std::move(row));
  }
  rep.pass = rep.max_residual <= tol;
  return rep;
}

CheckReport check_connection_class(const Connection& conn,
                                   const std::vector<ChartPoint>& points, double tol,
                                   const FdScheme& scheme) {
  CheckReport rep;
  rep.tol = tol;
  for (const ChartPoint& p : points) {
    CheckReport::Row row;
    row.at = p;
    row.residuals["nabla_g"] = covariant_metric_deriv(conn, p, scheme).inf_norm();
    row.residuals["nabla_j"] = covariant_j_deriv(conn, p, scheme).inf_norm();
    for (auto& kv : row.residuals) rep.max_residual = std::max(rep.max_residual, kv.second);
    rep.rows.push_back(std::move(row));
  }
  rep.pass = rep.max_residual <= tol;
  return rep;
}

EinsteinReport einstein_report(const Connection& conn,
                               const std::vector<ChartPoint>& points,
                               const FdScheme& scheme) {
  if (points.size() < 3) throw GeometryError("einstein_report: need at least 3 sample points");
  const int d = conn.geometry->dim;
  EinsteinReport rep;
  rep.sample_points = points;
  double fsum = 0.0;
  for (const ChartPoint& p : points) {
    DenseTensor rho = ricci_form(conn, p, scheme);
    DenseTensor g = conn.geometry->metric_at(p);
    DenseTensor gi = matrix_inverse(g);
    DenseTensor w = conn.geometry->omega_at(p);
    // least squares with the g-inner product on 2-forms; <w,w>_g = 2n
    double num = 0.0, den = 0.0;
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        for (int m = 0; m < d; ++m)
          for (int l = 0; l < d; ++l) {
            num += rho(a, b) * w(m, l) * gi(a, m) * gi(b, l);
            den += w(a, b) * w(m, l) * gi(a, m) * gi(b, l);
          }
    const double f = num / den;
    DenseTensor diff = rho;
    diff -= f * w;
    rep.per_point_f.push_back(f);
    rep.residual = std::max(rep.residual, form_operator_norm(diff, g));
    fsum += f;
  }
  rep.f_estimate = fsum / static_cast<double>(points.size());
  return rep;
}

std::vector<ChartPoint> sample_chart_points(const ChartGeometry& geometry, int count,
                                            std::uint64_t seed, double margin) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<ChartPoint> out;
  out.reserve(static_cast<size_t>(count));
  for (int k = 0; k < count; ++k) {
    ChartPoint p = ChartPoint::zero(geometry.dim);
    for (int i = 0; i < geometry.dim; ++i) {
      const CoordSpec& cs = geometry.coords[static_cast<size_t>(i)];
      const double m = cs.periodic ? 0.0 : margin;
      p[i] = cs.lo + m + (cs.period() - 2.0 * m) * uni(rng);
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace gmcf
