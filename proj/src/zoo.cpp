#include "gmcf/zoo.hpp"

#include <cmath>
#include <cstring>
#include <functional>

namespace gmcf {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double map_param(const std::map<std::string, double>& m, const std::string& key,
                 double fallback) {
  auto it = m.find(key);
  return it == m.end() ? fallback : it->second;
}

// Deterministic per-point pseudo-random noise in [-1, 1]; intentionally not
// smooth so FD consistency breaks (negative-control connections).
double hash_noise(const ChartPoint& p, int a, int b, int c) {
  std::uint64_t h = 0x9e3779b97f4a7c15ull;
  auto mix = [&h](std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    h *= 0xff51afd7ed558ccdull;
    h ^= h >> 33;
  };
  for (int i = 0; i < p.dim; ++i) {
    std::uint64_t bits;
    double v = p[i];
    std::memcpy(&bits, &v, sizeof(bits));
    mix(bits);
  }
  mix(static_cast<std::uint64_t>(a * 64 + b * 8 + c + 1));
  return 2.0 * (static_cast<double>(h >> 11) * 0x1.0p-53) - 1.0;
}

// ---------------------------------------------------------------------------
// base Riemannian metrics for cotangent bundles (analytic Christoffels)

struct BaseGeometry {
  int n = 0;
  std::string name;
  // row-major buffers: g[i][j], dg[i][j][s], gamma[k][i][j], dgamma[k][i][j][s]
  std::function<void(const double* x, double* g)> g;
  std::function<void(const double* x, double* dg)> dg;
  std::function<void(const double* x, double* gamma)> gamma;
  std::function<void(const double* x, double* dgamma)> dgamma;
};

BaseGeometry make_base(const std::string& kind, const std::map<std::string, double>& params) {
  BaseGeometry base;
  if (kind == "flat_torus") {
    const int n = static_cast<int>(map_param(params, "n", 1));
    if (n < 1 || n > 2) throw SpecError("flat_torus base: n must be 1 or 2");
    base.n = n;
    base.name = "flat_torus";
    base.g = [n](const double*, double* g) {
      std::fill(g, g + n * n, 0.0);
      for (int i = 0; i < n; ++i) g[i * n + i] = 1.0;
    };
    base.dg = [n](const double*, double* dg) { std::fill(dg, dg + n * n * n, 0.0); };
    base.gamma = [n](const double*, double* ga) { std::fill(ga, ga + n * n * n, 0.0); };
    base.dgamma = [n](const double*, double* dga) {
      std::fill(dga, dga + n * n * n * n, 0.0);
    };
    return base;
  }
  if (kind == "torus_of_revolution") {
    const double a = map_param(params, "a", 2.0);
    const double b = map_param(params, "b", 0.5);
    if (!(a > b && b >= 0.0)) throw SpecError("torus_of_revolution: need a > b >= 0");
    base.n = 2;
    base.name = "torus_of_revolution";
    // g = dx^2 + r(x)^2 dy^2 with r = a + b cos x (x arc length along the tube)
    base.g = [a, b](const double* x, double* g) {
      const double r = a + b * std::cos(x[0]);
      g[0] = 1.0;
      g[1] = 0.0;
      g[2] = 0.0;
      g[3] = r * r;
    };
    base.dg = [a, b](const double* x, double* dg) {
      std::fill(dg, dg + 8, 0.0);
      const double r = a + b * std::cos(x[0]);
      const double rp = -b * std::sin(x[0]);
      dg[(1 * 2 + 1) * 2 + 0] = 2.0 * r * rp;  // d_1 g_22
    };
    base.gamma = [a, b](const double* x, double* ga) {
      std::fill(ga, ga + 8, 0.0);
      const double r = a + b * std::cos(x[0]);
      const double rp = -b * std::sin(x[0]);
      ga[(0 * 2 + 1) * 2 + 1] = -r * rp;       // Gamma^1_{22}
      ga[(1 * 2 + 0) * 2 + 1] = rp / r;        // Gamma^2_{12}
      ga[(1 * 2 + 1) * 2 + 0] = rp / r;        // Gamma^2_{21}
    };
    base.dgamma = [a, b](const double* x, double* dga) {
      std::fill(dga, dga + 16, 0.0);
      const double r = a + b * std::cos(x[0]);
      const double rp = -b * std::sin(x[0]);
      const double rpp = -b * std::cos(x[0]);
      dga[((0 * 2 + 1) * 2 + 1) * 2 + 0] = -(rp * rp + r * rpp);
      dga[((1 * 2 + 0) * 2 + 1) * 2 + 0] = (rpp * r - rp * rp) / (r * r);
      dga[((1 * 2 + 1) * 2 + 0) * 2 + 0] = (rpp * r - rp * rp) / (r * r);
    };
    return base;
  }
  throw SpecError("unknown base geometry kind: " + kind);
}

// ---------------------------------------------------------------------------
// small fixed-size helpers (base dimension n <= 2, ambient 2n <= 4)

constexpr int kNB = 2;  // max base dim

struct Small {
  int n = 0;
  double g[kNB][kNB] = {}, gi[kNB][kNB] = {};
  double dg[kNB][kNB][kNB] = {};            // dg[i][j][s], x-derivatives
  double gamma[kNB][kNB][kNB] = {};         // Gamma^k_{ij}
  double dgamma[kNB][kNB][kNB][kNB] = {};   // dGamma^k_{ij}/dx^s
  double N[kNB][kNB] = {};
  double dN[kNB][kNB][2 * kNB] = {};        // dN[i][j][mu], all chart directions
  double dgi[kNB][kNB][kNB] = {};           // x-derivatives of g^{-1}
};

void eval_base(const BaseGeometry& base, const double* x, const double* p, Small& s) {
  s = Small{};
  const int n = base.n;
  s.n = n;
  double gbuf[kNB * kNB], dgbuf[kNB * kNB * kNB], gabuf[kNB * kNB * kNB],
      dgabuf[kNB * kNB * kNB * kNB];
  base.g(x, gbuf);
  base.dg(x, dgbuf);
  base.gamma(x, gabuf);
  base.dgamma(x, dgabuf);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s.g[i][j] = gbuf[i * n + j];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        s.dg[i][j][k] = dgbuf[(i * n + j) * n + k];
        s.gamma[i][j][k] = gabuf[(i * n + j) * n + k];
        for (int l = 0; l < n; ++l)
          s.dgamma[i][j][k][l] = dgabuf[((i * n + j) * n + k) * n + l];
      }
  // inverse (n <= 2)
  if (n == 1) {
    s.gi[0][0] = 1.0 / s.g[0][0];
  } else {
    const double det = s.g[0][0] * s.g[1][1] - s.g[0][1] * s.g[1][0];
    s.gi[0][0] = s.g[1][1] / det;
    s.gi[1][1] = s.g[0][0] / det;
    s.gi[0][1] = -s.g[0][1] / det;
    s.gi[1][0] = -s.g[1][0] / det;
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double v = 0.0;
      for (int k = 0; k < n; ++k) v += p[k] * s.gamma[k][i][j];
      s.N[i][j] = v;
      for (int m = 0; m < n; ++m) {
        double vx = 0.0;
        for (int k = 0; k < n; ++k) vx += p[k] * s.dgamma[k][i][j][m];
        s.dN[i][j][m] = vx;              // d/dx^m
        s.dN[i][j][n + m] = s.gamma[m][i][j];  // d/dp_m
      }
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int m = 0; m < n; ++m) {
        double v = 0.0;
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) v += -s.gi[i][k] * s.dg[k][l][m] * s.gi[l][j];
        s.dgi[i][j][m] = v;
      }
}

// ---------------------------------------------------------------------------
// corruption wrappers (testing knobs)

void apply_corruptions(const GeometrySpec& spec, ChartGeometry& geo, Connection& conn) {
  const double cj = spec.param("corrupt_j", 0.0);
  if (cj != 0.0) {
    TensorField base_j = geo.complex_structure;
    geo.complex_structure = [base_j, cj](const ChartPoint& p) {
      DenseTensor j = base_j(p);
      j.ref(0, 0) += cj;
      return j;
    };
    geo.complex_structure_derivative = nullptr;
    geo.name += "+corrupt_j";
  }
  const double pc = spec.param("perturb_connection", 0.0);
  if (pc != 0.0) {
    TensorField base_gamma = conn.christoffels;
    const int d = geo.dim;
    conn.christoffels = [base_gamma, pc, d](const ChartPoint& p) {
      DenseTensor ga = base_gamma(p);
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
          for (int c = 0; c < d; ++c) ga.ref(a, b, c) += pc * hash_noise(p, a, b, c);
      return ga;
    };
    conn.christoffel_derivative = nullptr;
    conn.name += "+perturbed";
  }
}

void build_time_sanity(const BuiltGeometry& built, bool expect_ricci_flat) {
  const FdScheme scheme{};
  std::vector<ChartPoint> pts =
      sample_chart_points(*built.geometry, 3, 0xb111dull, scheme.stencil_radius() * 4);
  CheckReport sr = check_structure(*built.geometry, pts, 1e-6, scheme);
  if (!sr.pass)
    throw SpecError("geometry build: structure identities violated (residual " +
                    std::to_string(sr.max_residual) + ")");
  if (expect_ricci_flat) {
    for (const ChartPoint& p : pts) {
      DenseTensor rho = ricci_form(*built.connection, p, scheme);
      if (rho.inf_norm() > 1e-6)
        throw SpecError("geometry build: Ricci form does not vanish (|rho| = " +
                        std::to_string(rho.inf_norm()) + ")");
    }
  }
}

}  // namespace

double GeometrySpec::param(const std::string& key, double fallback) const {
  return map_param(params, key, fallback);
}
double GeometrySpec::base_param(const std::string& key, double fallback) const {
  return map_param(base_params, key, fallback);
}
double InitialSubmanifoldSpec::param(const std::string& key, double fallback) const {
  return map_param(params, key, fallback);
}

BuiltGeometry build_geometry(const GeometrySpec& spec) {
  BuiltGeometry out;
  const bool corrupted =
      spec.param("corrupt_j", 0.0) != 0.0 || spec.param("perturb_connection", 0.0) != 0.0;

  if (spec.kind == "flat_cn") {
    const int n = static_cast<int>(spec.param("n", 1));
    if (n < 1 || n > 2) throw SpecError("flat_cn: n must be 1 or 2");
    const double box = spec.param("box", 5.0);
    const int d = 2 * n;
    ChartGeometry geo;
    geo.dim = d;
    geo.name = "flat_c" + std::to_string(n);
    geo.coords.assign(static_cast<size_t>(d), CoordSpec{-box, box, false});
    geo.metric = [d](const ChartPoint&) {
      DenseTensor g({d, d}, {Variance::Lower, Variance::Lower});
      for (int i = 0; i < d; ++i) g.ref(i, i) = 1.0;
      return g;
    };
    geo.complex_structure = [d](const ChartPoint&) {
      DenseTensor j({d, d}, {Variance::Upper, Variance::Lower});
      for (int k = 0; k + 1 < d; k += 2) {
        j.ref(k, k + 1) = -1.0;  // J e_{2i+1} = -e_{2i}
        j.ref(k + 1, k) = 1.0;   // J e_{2i}   =  e_{2i+1}
      }
      return j;
    };
    geo.metric_derivative = [d](const ChartPoint&) {
      return DenseTensor({d, d, d}, {Variance::Lower, Variance::Lower, Variance::Lower});
    };
    geo.complex_structure_derivative = [d](const ChartPoint&) {
      return DenseTensor({d, d, d}, {Variance::Upper, Variance::Lower, Variance::Lower});
    };
    auto geom = std::make_shared<ChartGeometry>(geo);
    Connection conn;
    conn.geometry = geom;
    conn.name = "levi_civita(" + geo.name + ")";
    conn.christoffels = [d](const ChartPoint&) {
      return DenseTensor({d, d, d}, {Variance::Upper, Variance::Lower, Variance::Lower});
    };
    conn.christoffel_derivative = [d](const ChartPoint&) {
      return DenseTensor({d, d, d, d}, {Variance::Upper, Variance::Lower, Variance::Lower,
                                        Variance::Lower});
    };
    apply_corruptions(spec, *geom, conn);
    out.geometry = geom;
    out.connection = std::make_shared<Connection>(std::move(conn));
    if (!corrupted) build_time_sanity(out, true);
    return out;
  }

  if (spec.kind == "conformal_plane") {
    const double amp = spec.param("psi_amp", 0.1);
    const double freq = spec.param("psi_freq", 1.0);
    const double amp2 = spec.param("psi_amp2", 0.0);
    const double freq2 = spec.param("psi_freq2", 1.0);
    const int d = 2;
    auto psi = [=](const ChartPoint& p) {
      return amp * std::sin(freq * p[0]) + amp2 * std::cos(freq2 * p[1]);
    };
    auto dpsi = [=](const ChartPoint& p, double* out1) {
      out1[0] = amp * freq * std::cos(freq * p[0]);
      out1[1] = -amp2 * freq2 * std::sin(freq2 * p[1]);
    };
    auto d2psi = [=](const ChartPoint& p, double out2[2][2]) {
      out2[0][0] = -amp * freq * freq * std::sin(freq * p[0]);
      out2[0][1] = out2[1][0] = 0.0;
      out2[1][1] = -amp2 * freq2 * freq2 * std::cos(freq2 * p[1]);
    };
    ChartGeometry geo;
    geo.dim = d;
    geo.name = "conformal_plane";
    geo.coords.assign(2, CoordSpec{0.0, kTwoPi, true});
    geo.metric = [psi, d](const ChartPoint& p) {
      DenseTensor g({d, d}, {Variance::Lower, Variance::Lower});
      const double e = std::exp(2.0 * psi(p));
      g.ref(0, 0) = e;
      g.ref(1, 1) = e;
      return g;
    };
    geo.complex_structure = [d](const ChartPoint&) {
      DenseTensor j({d, d}, {Variance::Upper, Variance::Lower});
      j.ref(0, 1) = -1.0;
      j.ref(1, 0) = 1.0;
      return j;
    };
    geo.metric_derivative = [psi, dpsi, d](const ChartPoint& p) {
      DenseTensor dg({d, d, d}, {Variance::Lower, Variance::Lower, Variance::Lower});
      const double e = std::exp(2.0 * psi(p));
      double g1[2];
      dpsi(p, g1);
      for (int c = 0; c < d; ++c) {
        dg.ref(0, 0, c) = 2.0 * g1[c] * e;
        dg.ref(1, 1, c) = 2.0 * g1[c] * e;
      }
      return dg;
    };
    geo.complex_structure_derivative = [d](const ChartPoint&) {
      return DenseTensor({d, d, d}, {Variance::Upper, Variance::Lower, Variance::Lower});
    };
    auto geom = std::make_shared<ChartGeometry>(geo);

    // Gamma^a_{bc} = delta^a_b psi_c + delta^a_c psi_b - delta_{bc} psi_a,
    // then the shift sigma (x) J with sigma = d psi o J, which cancels the
    // Ricci form (almost-Einstein construction).
    auto gamma_hat = [dpsi, d](const ChartPoint& p) {
      DenseTensor ga({d, d, d}, {Variance::Upper, Variance::Lower, Variance::Lower});
      double g1[2];
      dpsi(p, g1);
      const double sig[2] = {g1[1], -g1[0]};  // J(m,a) psi_m
      const double jm[2][2] = {{0.0, -1.0}, {1.0, 0.0}};
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
          for (int c = 0; c < d; ++c) {
            double v = 0.0;
            if (a == b) v += g1[c];
            if (a == c) v += g1[b];
            if (b == c) v -= g1[a];
            v += sig[b] * jm[a][c];
            ga.ref(a, b, c) = v;
          }
      return ga;
    };
    auto dgamma_hat = [d2psi, d](const ChartPoint& p) {
      DenseTensor dga({d, d, d, d}, {Variance::Upper, Variance::Lower, Variance::Lower,
                                     Variance::Lower});
      double g2[2][2];
      d2psi(p, g2);
      const double jm[2][2] = {{0.0, -1.0}, {1.0, 0.0}};
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
          for (int c = 0; c < d; ++c)
            for (int m = 0; m < d; ++m) {
              double v = 0.0;
              if (a == b) v += g2[c][m];
              if (a == c) v += g2[b][m];
              if (b == c) v -= g2[a][m];
              // d_m sigma_b = J(l,b) psi_{lm}
              v += (jm[0][b] * g2[0][m] + jm[1][b] * g2[1][m]) * jm[a][c];
              dga.ref(a, b, c, m) = v;
            }
      return dga;
    };
    Connection conn;
    conn.geometry = geom;
    conn.name = "almost_einstein_shift(conformal_plane)";
    conn.christoffels = gamma_hat;
    conn.christoffel_derivative = dgamma_hat;
    apply_corruptions(spec, *geom, conn);
    out.geometry = geom;
    out.connection = std::make_shared<Connection>(std::move(conn));
    if (!corrupted) build_time_sanity(out, true);
    return out;
  }

  if (spec.kind == "cotangent_bundle") {
    const std::string base_kind = spec.base_kind.empty() ? "flat_torus" : spec.base_kind;
    BaseGeometry base = make_base(base_kind, spec.base_params);
    const int n = base.n;
    const int d = 2 * n;
    const double p_box = spec.param("p_box", 1.0);

    ChartGeometry geo;
    geo.dim = d;
    geo.name = "cotangent(" + base.name + ")";
    geo.coords.assign(static_cast<size_t>(d), CoordSpec{0.0, kTwoPi, true});
    for (int i = 0; i < n; ++i)
      geo.coords[static_cast<size_t>(n + i)] = CoordSpec{-p_box, p_box, false};

    // metric of type I+III: G = g_ij dx^i dx^j + g^{ij} dp_i dp_j in the
    // horizontal/vertical coframe (dx^i, delta p_i = dp_i - N_{il} dx^l)
    auto metric = [base, n, d](const ChartPoint& pt) {
      Small s;
      eval_base(base, pt.c.data(), pt.c.data() + n, s);
      DenseTensor G({d, d}, {Variance::Lower, Variance::Lower});
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double xx = s.g[i][j];
          for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) xx += s.N[i][k] * s.gi[k][l] * s.N[l][j];
          G.ref(i, j) = xx;
          double xp = 0.0;
          for (int l = 0; l < n; ++l) xp -= s.N[i][l] * s.gi[l][j];
          G.ref(i, n + j) = xp;
          G.ref(n + j, i) = xp;
          G.ref(n + i, n + j) = s.gi[i][j];
        }
      return G;
    };
    // J delta_i = -g_ik vertical^k, J vertical^i = g^{ik} delta_k
    auto cplx = [base, n, d](const ChartPoint& pt) {
      Small s;
      eval_base(base, pt.c.data(), pt.c.data() + n, s);
      DenseTensor J({d, d}, {Variance::Upper, Variance::Lower});
      for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i) {
          double xx = 0.0;
          for (int j = 0; j < n; ++j) xx -= s.gi[k][j] * s.N[j][i];
          J.ref(k, i) = xx;
          J.ref(k, n + i) = s.gi[k][i];
          double px = -s.g[k][i];
          for (int j = 0; j < n; ++j)
            for (int l = 0; l < n; ++l) px -= s.N[k][j] * s.gi[j][l] * s.N[l][i];
          J.ref(n + k, i) = px;
          double pp = 0.0;
          for (int j = 0; j < n; ++j) pp += s.N[k][j] * s.gi[j][i];
          J.ref(n + k, n + i) = pp;
        }
      return J;
    };
    auto metric_d = [base, n, d](const ChartPoint& pt) {
      Small s;
      eval_base(base, pt.c.data(), pt.c.data() + n, s);
      DenseTensor dG({d, d, d}, {Variance::Lower, Variance::Lower, Variance::Lower});
      for (int mu = 0; mu < d; ++mu) {
        const bool xdir = mu < n;
        auto dN = [&](int i, int j) { return s.dN[i][j][mu]; };
        auto dg = [&](int i, int j) { return xdir ? s.dg[i][j][mu] : 0.0; };
        auto dgi = [&](int i, int j) { return xdir ? s.dgi[i][j][mu] : 0.0; };
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            double xx = dg(i, j);
            for (int k = 0; k < n; ++k)
              for (int l = 0; l < n; ++l)
                xx += dN(i, k) * s.gi[k][l] * s.N[l][j] + s.N[i][k] * dgi(k, l) * s.N[l][j] +
                      s.N[i][k] * s.gi[k][l] * dN(l, j);
            dG.ref(i, j, mu) = xx;
            double xp = 0.0;
            for (int l = 0; l < n; ++l) xp -= dN(i, l) * s.gi[l][j] + s.N[i][l] * dgi(l, j);
            dG.ref(i, n + j, mu) = xp;
            dG.ref(n + j, i, mu) = xp;
            dG.ref(n + i, n + j, mu) = dgi(i, j);
          }
      }
      return dG;
    };
    auto cplx_d = [base, n, d](const ChartPoint& pt) {
      Small s;
      eval_base(base, pt.c.data(), pt.c.data() + n, s);
      DenseTensor dJ({d, d, d}, {Variance::Upper, Variance::Lower, Variance::Lower});
      for (int mu = 0; mu < d; ++mu) {
        const bool xdir = mu < n;
        auto dN = [&](int i, int j) { return s.dN[i][j][mu]; };
        auto dg = [&](int i, int j) { return xdir ? s.dg[i][j][mu] : 0.0; };
        auto dgi = [&](int i, int j) { return xdir ? s.dgi[i][j][mu] : 0.0; };
        for (int k = 0; k < n; ++k)
          for (int i = 0; i < n; ++i) {
            double xx = 0.0;
            for (int j = 0; j < n; ++j) xx -= dgi(k, j) * s.N[j][i] + s.gi[k][j] * dN(j, i);
            dJ.ref(k, i, mu) = xx;
            dJ.ref(k, n + i, mu) = dgi(k, i);
            double px = -dg(k, i);
            for (int j = 0; j < n; ++j)
              for (int l = 0; l < n; ++l)
                px -= dN(k, j) * s.gi[j][l] * s.N[l][i] + s.N[k][j] * dgi(j, l) * s.N[l][i] +
                      s.N[k][j] * s.gi[j][l] * dN(l, i);
            dJ.ref(n + k, i, mu) = px;
            double pp = 0.0;
            for (int j = 0; j < n; ++j) pp += dN(k, j) * s.gi[j][i] + s.N[k][j] * dgi(j, i);
            dJ.ref(n + k, n + i, mu) = pp;
          }
      }
      return dJ;
    };
    // canonical block connection: horizontal and vertical frames are
    // parallel along the pullback of the base Levi-Civita connection forms
    auto gamma_hat = [base, n, d](const ChartPoint& pt) {
      Small s;
      eval_base(base, pt.c.data(), pt.c.data() + n, s);
      DenseTensor ga({d, d, d}, {Variance::Upper, Variance::Lower, Variance::Lower});
      // E = [[I,0],[N,I]], Einv = [[I,0],[-N,I]]
      // inner[B][nu] = d_mu(Einv)^B_nu + Omega^B_{mu A} (Einv)^A_nu
      for (int mu = 0; mu < d; ++mu) {
        double inner[2 * kNB][2 * kNB] = {};
        for (int j = 0; j < n; ++j)
          for (int i = 0; i < n; ++i) inner[n + j][i] = -s.dN[j][i][mu];
        if (mu < n) {
          // Omega^{delta_j}_{mu delta_i} = Gamma^j_{mu i};
          // Omega^{vert_j}_{mu vert_i} = -Gamma^i_{mu j};
          // contract against Einv = [[I, 0], [-N, I]]
          for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
              inner[j][i] += s.gamma[j][mu][i];
              inner[n + j][n + i] += -s.gamma[i][mu][j];
              for (int l = 0; l < n; ++l)
                inner[n + j][l] += s.gamma[i][mu][j] * s.N[i][l];
            }
        }
        // Gamma^lambda_{mu nu} = E^lambda_B inner[B][nu]
        for (int nu = 0; nu < d; ++nu) {
          for (int lam = 0; lam < n; ++lam) ga.ref(lam, mu, nu) = inner[lam][nu];
          for (int lam = 0; lam < n; ++lam) {
            double v = inner[n + lam][nu];
            for (int i = 0; i < n; ++i) v += s.N[i][lam] * inner[i][nu];
            ga.ref(n + lam, mu, nu) = v;
          }
        }
      }
      return ga;
    };

    geo.metric = metric;
    geo.complex_structure = cplx;
    geo.metric_derivative = metric_d;
    geo.complex_structure_derivative = cplx_d;
    auto geom = std::make_shared<ChartGeometry>(geo);
    Connection conn;
    conn.geometry = geom;
    conn.name = "canonical_block(" + geo.name + ")";
    conn.christoffels = gamma_hat;
    apply_corruptions(spec, *geom, conn);
    out.geometry = geom;
    out.connection = std::make_shared<Connection>(std::move(conn));
    if (!corrupted) build_time_sanity(out, true);
    return out;
  }

  throw SpecError("unknown geometry kind: " + spec.kind);
}

namespace {

// Shared immersion formulas so that perturbed(eps = 0) reproduces the base
// kind bit-for-bit.
ChartPoint immerse_circle(double s, double r, double cx, double cy, double eps, double m1) {
  const double rr = r * (1.0 + eps * std::sin(m1 * s));
  return ChartPoint::of({cx + rr * std::cos(s), cy + rr * std::sin(s)});
}

ChartPoint immerse_product_torus(double s, double t, double r1, double r2, double eps,
                                 double m1, double m2) {
  const double rr = r1 * (1.0 + eps * std::sin(m1 * s + m2 * t));
  return ChartPoint::of(
      {rr * std::cos(s), rr * std::sin(s), r2 * std::cos(t), r2 * std::sin(t)});
}

}  // namespace

ImmersedGrid build_initial(const InitialSubmanifoldSpec& spec, const BuiltGeometry& built,
                           const std::vector<int>& shape, const FdScheme& scheme) {
  ImmersedGrid grid;
  grid.geometry = built.geometry;
  grid.connection = built.connection;
  grid.scheme = scheme;
  grid.shape = shape;
  grid.intrinsic_dim = static_cast<int>(shape.size());
  grid.spacing.clear();
  for (int s : shape) grid.spacing.push_back(kTwoPi / s);
  const int d = built.geometry->dim;
  grid.points.assign(static_cast<size_t>(grid.node_count()) * d, 0.0);

  std::string kind = spec.kind;
  double eps = 0.0, m1 = 1.0, m2 = 1.0;
  if (kind == "perturbed") {
    if (spec.base_kind.empty()) throw SpecError("perturbed: base_kind required");
    kind = spec.base_kind;
    eps = spec.param("eps", 0.05);
    m1 = spec.param("m1", 1.0);
    m2 = spec.param("m2", 1.0);
  }

  if (kind == "circle") {
    if (grid.intrinsic_dim != 1 || d != 2)
      throw SpecError("circle: needs a 1d grid in a dim-2 geometry");
    const double r = spec.param("r", 1.0);
    const double cx = spec.param("cx", 0.0);
    const double cy = spec.param("cy", 0.0);
    for (int i = 0; i < shape[0]; ++i)
      grid.set_point(i, immerse_circle(grid.intrinsic_coord(0, i), r, cx, cy, eps, m1));
  } else if (kind == "product_torus") {
    if (grid.intrinsic_dim != 2 || d != 4)
      throw SpecError("product_torus: needs a 2d grid in a dim-4 geometry");
    const double r1 = spec.param("r1", 1.0);
    const double r2 = spec.param("r2", 1.0);
    for (int i = 0; i < shape[0]; ++i)
      for (int j = 0; j < shape[1]; ++j)
        grid.set_point(grid.flat_index(i, j),
                       immerse_product_torus(grid.intrinsic_coord(0, i),
                                             grid.intrinsic_coord(1, j), r1, r2, eps, m1, m2));
  } else if (kind == "zero_section" || kind == "graph_of_one_form") {
    const int n = d / 2;
    if (grid.intrinsic_dim != n)
      throw SpecError(kind + ": grid dimension must equal the base dimension");
    const double c1 = spec.param("c1", 0.0);
    const double c2 = spec.param("c2", 0.0);
    const double pa = spec.param("pot_amp", 0.0);
    const double pa2 = spec.param("pot_amp2", 0.0);
    const double pm = spec.param("pot_mix", 0.0);
    const bool graph = kind == "graph_of_one_form";
    for (int node = 0; node < grid.node_count(); ++node) {
      auto [i, j] = grid.unflatten(node);
      ChartPoint p = ChartPoint::zero(d);
      const double x1 = grid.intrinsic_coord(0, i);
      p[0] = x1;
      if (n == 2) p[1] = grid.intrinsic_coord(1, j);
      if (graph) {
        // p_i = c_i + d_i f with
        // f = pot_amp cos x1 + pot_amp2 cos x2 + pot_mix cos(x1 + 2 x2)
        p[n + 0] = c1 - pa * std::sin(x1);
        if (n == 2) {
          p[n + 0] -= pm * std::sin(x1 + 2.0 * p[1]);
          p[n + 1] = c2 - pa2 * std::sin(p[1]) - 2.0 * pm * std::sin(x1 + 2.0 * p[1]);
        }
      }
      grid.set_point(node, p);
    }
  } else {
    throw SpecError("unknown initial submanifold kind: " + spec.kind);
  }
  grid.validate();
  return grid;
}

std::shared_ptr<const ChartGeometry> base_as_chart_geometry(
    const std::string& base_kind, const std::map<std::string, double>& base_params) {
  BaseGeometry base = make_base(base_kind, base_params);
  if (base.n != 2)
    throw SpecError("base_as_chart_geometry: only 2d bases form an almost Kaehler chart");
  ChartGeometry geo;
  geo.dim = 2;
  geo.name = "base(" + base.name + ")";
  geo.coords.assign(2, CoordSpec{0.0, kTwoPi, true});
  geo.metric = [base](const ChartPoint& p) {
    double g[4];
    base.g(p.c.data(), g);
    DenseTensor out({2, 2}, {Variance::Lower, Variance::Lower});
    out.ref(0, 0) = g[0];
    out.ref(0, 1) = g[1];
    out.ref(1, 0) = g[2];
    out.ref(1, 1) = g[3];
    return out;
  };
  // area-form compatible J for an orthogonal 2d metric diag(E, G):
  // J e1 = sqrt(E/G) e2, J e2 = -sqrt(G/E) e1
  geo.complex_structure = [base](const ChartPoint& p) {
    double g[4];
    base.g(p.c.data(), g);
    DenseTensor out({2, 2}, {Variance::Upper, Variance::Lower});
    out.ref(1, 0) = std::sqrt(g[0] / g[3]);
    out.ref(0, 1) = -std::sqrt(g[3] / g[0]);
    return out;
  };
  geo.metric_derivative = [base](const ChartPoint& p) {
    double dg[8];
    base.dg(p.c.data(), dg);
    DenseTensor out({2, 2, 2}, {Variance::Lower, Variance::Lower, Variance::Lower});
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int s = 0; s < 2; ++s) out.ref(i, j, s) = dg[(i * 2 + j) * 2 + s];
    return out;
  };
  return std::make_shared<ChartGeometry>(std::move(geo));
}

}  // namespace gmcf
