#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gmcf/fd.hpp"
#include "gmcf/tensor.hpp"

namespace gmcf {

struct GeometryError : std::runtime_error {
  explicit GeometryError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Valid range of one chart coordinate. Periodic coordinates identify
/// lo with hi; non-periodic ones bound the chart box (momentum coordinates
/// of a cotangent chart).
struct CoordSpec {
  double lo = 0.0;
  double hi = 0.0;
  bool periodic = false;
  double period() const { return hi - lo; }
};

/// Almost Kaehler structure on a single coordinate chart: callable sources
/// of g_ab and J^a_b with optional analytic first derivatives. Immutable
/// after construction; evaluations are pure.
struct ChartGeometry {
  int dim = 0;  // 2n
  std::string name;
  std::vector<CoordSpec> coords;
  TensorField metric;             // g_ab, (lower, lower)
  TensorField complex_structure;  // J^a_b, (upper, lower)
  TensorField metric_derivative;             // optional: d_c g_ab as (l,l;l)
  TensorField complex_structure_derivative;  // optional: d_c J^a_b as (u,l;l)

  bool has_analytic_derivatives() const {
    return static_cast<bool>(metric_derivative) &&
           static_cast<bool>(complex_structure_derivative);
  }
  DenseTensor metric_at(const ChartPoint& at) const;
  DenseTensor j_at(const ChartPoint& at) const;
  /// d_c g_ab: analytic when registered, central differences otherwise.
  DenseTensor metric_d(const ChartPoint& at, const FdScheme& scheme,
                       bool force_fd = false) const;
  DenseTensor j_d(const ChartPoint& at, const FdScheme& scheme,
                  bool force_fd = false) const;
  /// omega_ab = J^m_a g_mb, i.e. omega(X,Y) = g(JX, Y).
  DenseTensor omega_at(const ChartPoint& at) const;
  DenseTensor omega_d(const ChartPoint& at, const FdScheme& scheme,
                      bool force_fd = false) const;
  bool inside_box(const ChartPoint& at, double margin) const;
};

/// Connection on the chart via its Christoffel field Gamma^a_{bc}
/// (b = differentiation direction). Optional analytic derivative
/// d_m Gamma^a_{bc} as (u,l,l;l).
struct Connection {
  std::shared_ptr<const ChartGeometry> geometry;
  std::string name;
  TensorField christoffels;
  TensorField christoffel_derivative;  // optional

  DenseTensor gamma_at(const ChartPoint& at) const;
  DenseTensor gamma_d(const ChartPoint& at, const FdScheme& scheme,
                      bool force_fd = false) const;
};

struct CurvatureAtPoint {
  DenseTensor riemann;     // R^a_{dbe} = (R(e_b,e_e)e_d)^a
  DenseTensor torsion;     // T^a_{bc}
  DenseTensor ricci_form;  // rho_be = 1/2 R^a_{dbe} J^d_a
};

struct EinsteinReport {
  double f_estimate = 0.0;  // mean of the per-point least-squares fits
  double residual = 0.0;    // sup_p |rho - f_p omega| in the g-operator norm
  std::vector<ChartPoint> sample_points;
  std::vector<double> per_point_f;
};

/// Residual report shared by the structure and connection-class checkers.
struct CheckReport {
  struct Row {
    ChartPoint at;
    std::map<std::string, double> residuals;
  };
  std::vector<Row> rows;
  double max_residual = 0.0;
  double tol = 0.0;
  bool pass = false;

  double max_of(const std::string& key) const;
};

using OneFormField = TensorField;  // sigma_a, rank 1 lower

/// Levi-Civita Christoffels of the chart metric (Koszul formula).
DenseTensor levi_civita(const ChartGeometry& geometry, const ChartPoint& at,
                        const FdScheme& scheme = {}, bool force_fd = false);

/// The canonical metric-and-complex connection
/// Gamma_hat = Gamma - 1/2 J (nabla J).
Connection canonical_connection(std::shared_ptr<const ChartGeometry> geometry,
                                const FdScheme& scheme = {});

/// nabla_tilde = conn + sigma (x) J; stays metric and complex.
Connection shift_connection(const Connection& conn, OneFormField sigma,
                            OneFormField sigma_derivative = nullptr,
                            const std::string& label = "shifted");

DenseTensor torsion(const Connection& conn, const ChartPoint& at);

CurvatureAtPoint curvature(const Connection& conn, const ChartPoint& at,
                           const FdScheme& scheme = {}, bool force_fd = false);

DenseTensor ricci_form(const Connection& conn, const ChartPoint& at,
                       const FdScheme& scheme = {}, bool force_fd = false);

/// nabla_hat g and nabla_hat J at a point (full tensors).
DenseTensor covariant_metric_deriv(const Connection& conn, const ChartPoint& at,
                                   const FdScheme& scheme = {}, bool force_fd = false);
DenseTensor covariant_j_deriv(const Connection& conn, const ChartPoint& at,
                              const FdScheme& scheme = {}, bool force_fd = false);

/// Per-point residuals for J^2 + Id, compatibility g(J.,J.) - g, skewness of
/// omega, and the FD exterior derivative d omega.
CheckReport check_structure(const ChartGeometry& geometry,
                            const std::vector<ChartPoint>& points, double tol,
                            const FdScheme& scheme = {});

/// Per-point residuals |nabla_hat g|, |nabla_hat J| (class C membership).
CheckReport check_connection_class(const Connection& conn,
                                   const std::vector<ChartPoint>& points, double tol,
                                   const FdScheme& scheme = {});

/// Least-squares pointwise fit rho ~ f omega; residual in the g-operator norm.
EinsteinReport einstein_report(const Connection& conn,
                               const std::vector<ChartPoint>& points,
                               const FdScheme& scheme = {});

/// Uniform random points in the chart box shrunk by the FD stencil radius.
std::vector<ChartPoint> sample_chart_points(const ChartGeometry& geometry, int count,
                                            std::uint64_t seed,
                                            double margin = 0.0);

}  // namespace gmcf
