#include "gmcf/grid.hpp"

#include <cmath>
#include <string>

namespace gmcf {

int ImmersedGrid::node_count() const {
  int n = 1;
  for (int s : shape) n *= s;
  return n;
}

int ImmersedGrid::flat_index(int i, int j) const {
  const int n0 = shape[0];
  i = ((i % n0) + n0) % n0;
  if (intrinsic_dim == 1) return i;
  const int n1 = shape[1];
  j = ((j % n1) + n1) % n1;
  return i * n1 + j;
}

std::array<int, 2> ImmersedGrid::unflatten(int node) const {
  if (intrinsic_dim == 1) return {node, 0};
  return {node / shape[1], node % shape[1]};
}

ChartPoint ImmersedGrid::point(int node) const {
  const int d = geometry->dim;
  ChartPoint p = ChartPoint::zero(d);
  const double* src = points.data() + static_cast<size_t>(node) * d;
  for (int a = 0; a < d; ++a) p[a] = src[a];
  return p;
}

void ImmersedGrid::set_point(int node, const ChartPoint& p) {
  const int d = geometry->dim;
  double* dst = points.data() + static_cast<size_t>(node) * d;
  for (int a = 0; a < d; ++a) dst[a] = p[a];
}

void ImmersedGrid::validate() const {
  if (!geometry || !connection) throw GeometryError("grid: missing geometry/connection");
  if (intrinsic_dim < 1 || intrinsic_dim > 2)
    throw GeometryError("grid: intrinsic dimension must be 1 or 2");
  if (2 * intrinsic_dim != geometry->dim)
    throw GeometryError("grid: immersion must be half-dimensional (2n = dim N)");
  if (static_cast<int>(shape.size()) != intrinsic_dim)
    throw GeometryError("grid: shape rank mismatch");
  for (int s : shape)
    if (s < 8) throw GeometryError("grid: shape entries must be >= 8");
  if (points.size() != static_cast<size_t>(node_count()) * geometry->dim)
    throw GeometryError("grid: point buffer size mismatch");
  for (double v : points)
    if (!std::isfinite(v)) throw GeometryError("grid: non-finite point");
  for (int node = 0; node < node_count(); ++node)
    if (!geometry->inside_box(point(node), 0.0))
      throw GeometryError("grid: point outside the valid chart box");
}

GridField grid_derivative(const ImmersedGrid& grid, const GridField& f, int dir) {
  const int nodes = grid.node_count();
  const double h = grid.spacing[static_cast<size_t>(dir)];
  const int order = grid.scheme.order;
  GridField out(f.width, nodes);
  for (int node = 0; node < nodes; ++node) {
    auto [i, j] = grid.unflatten(node);
    auto neighbor = [&](int off) {
      return dir == 0 ? grid.flat_index(i + off, j) : grid.flat_index(i, j + off);
    };
    const double* p1 = f.node(neighbor(1));
    const double* m1 = f.node(neighbor(-1));
    double* dst = out.node(node);
    if (order == 2) {
      for (int w = 0; w < f.width; ++w) dst[w] = (p1[w] - m1[w]) / (2.0 * h);
    } else {
      const double* p2 = f.node(neighbor(2));
      const double* m2 = f.node(neighbor(-2));
      for (int w = 0; w < f.width; ++w)
        dst[w] = (-p2[w] + 8.0 * p1[w] - 8.0 * m1[w] + m2[w]) / (12.0 * h);
    }
  }
  return out;
}

namespace {

// First derivative of the immersion itself. Components valued in periodic
// chart coordinates are only periodic modulo the period (a zero section has
// x = s + 2 pi k), so stencil values are unwrapped to the minimal image
// around the center node before differencing.
GridField immersion_first_derivative(const ImmersedGrid& grid, int dir) {
  const int d = grid.geometry->dim;
  const int nodes = grid.node_count();
  const double h = grid.spacing[static_cast<size_t>(dir)];
  const int order = grid.scheme.order;
  GridField out(d, nodes);
  double period[kMaxDim];
  for (int a = 0; a < d; ++a) {
    const CoordSpec& cs = grid.geometry->coords[static_cast<size_t>(a)];
    period[a] = cs.periodic ? cs.period() : 0.0;
  }
  for (int node = 0; node < nodes; ++node) {
    auto [i, j] = grid.unflatten(node);
    const double* center = grid.points.data() + static_cast<size_t>(node) * d;
    auto value = [&](int off, int a) {
      const int nb = dir == 0 ? grid.flat_index(i + off, j) : grid.flat_index(i, j + off);
      double v = grid.points[static_cast<size_t>(nb) * d + a];
      if (period[a] > 0.0) v -= period[a] * std::round((v - center[a]) / period[a]);
      return v;
    };
    double* dst = out.node(node);
    for (int a = 0; a < d; ++a) {
      if (order == 2) {
        dst[a] = (value(1, a) - value(-1, a)) / (2.0 * h);
      } else {
        dst[a] = (-value(2, a) + 8.0 * value(1, a) - 8.0 * value(-1, a) + value(-2, a)) /
                 (12.0 * h);
      }
    }
  }
  return out;
}

}  // namespace

ImmersionDerivatives differentiate_immersion(const ImmersedGrid& grid) {
  grid.validate();
  const int n = grid.intrinsic_dim;
  const int d = grid.geometry->dim;
  const int nodes = grid.node_count();

  ImmersionDerivatives out;
  for (int i = 0; i < n; ++i)
    out.first[static_cast<size_t>(i)] = immersion_first_derivative(grid, i);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      out.second[static_cast<size_t>(i)][static_cast<size_t>(j)] =
          grid_derivative(grid, out.first[static_cast<size_t>(i)], j);
      if (j != i)
        out.second[static_cast<size_t>(j)][static_cast<size_t>(i)] =
            out.second[static_cast<size_t>(i)][static_cast<size_t>(j)];
    }

  // rank check via the induced Gram matrix
  for (int node = 0; node < nodes; ++node) {
    DenseTensor g = grid.geometry->metric_at(grid.point(node));
    DenseTensor gram({n, n}, {Variance::Lower, Variance::Lower});
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        const double* fi = out.first[static_cast<size_t>(i)].node(node);
        const double* fj = out.first[static_cast<size_t>(j)].node(node);
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b) s += g(a, b) * fi[a] * fj[b];
        gram.ref(i, j) = s;
      }
    SymEig eig = sym_eig(gram);
    if (!(eig.values.front() > 1e-12 * std::max(1.0, eig.values.back())))
      throw GeometryError("immersion rank-deficient at node " + std::to_string(node));
  }
  return out;
}

}  // namespace gmcf
