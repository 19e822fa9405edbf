#pragma once

#include <array>
#include <memory>
#include <vector>

#include "gmcf/geometry.hpp"

namespace gmcf {

/// Periodic structured grid of chart points representing an immersion
/// F: M -> N of a circle (n = 1) or 2-torus (n = 2) into the chart.
/// Intrinsic domain is [0, 2pi)^n. Immutable during evaluation.
struct ImmersedGrid {
  int intrinsic_dim = 0;
  std::vector<int> shape;       // nodes per intrinsic coordinate, each >= 8
  std::vector<double> spacing;  // 2pi / shape[k]
  std::vector<double> points;   // node-major, geometry->dim values per node
  std::shared_ptr<const ChartGeometry> geometry;
  std::shared_ptr<const Connection> connection;
  FdScheme scheme;

  int node_count() const;
  int flat_index(int i, int j = 0) const;
  std::array<int, 2> unflatten(int node) const;
  ChartPoint point(int node) const;
  void set_point(int node, const ChartPoint& p);
  double intrinsic_coord(int k, int idx) const { return spacing[static_cast<size_t>(k)] * idx; }
  void validate() const;
};

/// Per-node values of a field over the grid (width doubles per node).
struct GridField {
  int width = 0;
  std::vector<double> values;

  GridField() = default;
  GridField(int w, int nodes) : width(w), values(static_cast<size_t>(w) * nodes, 0.0) {}
  double* node(int idx) { return values.data() + static_cast<size_t>(idx) * width; }
  const double* node(int idx) const { return values.data() + static_cast<size_t>(idx) * width; }
};

/// Periodic central-difference derivative of a grid field along intrinsic
/// direction `dir` (order 2 or 4 from the grid's scheme).
GridField grid_derivative(const ImmersedGrid& grid, const GridField& f, int dir);

struct ImmersionDerivatives {
  // first[i] = d_i F, second[i][j] = d_i d_j F (FD operators commute).
  std::array<GridField, 2> first;
  std::array<std::array<GridField, 2>, 2> second;
};

/// dF and d2F at every node; throws GeometryError when dF is rank
/// deficient anywhere (immersion failure).
ImmersionDerivatives differentiate_immersion(const ImmersedGrid& grid);

}  // namespace gmcf
