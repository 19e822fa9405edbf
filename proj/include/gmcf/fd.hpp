#pragma once

#include <functional>

#include "gmcf/tensor.hpp"

namespace gmcf {

/// Central-difference scheme for chart-coordinate derivatives. Order-4
/// stencils plus Richardson (h -> h/2 extrapolation) is the default for
/// curvature-of-connection paths.
struct FdScheme {
  double step = 1e-4;
  int order = 4;  // 2 or 4
  bool richardson = true;

  void validate() const;
  /// Half-width of the widest stencil this scheme evaluates.
  double stencil_radius() const { return 2.0 * step; }
};

using TensorField = std::function<DenseTensor(const ChartPoint&)>;
using ScalarField = std::function<double(const ChartPoint&)>;

/// Partial derivatives of a tensor field by central differences, appended
/// as one extra lower index (the last one). With richardson set, returns
/// the h -> h/2 extrapolant.
DenseTensor fd_derivative(const TensorField& field, const ChartPoint& at,
                          const FdScheme& scheme);

}  // namespace gmcf
