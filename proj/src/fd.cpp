#include "gmcf/fd.hpp"

#include <cmath>

namespace gmcf {

void FdScheme::validate() const {
  if (!(step > 0.0) || !std::isfinite(step)) throw TensorError("fd scheme: step must be positive");
  if (order != 2 && order != 4) throw TensorError("fd scheme: order must be 2 or 4");
}

namespace {

DenseTensor fd_once(const TensorField& field, const ChartPoint& at, double h, int order) {
  const int dim = at.dim;
  DenseTensor probe = field(at);
  probe.require_finite("fd_derivative: field value");
  std::vector<int> dims = probe.dims();
  std::vector<Variance> var = probe.variance();
  dims.push_back(dim);
  var.push_back(Variance::Lower);
  DenseTensor out(dims, var);
  const std::size_t block = probe.size();
  auto check_shape = [&probe](const DenseTensor& t) {
    if (t.dims() != probe.dims() || t.variance() != probe.variance())
      throw TensorError("fd_derivative: field shape varies across the stencil");
  };
  for (int mu = 0; mu < dim; ++mu) {
    DenseTensor d = probe;  // shape carrier
    if (order == 2) {
      DenseTensor fp = field(at.shifted(mu, h));
      DenseTensor fm = field(at.shifted(mu, -h));
      fp.require_finite("fd_derivative: field value");
      fm.require_finite("fd_derivative: field value");
      check_shape(fp);
      check_shape(fm);
      for (std::size_t i = 0; i < block; ++i)
        d.entries()[i] = (fp.entries()[i] - fm.entries()[i]) / (2.0 * h);
    } else {
      DenseTensor f2p = field(at.shifted(mu, 2.0 * h));
      DenseTensor fp = field(at.shifted(mu, h));
      DenseTensor fm = field(at.shifted(mu, -h));
      DenseTensor f2m = field(at.shifted(mu, -2.0 * h));
      f2p.require_finite("fd_derivative: field value");
      fp.require_finite("fd_derivative: field value");
      fm.require_finite("fd_derivative: field value");
      f2m.require_finite("fd_derivative: field value");
      check_shape(f2p);
      check_shape(fp);
      check_shape(fm);
      check_shape(f2m);
      for (std::size_t i = 0; i < block; ++i)
        d.entries()[i] = (-f2p.entries()[i] + 8.0 * fp.entries()[i] - 8.0 * fm.entries()[i] +
                          f2m.entries()[i]) /
                         (12.0 * h);
    }
    // appended last index varies fastest: out[..., mu]
    for (std::size_t i = 0; i < block; ++i)
      out.entries()[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(mu)] =
          d.entries()[i];
  }
  return out;
}

}  // namespace

DenseTensor fd_derivative(const TensorField& field, const ChartPoint& at,
                          const FdScheme& scheme) {
  scheme.validate();
  if (!at.finite()) throw TensorError("fd_derivative: non-finite evaluation point");
  if (!scheme.richardson) return fd_once(field, at, scheme.step, scheme.order);
  DenseTensor coarse = fd_once(field, at, scheme.step, scheme.order);
  DenseTensor fine = fd_once(field, at, scheme.step / 2.0, scheme.order);
  const double w = scheme.order == 2 ? 4.0 : 16.0;
  DenseTensor out = fine;
  for (std::size_t i = 0; i < out.size(); ++i)
    out.entries()[i] = (w * fine.entries()[i] - coarse.entries()[i]) / (w - 1.0);
  return out;
}

}  // namespace gmcf
