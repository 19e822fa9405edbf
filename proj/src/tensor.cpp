#include "gmcf/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gmcf {

ChartPoint ChartPoint::zero(int dim) {
  if (dim < 1 || dim > kMaxDim) throw TensorError("chart point dimension out of range");
  ChartPoint p;
  p.dim = dim;
  return p;
}

ChartPoint ChartPoint::of(std::initializer_list<double> coords) {
  ChartPoint p = ChartPoint::zero(static_cast<int>(coords.size()));
  int i = 0;
  for (double v : coords) p.c[static_cast<size_t>(i++)] = v;
  if (!p.finite()) throw TensorError("chart point has non-finite coordinates");
  return p;
}

bool ChartPoint::finite() const {
  for (int i = 0; i < dim; ++i)
    if (!std::isfinite(c[static_cast<size_t>(i)])) return false;
  return true;
}

ChartPoint ChartPoint::shifted(int coord, double delta) const {
  ChartPoint p = *this;
  p.c[static_cast<size_t>(coord)] += delta;
  return p;
}

DenseTensor::DenseTensor(std::vector<int> dims, std::vector<Variance> variance)
    : dims_(std::move(dims)), variance_(std::move(variance)) {
  if (dims_.size() != variance_.size())
    throw TensorError("dims/variance length mismatch");
  if (dims_.size() > kMaxRank) throw TensorError("rank above 5 not supported");
  std::size_t total = 1;
  for (int d : dims_) {
    if (d < 1 || d > kMaxDim) throw TensorError("tensor dimension out of range");
    total *= static_cast<std::size_t>(d);
  }
  entries_.assign(total, 0.0);
}

DenseTensor DenseTensor::scalar(double value) {
  DenseTensor t;
  t.entries_.assign(1, value);
  return t;
}

DenseTensor DenseTensor::identity(int dim) {
  DenseTensor t({dim, dim}, {Variance::Upper, Variance::Lower});
  for (int i = 0; i < dim; ++i) t.ref(i, i) = 1.0;
  return t;
}

DenseTensor DenseTensor::vector(std::initializer_list<double> entries, Variance v) {
  DenseTensor t({static_cast<int>(entries.size())}, {v});
  int i = 0;
  for (double x : entries) t.entries_[static_cast<size_t>(i++)] = x;
  return t;
}

std::size_t DenseTensor::flat(std::initializer_list<int> idx) const {
  if (static_cast<int>(idx.size()) != rank()) throw TensorError("index rank mismatch");
  std::size_t f = 0;
  int k = 0;
  for (int i : idx) {
    if (i < 0 || i >= dims_[static_cast<size_t>(k)]) throw TensorError("index out of range");
    f = f * static_cast<std::size_t>(dims_[static_cast<size_t>(k)]) + static_cast<std::size_t>(i);
    ++k;
  }
  return f;
}

bool DenseTensor::finite() const {
  for (double v : entries_)
    if (!std::isfinite(v)) return false;
  return true;
}

void DenseTensor::require_finite(const char* what) const {
  if (!finite()) throw TensorError(std::string(what) + ": non-finite entries");
}

static void require_same_shape(const DenseTensor& a, const DenseTensor& b) {
  if (a.dims() != b.dims() || a.variance() != b.variance())
    throw TensorError("tensor shape/variance mismatch");
}

DenseTensor& DenseTensor::operator+=(const DenseTensor& other) {
  require_same_shape(*this, other);
  for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i] += other.entries_[i];
  return *this;
}

DenseTensor& DenseTensor::operator-=(const DenseTensor& other) {
  require_same_shape(*this, other);
  for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i] -= other.entries_[i];
  return *this;
}

DenseTensor& DenseTensor::operator*=(double s) {
  for (double& v : entries_) v *= s;
  return *this;
}

double DenseTensor::inf_norm() const {
  double m = 0.0;
  for (double v : entries_) m = std::max(m, std::abs(v));
  return m;
}

namespace {

// Odometer over a subset of index positions of a tensor.
struct Odometer {
  std::vector<int> dims;
  std::vector<int> idx;
  bool done = false;

  explicit Odometer(std::vector<int> d) : dims(std::move(d)), idx(dims.size(), 0) {
    for (int d2 : dims)
      if (d2 == 0) done = true;
  }
  void advance() {
    for (int k = static_cast<int>(dims.size()) - 1; k >= 0; --k) {
      if (++idx[static_cast<size_t>(k)] < dims[static_cast<size_t>(k)]) return;
      idx[static_cast<size_t>(k)] = 0;
    }
    done = true;
  }
};

std::size_t flat_from(const std::vector<int>& dims, const std::vector<int>& idx) {
  std::size_t f = 0;
  for (std::size_t k = 0; k < dims.size(); ++k)
    f = f * static_cast<std::size_t>(dims[k]) + static_cast<std::size_t>(idx[k]);
  return f;
}

}  // namespace

DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     const std::vector<std::pair<int, int>>& pairs) {
  a.require_finite("contract lhs");
  b.require_finite("contract rhs");
  std::vector<bool> a_paired(static_cast<size_t>(a.rank()), false);
  std::vector<bool> b_paired(static_cast<size_t>(b.rank()), false);
  for (auto [ia, ib] : pairs) {
    if (ia < 0 || ia >= a.rank() || ib < 0 || ib >= b.rank())
      throw TensorError("contraction index out of range");
    if (a_paired[static_cast<size_t>(ia)] || b_paired[static_cast<size_t>(ib)])
      throw TensorError("index contracted twice");
    if (a.dims()[static_cast<size_t>(ia)] != b.dims()[static_cast<size_t>(ib)])
      throw TensorError("contraction dimension mismatch");
    if (a.variance()[static_cast<size_t>(ia)] == b.variance()[static_cast<size_t>(ib)])
      throw TensorError("contraction variance mismatch: need one upper and one lower index");
    a_paired[static_cast<size_t>(ia)] = true;
    b_paired[static_cast<size_t>(ib)] = true;
  }

  std::vector<int> out_dims;
  std::vector<Variance> out_var;
  std::vector<int> a_free, b_free;
  for (int i = 0; i < a.rank(); ++i)
    if (!a_paired[static_cast<size_t>(i)]) {
      a_free.push_back(i);
      out_dims.push_back(a.dims()[static_cast<size_t>(i)]);
      out_var.push_back(a.variance()[static_cast<size_t>(i)]);
    }
  for (int i = 0; i < b.rank(); ++i)
    if (!b_paired[static_cast<size_t>(i)]) {
      b_free.push_back(i);
      out_dims.push_back(b.dims()[static_cast<size_t>(i)]);
      out_var.push_back(b.variance()[static_cast<size_t>(i)]);
    }

  std::vector<int> pair_dims;
  for (auto [ia, ib] : pairs) {
    (void)ib;
    pair_dims.push_back(a.dims()[static_cast<size_t>(ia)]);
  }

  DenseTensor out = out_dims.empty() ? DenseTensor::scalar(0.0)
                                     : DenseTensor(out_dims, out_var);

  std::vector<int> a_idx(static_cast<size_t>(a.rank()), 0);
  std::vector<int> b_idx(static_cast<size_t>(b.rank()), 0);
  std::vector<int> free_dims = out_dims;

  for (Odometer of(free_dims); !of.done; of.advance()) {
    for (std::size_t k = 0; k < a_free.size(); ++k)
      a_idx[static_cast<size_t>(a_free[k])] = of.idx[k];
    for (std::size_t k = 0; k < b_free.size(); ++k)
      b_idx[static_cast<size_t>(b_free[k])] = of.idx[a_free.size() + k];
    double sum = 0.0;
    for (Odometer op(pair_dims); !op.done; op.advance()) {
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        a_idx[static_cast<size_t>(pairs[k].first)] = op.idx[k];
        b_idx[static_cast<size_t>(pairs[k].second)] = op.idx[k];
      }
      sum += a.entries()[flat_from(a.dims(), a_idx)] * b.entries()[flat_from(b.dims(), b_idx)];
    }
    out.entries()[flat_from(free_dims, of.idx)] = sum;
    if (free_dims.empty()) break;
  }
  return out;
}

namespace {

// Gauss-Jordan with partial pivoting on an n x n buffer.
bool invert_buffer(int n, std::vector<double>& a, std::vector<double>& inv) {
  inv.assign(static_cast<size_t>(n) * static_cast<size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) inv[static_cast<size_t>(i * n + i)] = 1.0;
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    double best = std::abs(a[static_cast<size_t>(col * n + col)]);
    for (int r = col + 1; r < n; ++r) {
      double v = std::abs(a[static_cast<size_t>(r * n + col)]);
      if (v > best) {
        best = v;
        pivot = r;
      }
    }
    if (best == 0.0) return false;
    if (pivot != col)
      for (int c = 0; c < n; ++c) {
        std::swap(a[static_cast<size_t>(pivot * n + c)], a[static_cast<size_t>(col * n + c)]);
        std::swap(inv[static_cast<size_t>(pivot * n + c)], inv[static_cast<size_t>(col * n + c)]);
      }
    const double d = a[static_cast<size_t>(col * n + col)];
    for (int c = 0; c < n; ++c) {
      a[static_cast<size_t>(col * n + c)] /= d;
      inv[static_cast<size_t>(col * n + c)] /= d;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[static_cast<size_t>(r * n + col)];
      if (f == 0.0) continue;
      for (int c = 0; c < n; ++c) {
        a[static_cast<size_t>(r * n + c)] -= f * a[static_cast<size_t>(col * n + c)];
        inv[static_cast<size_t>(r * n + c)] -= f * inv[static_cast<size_t>(col * n + c)];
      }
    }
  }
  return true;
}

double row_sum_norm(int n, const std::vector<double>& a) {
  double m = 0.0;
  for (int r = 0; r < n; ++r) {
    double s = 0.0;
    for (int c = 0; c < n; ++c) s += std::abs(a[static_cast<size_t>(r * n + c)]);
    m = std::max(m, s);
  }
  return m;
}

}  // namespace

DenseTensor matrix_inverse(const DenseTensor& a, double cond_bound) {
  if (a.rank() != 2 || a.dims()[0] != a.dims()[1])
    throw TensorError("matrix_inverse: need a square rank-2 tensor");
  a.require_finite("matrix_inverse");
  const int n = a.dims()[0];
  std::vector<double> buf = a.entries();
  std::vector<double> inv;
  const double norm_a = row_sum_norm(n, buf);
  if (!invert_buffer(n, buf, inv))
    throw SingularError("matrix_inverse: singular matrix");
  const double cond = norm_a * row_sum_norm(n, inv);
  if (!(cond < cond_bound))
    throw SingularError("matrix_inverse: ill-conditioned matrix (cond ~ " +
                        std::to_string(cond) + ")");
  // Inverse pairs its first index against the input's last index.
  auto flip = [](Variance v) {
    return v == Variance::Upper ? Variance::Lower : Variance::Upper;
  };
  DenseTensor out({n, n}, {flip(a.variance()[1]), flip(a.variance()[0])});
  out.entries() = std::move(inv);
  return out;
}

SymEig sym_eig(const DenseTensor& a) {
  if (a.rank() != 2 || a.dims()[0] != a.dims()[1])
    throw TensorError("sym_eig: need a square rank-2 tensor");
  a.require_finite("sym_eig");
  const int n = a.dims()[0];
  std::vector<double> m = a.entries();
  std::vector<double> v(static_cast<size_t>(n) * static_cast<size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) v[static_cast<size_t>(i * n + i)] = 1.0;
  auto at = [n](std::vector<double>& x, int r, int c) -> double& {
    return x[static_cast<size_t>(r * n + c)];
  };
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += m[static_cast<size_t>(p * n + q)] * m[static_cast<size_t>(p * n + q)];
    if (off < 1e-30) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        const double apq = at(m, p, q);
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (at(m, q, q) - at(m, p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double mkp = at(m, k, p), mkq = at(m, k, q);
          at(m, k, p) = c * mkp - s * mkq;
          at(m, k, q) = s * mkp + c * mkq;
        }
        for (int k = 0; k < n; ++k) {
          const double mpk = at(m, p, k), mqk = at(m, q, k);
          at(m, p, k) = c * mpk - s * mqk;
          at(m, q, k) = s * mpk + c * mqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = at(v, k, p), vkq = at(v, k, q);
          at(v, k, p) = c * vkp - s * vkq;
          at(v, k, q) = s * vkp + c * vkq;
        }
      }
  }
  SymEig out;
  out.values.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) out.values[static_cast<size_t>(i)] = m[static_cast<size_t>(i * n + i)];
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int x, int y) { return out.values[static_cast<size_t>(x)] < out.values[static_cast<size_t>(y)]; });
  SymEig sorted;
  sorted.values.resize(static_cast<size_t>(n));
  sorted.vectors.assign(static_cast<size_t>(n) * static_cast<size_t>(n), 0.0);
  for (int k = 0; k < n; ++k) {
    sorted.values[static_cast<size_t>(k)] = out.values[static_cast<size_t>(order[static_cast<size_t>(k)])];
    for (int r = 0; r < n; ++r)
      sorted.vectors[static_cast<size_t>(r * n + k)] = v[static_cast<size_t>(r * n + order[static_cast<size_t>(k)])];
  }
  return sorted;
}

double min_symmetric_eigenvalue(const DenseTensor& a) {
  return sym_eig(a).values.front();
}

double form_operator_norm(const DenseTensor& alpha, const DenseTensor& g) {
  if (alpha.rank() != 2 || g.rank() != 2) throw TensorError("form_operator_norm: rank-2 inputs required");
  const int n = g.dims()[0];
  SymEig eg = sym_eig(g);
  if (eg.values.front() <= 0.0) throw SingularError("form_operator_norm: metric not positive definite");
  // C = g^{-1/2} alpha g^{-1/2}; norm is sqrt(max eig of C^T C).
  std::vector<double> gih(static_cast<size_t>(n) * static_cast<size_t>(n), 0.0);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      double s = 0.0;
      for (int k = 0; k < n; ++k)
        s += eg.vectors[static_cast<size_t>(r * n + k)] *
             eg.vectors[static_cast<size_t>(c * n + k)] / std::sqrt(eg.values[static_cast<size_t>(k)]);
      gih[static_cast<size_t>(r * n + c)] = s;
    }
  std::vector<double> cm(static_cast<size_t>(n) * static_cast<size_t>(n), 0.0);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      double s = 0.0;
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          s += gih[static_cast<size_t>(r * n + k)] * alpha(k, l) * gih[static_cast<size_t>(l * n + c)];
      cm[static_cast<size_t>(r * n + c)] = s;
    }
  DenseTensor ctc({n, n}, {Variance::Lower, Variance::Lower});
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      double s = 0.0;
      for (int k = 0; k < n; ++k)
        s += cm[static_cast<size_t>(k * n + r)] * cm[static_cast<size_t>(k * n + c)];
      ctc.ref(r, c) = s;
    }
  return std::sqrt(std::max(0.0, sym_eig(ctc).values.back()));
}

}  // namespace gmcf
