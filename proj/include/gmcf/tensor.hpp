#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gmcf {

inline constexpr int kMaxDim = 8;   // ambient dimension 2n <= 8
inline constexpr int kMaxRank = 5;

struct TensorError : std::runtime_error {
  explicit TensorError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Singular or ill-conditioned matrix; on eta this signals loss of the
/// almost-Lagrangian property.
struct SingularError : TensorError {
  explicit SingularError(const std::string& msg) : TensorError(msg) {}
};

/// A point in a single coordinate chart. Fixed capacity, no heap.
struct ChartPoint {
  std::array<double, kMaxDim> c{};
  int dim = 0;

  static ChartPoint zero(int dim);
  static ChartPoint of(std::initializer_list<double> coords);

  double operator[](int i) const { return c[static_cast<size_t>(i)]; }
  double& operator[](int i) { return c[static_cast<size_t>(i)]; }
  bool finite() const;
  ChartPoint shifted(int coord, double delta) const;
};

enum class Variance : std::uint8_t { Upper, Lower };

/// Dense small tensor with per-index variance tags, row-major entries.
class DenseTensor {
 public:
  DenseTensor() = default;
  DenseTensor(std::vector<int> dims, std::vector<Variance> variance);

  static DenseTensor scalar(double value);
  static DenseTensor identity(int dim);  // delta^a_b, (upper, lower)
  static DenseTensor vector(std::initializer_list<double> entries, Variance v);

  int rank() const { return static_cast<int>(dims_.size()); }
  const std::vector<int>& dims() const { return dims_; }
  const std::vector<Variance>& variance() const { return variance_; }
  const std::vector<double>& entries() const { return entries_; }
  std::vector<double>& entries() { return entries_; }
  std::size_t size() const { return entries_.size(); }

  double at(std::initializer_list<int> idx) const { return entries_[flat(idx)]; }
  double& at(std::initializer_list<int> idx) { return entries_[flat(idx)]; }
  double operator()(int i) const { return at({i}); }
  double operator()(int i, int j) const { return at({i, j}); }
  double operator()(int i, int j, int k) const { return at({i, j, k}); }
  double operator()(int i, int j, int k, int l) const { return at({i, j, k, l}); }
  double& ref(int i) { return at({i}); }
  double& ref(int i, int j) { return at({i, j}); }
  double& ref(int i, int j, int k) { return at({i, j, k}); }
  double& ref(int i, int j, int k, int l) { return at({i, j, k, l}); }

  bool finite() const;
  void require_finite(const char* what) const;

  DenseTensor& operator+=(const DenseTensor& other);
  DenseTensor& operator-=(const DenseTensor& other);
  DenseTensor& operator*=(double s);
  friend DenseTensor operator+(DenseTensor a, const DenseTensor& b) { return a += b; }
  friend DenseTensor operator-(DenseTensor a, const DenseTensor& b) { return a -= b; }
  friend DenseTensor operator*(double s, DenseTensor t) { return t *= s; }

  double inf_norm() const;

  std::size_t flat(std::initializer_list<int> idx) const;

 private:
  std::vector<int> dims_;
  std::vector<Variance> variance_;
  std::vector<double> entries_;
};

/// Einstein-summation contraction of `a` with `b` over the given index
/// pairs (position in a, position in b). Each pair must join one upper and
/// one lower index of equal dimension; the result carries the uncontracted
/// indices of a followed by those of b.
DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     const std::vector<std::pair<int, int>>& pairs);

/// Inverse of a square rank-2 tensor. Throws SingularError when the matrix
/// is singular or the condition estimate exceeds `cond_bound`.
DenseTensor matrix_inverse(const DenseTensor& a, double cond_bound = 1e12);

struct SymEig {
  std::vector<double> values;  // ascending
  std::vector<double> vectors; // column k = eigenvector of values[k], row-major n x n
};

/// Jacobi eigensolver for symmetric rank-2 tensors (dims <= 8).
SymEig sym_eig(const DenseTensor& a);

double min_symmetric_eigenvalue(const DenseTensor& a);

/// Operator norm of a 2-form alpha w.r.t. the inner product g:
/// the largest singular value of g^{-1/2} alpha g^{-1/2}.
double form_operator_norm(const DenseTensor& alpha, const DenseTensor& g);

}  // namespace gmcf
