#pragma once

// Square tensors of order 2N over C with modes I_1 x ... x I_N x I_1 x ... x I_N.
// The product contracts the trailing N modes of the left factor against the
// leading N modes of the right factor.  Storage is the unfolded D x D matrix,
// D = prod I_n, with both multi-indices flattened in row-major order
// (first mode slowest).  Unfolding is a *-ring isomorphism: products,
// adjoints and sums commute with it, which is what the rest of this
// library leans on.

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dti {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

// Mode list for one "side" of a square tensor.  All modes >= 1, non-empty.
class TensorShape {
 public:
  explicit TensorShape(std::vector<int> modes);

  const std::vector<int>& modes() const { return modes_; }
  int order() const { return static_cast<int>(modes_.size()); }
  // Product of the modes: the side length of the unfolded matrix.
  int dim() const { return dim_; }

  // Row-major flattening of one multi-index (first mode slowest).
  int flatten(const std::vector<int>& idx) const;
  std::vector<int> unflatten(int flat) const;

  bool operator==(const TensorShape& o) const { return modes_ == o.modes_; }
  bool operator!=(const TensorShape& o) const { return !(*this == o); }

  std::string to_string() const;

 private:
  std::vector<int> modes_;
  int dim_;
};

// Square tensor held as its unfolded matrix.  Immutable shape, mutable entries.
class EinsteinTensor {
 public:
  EinsteinTensor(TensorShape shape, Matrix unfolded);

  static EinsteinTensor zero(const TensorShape& shape);
  static EinsteinTensor identity(const TensorShape& shape);

  const TensorShape& shape() const { return shape_; }
  int dim() const { return shape_.dim(); }

  const Matrix& unfolded() const { return mat_; }
  Matrix& unfolded() { return mat_; }

  // Entry by paired multi-indices; used by the naive contraction oracles.
  Complex at(const std::vector<int>& row_idx, const std::vector<int>& col_idx) const;
  void set(const std::vector<int>& row_idx, const std::vector<int>& col_idx, Complex v);

  double max_abs_entry() const;
  // max_ij |m_ij - conj(m_ji)|; zero iff exactly Hermitian.
  double hermiticity_error() const;

 private:
  TensorShape shape_;
  Matrix mat_;
};

// Elementwise sum; shapes must match.
EinsteinTensor add(const EinsteinTensor& x, const EinsteinTensor& y);
EinsteinTensor subtract(const EinsteinTensor& x, const EinsteinTensor& y);
EinsteinTensor scale(Complex a, const EinsteinTensor& x);

// Contraction of the trailing modes of x against the leading modes of y.
// Equals the matrix product of the unfoldings.
EinsteinTensor einstein_product(const EinsteinTensor& x, const EinsteinTensor& y);

// Conjugate transpose: swaps the two mode groups and conjugates.
EinsteinTensor adjoint(const EinsteinTensor& x);

Matrix unfold(const EinsteinTensor& x);
// Inverse of unfold; m must be square with side shape.dim().
EinsteinTensor fold(const Matrix& m, const TensorShape& shape);

// tol < 0 means the default 1e-10 * (1 + max |entry|).
bool is_hermitian(const EinsteinTensor& x, double tol = -1.0);

double frobenius_norm(const EinsteinTensor& x);

// JSON file format: {"modes": [2, 3], "entries": [[re, im], ...]} with
// entries row-major over (row, col) of the unfolding.
EinsteinTensor load_tensor(const std::string& path);
void save_tensor(const EinsteinTensor& x, const std::string& path);

}  // namespace dti
