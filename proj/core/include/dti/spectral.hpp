#pragma once

// Hermitian eigenstructure of square tensors via the unfolding, and the
// spectral function calculus f(A) = sum_i f(lambda_i) P_i built on it.
// Eigenvalues are stored in descending order; eigenvectors are columns of
// a unitary basis for the unfolding.

#include <vector>

#include "dti/scalar_function.hpp"
#include "dti/tensor.hpp"

namespace dti {

struct SpectralDecomposition {
  TensorShape shape;
  Eigen::VectorXd eigenvalues;  // descending
  Matrix basis;                 // unitary; column i pairs with eigenvalues[i]

  int dim() const { return shape.dim(); }

  // Rank-one projector U_i * U_i^H onto the i-th eigendirection.
  EinsteinTensor projector(int i) const;

  // sum_i eigenvalues[i] * P_i; reconstructs the decomposed tensor.
  EinsteinTensor reconstruct() const;
};

// Decompose a Hermitian tensor.  Throws if the hermiticity error exceeds
// tol (default 1e-10 * (1 + max |entry|)) or the eigensolver fails.
SpectralDecomposition eigh(const EinsteinTensor& h, double tol = -1.0);

// f applied to the spectrum: sum_i f(lambda_i) P_i.  Throws a domain error
// naming the offending eigenvalue if one falls outside f's domain.
EinsteinTensor apply_function(const ScalarFunction& f, const SpectralDecomposition& dec);

// Convenience: eigh then apply_function.
EinsteinTensor apply_function(const ScalarFunction& f, const EinsteinTensor& h);

// True iff the smallest eigenvalue exceeds tol.
bool is_positive_definite(const SpectralDecomposition& dec, double tol = 0.0);
bool is_positive_definite(const EinsteinTensor& h, double tol = 0.0);

}  // namespace dti
