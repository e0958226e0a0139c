#include "dti/spectral.hpp"

#include <stdexcept>

#include <fmt/format.h>

namespace dti {

EinsteinTensor SpectralDecomposition::projector(int i) const {
  if (i < 0 || i >= dim()) {
    throw std::out_of_range(
        fmt::format("projector: index {} out of range for dim {}", i, dim()));
  }
  return fold(basis.col(i) * basis.col(i).adjoint(), shape);
}

EinsteinTensor SpectralDecomposition::reconstruct() const {
  return fold(basis * eigenvalues.asDiagonal() * basis.adjoint(), shape);
}

SpectralDecomposition eigh(const EinsteinTensor& h, double tol) {
  if (tol < 0.0) tol = 1e-10 * (1.0 + h.max_abs_entry());
  const double herr = h.hermiticity_error();
  if (herr > tol) {
    throw std::invalid_argument(fmt::format(
        "eigh: input is not Hermitian (asymmetry {:.3e} exceeds tolerance {:.3e})",
        herr, tol));
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h.unfolded());
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("eigh: eigensolver failed to converge");
  }
  const int d = h.dim();
  SpectralDecomposition dec{h.shape(), Eigen::VectorXd(d), Matrix(d, d)};
  // Eigen returns ascending order; store descending.
  for (int i = 0; i < d; ++i) {
    dec.eigenvalues(i) = solver.eigenvalues()(d - 1 - i);
    dec.basis.col(i) = solver.eigenvectors().col(d - 1 - i);
  }
  return dec;
}

EinsteinTensor apply_function(const ScalarFunction& f,
                              const SpectralDecomposition& dec) {
  const int d = dec.dim();
  Eigen::VectorXd mapped(d);
  for (int i = 0; i < d; ++i) {
    const double lambda = dec.eigenvalues(i);
    if (!f.domain().contains(lambda)) {
      throw std::domain_error(fmt::format(
          "apply_function: eigenvalue {} (index {}) outside domain {} of {}",
          lambda, i, f.domain().to_string(), f.name()));
    }
    mapped(i) = f(lambda);
  }
  return fold(dec.basis * mapped.asDiagonal() * dec.basis.adjoint(), dec.shape);
}

EinsteinTensor apply_function(const ScalarFunction& f, const EinsteinTensor& h) {
  return apply_function(f, eigh(h));
}

bool is_positive_definite(const SpectralDecomposition& dec, double tol) {
  return dec.eigenvalues(dec.dim() - 1) > tol;
}

bool is_positive_definite(const EinsteinTensor& h, double tol) {
  return is_positive_definite(eigh(h), tol);
}

}  // namespace dti
