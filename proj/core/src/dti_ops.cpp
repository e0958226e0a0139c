#include "dti/dti_ops.hpp"

#include <stdexcept>

#include <fmt/format.h>

namespace dti {

namespace {

void require_shape(const SpectralDecomposition& dec, const EinsteinTensor& x,
                   const char* op) {
  if (dec.shape != x.shape()) {
    throw std::invalid_argument(fmt::format("{}: shape mismatch {} vs {}", op,
                                            dec.shape.to_string(),
                                            x.shape().to_string()));
  }
}

}  // namespace

Matrix coefficient_matrix(const EinsteinTensor& x, const SpectralDecomposition& dec_a,
                          const SpectralDecomposition& dec_b) {
  require_shape(dec_a, x, "coefficient_matrix");
  require_shape(dec_b, x, "coefficient_matrix");
  return dec_a.basis.adjoint() * x.unfolded() * dec_b.basis;
}

EinsteinTensor reconstruct_from_coefficients(const Matrix& coeff,
                                             const SpectralDecomposition& dec_a,
                                             const SpectralDecomposition& dec_b) {
  return fold(dec_a.basis * coeff * dec_b.basis.adjoint(), dec_a.shape);
}

Matrix kernel_matrix(const Kernel& psi, const Eigen::VectorXd& lambda,
                     const Eigen::VectorXd& mu) {
  Matrix w(lambda.size(), mu.size());
  for (int i = 0; i < lambda.size(); ++i) {
    for (int j = 0; j < mu.size(); ++j) {
      try {
        w(i, j) = psi(lambda(i), mu(j));
      } catch (const std::domain_error& e) {
        throw std::domain_error(
            fmt::format("kernel {} at eigenvalue pair (i={}, j={}): "
                        "lambda_i={}, mu_j={}: {}",
                        psi.name(), i, j, lambda(i), mu(j), e.what()));
      }
    }
  }
  return w;
}

EinsteinTensor dti_apply(const SpectralDecomposition& dec_a,
                         const SpectralDecomposition& dec_b, const Kernel& psi,
                         const EinsteinTensor& x) {
  if (psi.arity() != 2) {
    throw std::invalid_argument("dti_apply: kernel must have arity 2");
  }
  const Matrix w = kernel_matrix(psi, dec_a.eigenvalues, dec_b.eigenvalues);
  const Matrix coeff = coefficient_matrix(x, dec_a, dec_b);
  return reconstruct_from_coefficients(coeff.cwiseProduct(w), dec_a, dec_b);
}

EinsteinTensor dti_apply_naive(const SpectralDecomposition& dec_a,
                               const SpectralDecomposition& dec_b, const Kernel& psi,
                               const EinsteinTensor& x) {
  if (psi.arity() != 2) {
    throw std::invalid_argument("dti_apply_naive: kernel must have arity 2");
  }
  require_shape(dec_a, x, "dti_apply_naive");
  require_shape(dec_b, x, "dti_apply_naive");
  const int d = dec_a.dim();
  Matrix acc = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    const Matrix p_i = dec_a.projector(i).unfolded();
    for (int j = 0; j < d; ++j) {
      const Matrix q_j = dec_b.projector(j).unfolded();
      acc += psi(dec_a.eigenvalues(i), dec_b.eigenvalues(j)) * p_i * x.unfolded() * q_j;
    }
  }
  return fold(acc, x.shape());
}

EinsteinTensor tti_apply(const SpectralDecomposition& dec_a,
                         const SpectralDecomposition& dec_b,
                         const SpectralDecomposition& dec_c, const Kernel& phi,
                         const EinsteinTensor& x, const EinsteinTensor& y) {
  if (phi.arity() != 3) {
    throw std::invalid_argument("tti_apply: kernel must have arity 3");
  }
  require_shape(dec_a, x, "tti_apply");
  require_shape(dec_b, x, "tti_apply");
  require_shape(dec_c, y, "tti_apply");
  const int d = dec_a.dim();
  const Matrix c1 = dec_a.basis.adjoint() * x.unfolded() * dec_b.basis;
  const Matrix c2 = dec_b.basis.adjoint() * y.unfolded() * dec_c.basis;
  Matrix m(d, d);
  for (int i = 0; i < d; ++i) {
    for (int k = 0; k < d; ++k) {
      Complex acc = 0.0;
      for (int j = 0; j < d; ++j) {
        try {
          acc += phi(dec_a.eigenvalues(i), dec_b.eigenvalues(j), dec_c.eigenvalues(k)) *
                 c1(i, j) * c2(j, k);
        } catch (const std::domain_error& e) {
          throw std::domain_error(fmt::format(
              "kernel {} at eigenvalue triple (i={}, j={}, k={}): {}", phi.name(), i,
              j, k, e.what()));
        }
      }
      m(i, k) = acc;
    }
  }
  return fold(dec_a.basis * m * dec_c.basis.adjoint(), x.shape());
}

EinsteinTensor tti_apply_naive(const SpectralDecomposition& dec_a,
                               const SpectralDecomposition& dec_b,
                               const SpectralDecomposition& dec_c, const Kernel& phi,
                               const EinsteinTensor& x, const EinsteinTensor& y) {
  if (phi.arity() != 3) {
    throw std::invalid_argument("tti_apply_naive: kernel must have arity 3");
  }
  require_shape(dec_a, x, "tti_apply_naive");
  require_shape(dec_b, x, "tti_apply_naive");
  require_shape(dec_c, y, "tti_apply_naive");
  const int d = dec_a.dim();
  Matrix acc = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    const Matrix p_i = dec_a.projector(i).unfolded();
    for (int j = 0; j < d; ++j) {
      const Matrix q_j = dec_b.projector(j).unfolded();
      for (int k = 0; k < d; ++k) {
        const Matrix r_k = dec_c.projector(k).unfolded();
        acc += phi(dec_a.eigenvalues(i), dec_b.eigenvalues(j), dec_c.eigenvalues(k)) *
               p_i * x.unfolded() * q_j * y.unfolded() * r_k;
      }
    }
  }
  return fold(acc, x.shape());
}

double perturbation_residual(const ScalarFunction& f, const EinsteinTensor& a,
                             const EinsteinTensor& b, const NormSpec& rho) {
  const SpectralDecomposition dec_a = eigh(a);
  const SpectralDecomposition dec_b = eigh(b);
  const EinsteinTensor lhs = subtract(apply_function(f, dec_a), apply_function(f, dec_b));
  const EinsteinTensor rhs = dti_apply(dec_a, dec_b, Kernel::first_divided_difference(f),
                                       subtract(a, b));
  return norm(subtract(lhs, rhs), rho);
}

double quasi_commutator_residual(const ScalarFunction& f, const EinsteinTensor& a,
                                 const EinsteinTensor& b, const EinsteinTensor& d,
                                 const NormSpec& rho) {
  const SpectralDecomposition dec_a = eigh(a);
  const SpectralDecomposition dec_b = eigh(b);
  const EinsteinTensor fa = apply_function(f, dec_a);
  const EinsteinTensor fb = apply_function(f, dec_b);
  const EinsteinTensor lhs =
      subtract(einstein_product(d, fa), einstein_product(fb, d));
  const EinsteinTensor z =
      subtract(einstein_product(d, a), einstein_product(b, d));
  // B-projectors left, A-projectors right: weight (j, i) pairs the argument
  // swap of the kernel.
  const Kernel psi = Kernel::first_divided_difference(f);
  const Kernel swapped = Kernel::from_function(
      psi.name() + "^T", [psi](double muj, double lami) { return psi(lami, muj); },
      psi.argument_domain());
  const EinsteinTensor rhs = dti_apply(dec_b, dec_a, swapped, z);
  return norm(subtract(lhs, rhs), rho);
}

EinsteinTensor frechet_derivative(const ScalarFunction& f,
                                  const SpectralDecomposition& dec_a,
                                  const EinsteinTensor& x) {
  return dti_apply(dec_a, dec_a, Kernel::first_divided_difference(f), x);
}

EinsteinTensor quasi_frechet_derivative(const ScalarFunction& f,
                                        const SpectralDecomposition& dec_a,
                                        const EinsteinTensor& a,
                                        const EinsteinTensor& x,
                                        const EinsteinTensor& d) {
  const EinsteinTensor comm =
      subtract(einstein_product(d, a), einstein_product(a, d));
  const double limit = 1e-8 * frobenius_norm(d) * frobenius_norm(a);
  const double measured = frobenius_norm(comm);
  if (measured > limit) {
    throw std::invalid_argument(fmt::format(
        "quasi_frechet_derivative: D does not commute with A "
        "(commutator Frobenius norm {:.3e} exceeds {:.3e})",
        measured, limit));
  }
  return frechet_derivative(f, dec_a, einstein_product(d, x));
}

}  // namespace dti
