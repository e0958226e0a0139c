#pragma once

// Double and triple spectral integrals and the operator identities built
// from them.  With A = sum_i lambda_i P_i and B = sum_j mu_j Q_j,
//
//   dti(X)    = sum_ij  psi(lambda_i, mu_j) P_i * X * Q_j
//   tti(X, Y) = sum_ijk phi(lambda_i, mu_j, nu_k) P_i * X * Q_j * Y * R_k
//
// The fast path works in the joint eigenbasis: the coefficient matrix
// C = U^H X V is weighted entrywise by the kernel and transformed back,
// O(D^3) overall.  The naive paths evaluate the literal projector sums and
// exist as reference implementations for oracle tests.
//
// Identities (residuals returned in a chosen gauge):
//   perturbation:      f(A) - f(B) = dti_{f^[1]}(A - B)
//   quasi commutator:  D*f(A) - f(B)*D = sum_ij f^[1](lambda_i, mu_j)
//                      Q_j * (D*A - B*D) * P_i
// The quasi form sandwiches with B-projectors on the left and A-projectors
// on the right; that orientation is forced by matching matrix elements
// v_j^H (...) u_i on both sides.

#include "dti/kernels.hpp"
#include "dti/norms.hpp"
#include "dti/spectral.hpp"
#include "dti/tensor.hpp"

namespace dti {

// C_ij = <X * V_j, U_i> = (U^H X V)_ij.  X = sum_ij C_ij U_i V_j^H.
Matrix coefficient_matrix(const EinsteinTensor& x, const SpectralDecomposition& dec_a,
                          const SpectralDecomposition& dec_b);

EinsteinTensor reconstruct_from_coefficients(const Matrix& coeff,
                                             const SpectralDecomposition& dec_a,
                                             const SpectralDecomposition& dec_b);

// W_ij = psi(lambda_i, mu_j); domain violations are rethrown naming the
// offending index pair and eigenvalues.
Matrix kernel_matrix(const Kernel& psi, const Eigen::VectorXd& lambda,
                     const Eigen::VectorXd& mu);

EinsteinTensor dti_apply(const SpectralDecomposition& dec_a,
                         const SpectralDecomposition& dec_b, const Kernel& psi,
                         const EinsteinTensor& x);
EinsteinTensor dti_apply_naive(const SpectralDecomposition& dec_a,
                               const SpectralDecomposition& dec_b, const Kernel& psi,
                               const EinsteinTensor& x);

EinsteinTensor tti_apply(const SpectralDecomposition& dec_a,
                         const SpectralDecomposition& dec_b,
                         const SpectralDecomposition& dec_c, const Kernel& phi,
                         const EinsteinTensor& x, const EinsteinTensor& y);
EinsteinTensor tti_apply_naive(const SpectralDecomposition& dec_a,
                               const SpectralDecomposition& dec_b,
                               const SpectralDecomposition& dec_c, const Kernel& phi,
                               const EinsteinTensor& x, const EinsteinTensor& y);

// || f(A) - f(B) - dti_{f^[1]}(A - B) ||_rho
double perturbation_residual(const ScalarFunction& f, const EinsteinTensor& a,
                             const EinsteinTensor& b, const NormSpec& rho);

// || D*f(A) - f(B)*D - sum_ij f^[1] Q_j (D*A - B*D) P_i ||_rho
double quasi_commutator_residual(const ScalarFunction& f, const EinsteinTensor& a,
                                 const EinsteinTensor& b, const EinsteinTensor& d,
                                 const NormSpec& rho);

// Derivative of the spectral calculus: t -> f(A + tX) at t = 0, i.e.
// dti_{f^[1]} over (A, A) applied to X.
EinsteinTensor frechet_derivative(const ScalarFunction& f,
                                  const SpectralDecomposition& dec_a,
                                  const EinsteinTensor& x);

// Same integral applied to D*X.  D must commute with A within
// 1e-8 * |D|_F * |A|_F; the measured commutator norm is reported otherwise.
EinsteinTensor quasi_frechet_derivative(const ScalarFunction& f,
                                        const SpectralDecomposition& dec_a,
                                        const EinsteinTensor& a,
                                        const EinsteinTensor& x,
                                        const EinsteinTensor& d);

}  // namespace dti
