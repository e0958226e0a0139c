#pragma once

// Unitarily invariant gauges of square tensors, all computed from the
// singular values of the unfolding (descending order, all D of them):
//   schatten(p):  (sum sigma_i^p)^(1/p), p >= 1
//   kyfan(k):     sigma_1 + ... + sigma_k, 1 <= k <= D
//   ktrace(k):    elementary symmetric polynomial e_k(sigma), 1 <= k <= D
//   operator:     sigma_1 (same as kyfan(1))
// ktrace(k >= 2) is not subadditive and is excluded from any test that
// leans on the triangle inequality or submultiplicativity.

#include <string>

#include "dti/tensor.hpp"

namespace dti {

enum class NormKind { schatten, kyfan, ktrace, operator_norm };

struct NormSpec {
  NormKind kind = NormKind::schatten;
  double p = 2.0;  // schatten only
  int k = 1;       // kyfan / ktrace only

  static NormSpec schatten(double p) { return {NormKind::schatten, p, 1}; }
  static NormSpec kyfan(int k) { return {NormKind::kyfan, 2.0, k}; }
  static NormSpec ktrace(int k) { return {NormKind::ktrace, 2.0, k}; }
  static NormSpec operator_norm() { return {NormKind::operator_norm, 2.0, 1}; }

  std::string to_string() const;
};

// All D singular values of the unfolding, descending.
Eigen::VectorXd singular_values(const EinsteinTensor& x);

double norm(const EinsteinTensor& x, const NormSpec& spec);

// Max relative deviation of |U*X| and |X*U| gauges from |X|.  U must be
// unitary within 1e-10; throws otherwise, reporting the defect.
double verify_unitary_invariance(const EinsteinTensor& x, const EinsteinTensor& u,
                                 const NormSpec& spec);

// e_k of a nonnegative vector by the descending product expansion.
double elementary_symmetric(const Eigen::VectorXd& values, int k);

}  // namespace dti
