#include "dti/norms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace dti {

std::string NormSpec::to_string() const {
  switch (kind) {
    case NormKind::schatten: return fmt::format("schatten({})", p);
    case NormKind::kyfan: return fmt::format("kyfan({})", k);
    case NormKind::ktrace: return fmt::format("ktrace({})", k);
    case NormKind::operator_norm: return "operator";
  }
  throw std::logic_error("NormSpec::to_string: unreachable");
}

Eigen::VectorXd singular_values(const EinsteinTensor& x) {
  Eigen::JacobiSVD<Matrix> svd(x.unfolded());
  return svd.singularValues();  // Eigen returns descending
}

double elementary_symmetric(const Eigen::VectorXd& values, int k) {
  const int n = static_cast<int>(values.size());
  if (k < 0 || k > n) {
    throw std::invalid_argument(
        fmt::format("elementary_symmetric: k = {} out of range [0, {}]", k, n));
  }
  // Coefficient recurrence for prod_i (1 + sigma_i t), largest values first.
  std::vector<double> e(k + 1, 0.0);
  e[0] = 1.0;
  for (int i = 0; i < n; ++i) {
    const double s = values(i);
    for (int j = std::min(k, i + 1); j >= 1; --j) e[j] += s * e[j - 1];
  }
  return e[k];
}

namespace {

void validate(const NormSpec& spec, int d) {
  switch (spec.kind) {
    case NormKind::schatten:
      if (!(spec.p >= 1.0)) {
        throw std::invalid_argument(
            fmt::format("norm: schatten exponent must be >= 1, got {}", spec.p));
      }
      break;
    case NormKind::kyfan:
    case NormKind::ktrace:
      if (spec.k < 1 || spec.k > d) {
        throw std::invalid_argument(fmt::format(
            "norm: {} index {} out of range [1, {}]",
            spec.kind == NormKind::kyfan ? "kyfan" : "ktrace", spec.k, d));
      }
      break;
    case NormKind::operator_norm:
      break;
  }
}

}  // namespace

double norm(const EinsteinTensor& x, const NormSpec& spec) {
  validate(spec, x.dim());
  const Eigen::VectorXd sigma = singular_values(x);
  switch (spec.kind) {
    case NormKind::schatten: {
      if (spec.p == 2.0) return sigma.norm();
      double sum = 0.0;
      for (int i = 0; i < sigma.size(); ++i) sum += std::pow(sigma(i), spec.p);
      return std::pow(sum, 1.0 / spec.p);
    }
    case NormKind::kyfan:
      return sigma.head(spec.k).sum();
    case NormKind::ktrace:
      return elementary_symmetric(sigma, spec.k);
    case NormKind::operator_norm:
      return sigma(0);
  }
  throw std::logic_error("norm: unreachable");
}

double verify_unitary_invariance(const EinsteinTensor& x, const EinsteinTensor& u,
                                 const NormSpec& spec) {
  if (x.shape() != u.shape()) {
    throw std::invalid_argument(
        fmt::format("verify_unitary_invariance: shape mismatch {} vs {}",
                    x.shape().to_string(), u.shape().to_string()));
  }
  const Matrix gram = u.unfolded().adjoint() * u.unfolded();
  const double defect =
      (gram - Matrix::Identity(u.dim(), u.dim())).cwiseAbs().maxCoeff();
  if (defect > 1e-10) {
    throw std::invalid_argument(fmt::format(
        "verify_unitary_invariance: input is not unitary (defect {:.3e})", defect));
  }
  const double base = norm(x, spec);
  const double left = norm(einstein_product(u, x), spec);
  const double right = norm(einstein_product(x, u), spec);
  const double scale = std::max(base, 1e-300);
  return std::max(std::abs(left - base), std::abs(right - base)) / scale;
}

}  // namespace dti
