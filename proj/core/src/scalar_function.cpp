#include "dti/scalar_function.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "dti/special_functions.hpp"

namespace dti {

std::string Interval::to_string() const {
  return fmt::format("{}{}, {}{}", lo_open ? "(" : "[", lo, hi, hi_open ? ")" : "]");
}

double poly_eval(const std::vector<double>& coeffs, double x) {
  double acc = 0.0;
  for (size_t k = coeffs.size(); k-- > 0;) acc = acc * x + coeffs[k];
  return acc;
}

std::vector<double> poly_derivative(const std::vector<double>& coeffs) {
  if (coeffs.size() <= 1) return {};
  std::vector<double> d(coeffs.size() - 1);
  for (size_t k = 1; k < coeffs.size(); ++k) d[k - 1] = coeffs[k] * static_cast<double>(k);
  return d;
}

void ScalarFunction::check_domain(double x) const {
  if (!domain_.contains(x)) {
    throw std::domain_error(fmt::format("{}: argument {} outside domain {}", name_,
                                        x, domain_.to_string()));
  }
}

double ScalarFunction::eval_unchecked(double x) const {
  switch (kind_) {
    case Kind::polynomial: return poly_eval(coeffs_, x);
    case Kind::exponential: return std::exp(x);
    case Kind::logarithm: return std::log(x);
    case Kind::square_root: return std::sqrt(x);
    case Kind::power: return std::pow(x, alpha_);
    case Kind::polygamma: return polygamma(order_, x);
    case Kind::custom: return fn_(x);
  }
  throw std::logic_error("ScalarFunction: unreachable kind");
}

double ScalarFunction::operator()(double x) const {
  check_domain(x);
  return eval_unchecked(x);
}

bool ScalarFunction::has_analytic_derivatives() const {
  return kind_ != Kind::custom || static_cast<bool>(dfn_);
}

double ScalarFunction::derivative(double x) const {
  check_domain(x);
  switch (kind_) {
    case Kind::polynomial: return poly_eval(poly_derivative(coeffs_), x);
    case Kind::exponential: return std::exp(x);
    case Kind::logarithm: return 1.0 / x;
    case Kind::square_root: return 0.5 / std::sqrt(x);
    case Kind::power: return alpha_ * std::pow(x, alpha_ - 1.0);
    case Kind::polygamma: return polygamma(order_ + 1, x);
    case Kind::custom: break;
  }
  if (dfn_) return dfn_(x);
  // Central difference, step shrunk so both probes stay inside the domain.
  double h = std::cbrt(std::numeric_limits<double>::epsilon()) * (1.0 + std::abs(x));
  while (h > 0.0 && (!domain_.contains(x + h) || !domain_.contains(x - h))) h *= 0.5;
  if (h == 0.0) {
    throw std::domain_error(
        fmt::format("{}: cannot take finite difference at {} inside {}", name_, x,
                    domain_.to_string()));
  }
  return (fn_(x + h) - fn_(x - h)) / (2.0 * h);
}

double ScalarFunction::second_derivative(double x) const {
  check_domain(x);
  switch (kind_) {
    case Kind::polynomial:
      return poly_eval(poly_derivative(poly_derivative(coeffs_)), x);
    case Kind::exponential: return std::exp(x);
    case Kind::logarithm: return -1.0 / (x * x);
    case Kind::square_root: return -0.25 / (x * std::sqrt(x));
    case Kind::power: return alpha_ * (alpha_ - 1.0) * std::pow(x, alpha_ - 2.0);
    case Kind::polygamma: return polygamma(order_ + 2, x);
    case Kind::custom: break;
  }
  if (dfn_) {
    double h = std::cbrt(std::numeric_limits<double>::epsilon()) * (1.0 + std::abs(x));
    while (h > 0.0 && (!domain_.contains(x + h) || !domain_.contains(x - h))) h *= 0.5;
    if (h == 0.0) {
      throw std::domain_error(
          fmt::format("{}: cannot take finite difference at {}", name_, x));
    }
    return (dfn_(x + h) - dfn_(x - h)) / (2.0 * h);
  }
  double h = std::pow(std::numeric_limits<double>::epsilon(), 0.25) * (1.0 + std::abs(x));
  while (h > 0.0 && (!domain_.contains(x + h) || !domain_.contains(x - h))) h *= 0.5;
  if (h == 0.0) {
    throw std::domain_error(
        fmt::format("{}: cannot take finite difference at {}", name_, x));
  }
  return (fn_(x + h) - 2.0 * fn_(x) + fn_(x - h)) / (h * h);
}

ScalarFunction ScalarFunction::polynomial(std::vector<double> coeffs) {
  ScalarFunction f;
  f.kind_ = Kind::polynomial;
  f.coeffs_ = std::move(coeffs);
  f.domain_ = Interval::all();
  f.name_ = fmt::format("polynomial(degree {})",
                        f.coeffs_.empty() ? 0 : f.coeffs_.size() - 1);
  return f;
}

ScalarFunction ScalarFunction::identity() {
  ScalarFunction f = polynomial({0.0, 1.0});
  f.name_ = "identity";
  return f;
}

ScalarFunction ScalarFunction::constant(double c) {
  ScalarFunction f = polynomial({c});
  f.name_ = fmt::format("constant({})", c);
  return f;
}

ScalarFunction ScalarFunction::exponential() {
  ScalarFunction f;
  f.kind_ = Kind::exponential;
  f.domain_ = Interval::all();
  f.name_ = "exp";
  return f;
}

ScalarFunction ScalarFunction::logarithm() {
  ScalarFunction f;
  f.kind_ = Kind::logarithm;
  f.domain_ = Interval::positive();
  f.name_ = "log";
  return f;
}

ScalarFunction ScalarFunction::square_root() {
  ScalarFunction f;
  f.kind_ = Kind::square_root;
  f.domain_ = Interval::nonnegative();
  f.name_ = "sqrt";
  return f;
}

ScalarFunction ScalarFunction::power(double alpha) {
  ScalarFunction f;
  f.kind_ = Kind::power;
  f.alpha_ = alpha;
  f.domain_ = Interval::positive();
  f.name_ = fmt::format("power({})", alpha);
  return f;
}

ScalarFunction ScalarFunction::polygamma_function(int order) {
  // Same cap as the polygamma evaluator; reject at construction, not first use.
  if (order < 0 || order > 20) {
    throw std::invalid_argument(
        fmt::format("polygamma_function: order must be in [0, 20], got {}", order));
  }
  ScalarFunction f;
  f.kind_ = Kind::polygamma;
  f.order_ = order;
  f.domain_ = Interval::positive();
  f.name_ = fmt::format("polygamma({})", order);
  return f;
}

ScalarFunction ScalarFunction::custom(std::string name,
                                      std::function<double(double)> fn,
                                      Interval dom,
                                      std::function<double(double)> dfn) {
  if (!fn) throw std::invalid_argument("ScalarFunction::custom: null function");
  ScalarFunction f;
  f.kind_ = Kind::custom;
  f.name_ = std::move(name);
  f.domain_ = dom;
  f.fn_ = std::move(fn);
  f.dfn_ = std::move(dfn);
  return f;
}

}  // namespace dti
