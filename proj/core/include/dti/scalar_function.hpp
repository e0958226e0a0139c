#pragma once

// Scalar functions f: R -> R with an explicit domain, used for spectral
// calculus and divided-difference kernels.  Evaluation outside the domain
// throws; it never returns NaN.  Derivatives are analytic for the built-in
// kinds and fall back to central differences for custom functions.

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace dti {

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool lo_open = true;
  bool hi_open = true;

  static Interval all() { return {}; }
  static Interval positive() { return {0.0, std::numeric_limits<double>::infinity(), true, true}; }
  static Interval nonnegative() { return {0.0, std::numeric_limits<double>::infinity(), false, true}; }

  bool contains(double x) const {
    if (lo_open ? x <= lo : x < lo) return false;
    if (hi_open ? x >= hi : x > hi) return false;
    return true;
  }
  std::string to_string() const;
};

// Horner evaluation; coeffs[k] multiplies x^k.  Empty list evaluates to 0.
double poly_eval(const std::vector<double>& coeffs, double x);
std::vector<double> poly_derivative(const std::vector<double>& coeffs);

class ScalarFunction {
 public:
  enum class Kind {
    polynomial,
    exponential,
    logarithm,
    square_root,
    power,
    polygamma,
    custom,
  };

  double operator()(double x) const;
  // First and second derivatives; analytic unless kind is custom without
  // a supplied derivative, in which case central differences are used with
  // step h = eps^(1/3) * (1 + |x|) shrunk to stay inside the domain.
  double derivative(double x) const;
  double second_derivative(double x) const;

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  const Interval& domain() const { return domain_; }
  const std::vector<double>& coefficients() const { return coeffs_; }
  double exponent() const { return alpha_; }
  int polygamma_order() const { return order_; }
  bool has_analytic_derivatives() const;

  static ScalarFunction polynomial(std::vector<double> coeffs);
  static ScalarFunction identity();
  static ScalarFunction constant(double c);
  static ScalarFunction exponential();
  static ScalarFunction logarithm();      // domain (0, inf)
  static ScalarFunction square_root();    // domain [0, inf)
  static ScalarFunction power(double alpha);  // x^alpha on (0, inf)
  static ScalarFunction polygamma_function(int order);  // domain (0, inf)
  static ScalarFunction custom(std::string name, std::function<double(double)> f,
                               Interval dom,
                               std::function<double(double)> df = nullptr);

 private:
  ScalarFunction() = default;
  void check_domain(double x) const;
  double eval_unchecked(double x) const;

  Kind kind_ = Kind::custom;
  std::string name_;
  Interval domain_;
  std::vector<double> coeffs_;
  double alpha_ = 0.0;
  int order_ = 0;
  std::function<double(double)> fn_;
  std::function<double(double)> dfn_;
};

}  // namespace dti
