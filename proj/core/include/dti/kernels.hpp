#pragma once

// Two- and three-argument scalar kernels evaluated on eigenvalue grids:
// divided differences of scalar functions, the classical mean families, and
// the smoothness constants ("Omega" bounds) that dominate divided
// differences over a working interval.
//
// Divided differences:
//   f^[1](x, y) = (f(x) - f(y)) / (x - y),       f'( (x+y)/2 ) on near ties
//   f^[2](x, y, z) = (f^[1](y, z) - f^[1](x, y)) / (z - x),
//                    f''( (x+z)/2 ) / 2 on near ties of x and z.
// Near ties are |x - y| <= 1e-7 * (1 + max(|x|, |y|)).

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dti/scalar_function.hpp"

namespace dti {

// Relative spacing below which divided differences switch to their
// derivative limit branch.
inline constexpr double kDividedDifferenceGuard = 1e-7;

double divided_difference_1(const ScalarFunction& f, double x, double y);
double divided_difference_2(const ScalarFunction& f, double x, double y, double z);

enum class MeanKind { arithmetic, geometric, harmonic, logarithmic, general };

std::string mean_kind_name(MeanKind kind);

class Kernel {
 public:
  int arity() const { return arity_; }
  const std::string& name() const { return name_; }
  // Per-argument domain; evaluation outside throws, never returns NaN.
  const Interval& argument_domain() const { return domain_; }
  // Set for mean kernels of kind general; NaN otherwise.
  double alpha() const { return alpha_; }
  std::optional<MeanKind> mean_kind() const { return mean_kind_; }

  double operator()(double x, double y) const;
  double operator()(double x, double y, double z) const;

  // Mean families.  general requires alpha != 0; alpha = 1 evaluates as the
  // logarithmic mean (its continuity limit).  All but arithmetic require
  // positive arguments.
  static Kernel mean(MeanKind kind, double alpha = 0.0);
  static Kernel constant(double c, int arity = 2);
  // psi(x, y) = f^[1](x, y); domain inherited from f.
  static Kernel first_divided_difference(const ScalarFunction& f);
  // phi(x, y, z) = f^[2](x, y, z); arity 3.
  static Kernel second_divided_difference(const ScalarFunction& f);
  static Kernel from_function(std::string name, std::function<double(double, double)> f,
                              Interval argument_domain = Interval::all());

 private:
  Kernel() = default;
  void check_arg(double v) const;

  int arity_ = 2;
  std::string name_;
  Interval domain_;
  double alpha_ = std::numeric_limits<double>::quiet_NaN();
  std::optional<MeanKind> mean_kind_;
  std::function<double(double, double)> f2_;
  std::function<double(double, double, double)> f3_;
};

// Max of |kernel| over an endpoint-inclusive uniform grid on [lo, hi]
// per axis (arity 2 or 3), with optional extra abscissae merged in.
double max_abs_on_grid(const Kernel& k, double lo, double hi, int points_per_axis,
                       const std::vector<double>& extra = {});

struct OmegaBound {
  double value = 0.0;
  // Set when the input could not support a meaningful bound (constant or
  // empty polynomial): the value is 0 and callers may want to warn.
  bool degenerate = false;
};

// sum_{k=1..m} max_[a,b] |f^(k)| * (b-a)^k / k! for a polynomial f given by
// coeffs (coeffs[k] multiplies x^k).  Each inner max is exact: critical
// points are roots of the next derivative, found by companion-matrix
// root-finding, plus the endpoints.
OmegaBound omega_polynomial_bound(const std::vector<double>& coeffs, double a, double b);

// Dominating constant for the first divided difference of the k-th digamma
// derivative over [a, b], 0 < a <= b: the larger of |w^(k+1)| at the
// identric mean of the worst pair and at the worst single point, located by
// dense grid search (1e4 points) plus local refinement.
OmegaBound omega_polygamma_bound(int k, double a, double b);

}  // namespace dti
