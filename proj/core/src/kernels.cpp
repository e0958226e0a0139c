#include "dti/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "dti/special_functions.hpp"

namespace dti {

namespace {

bool near_tie(double x, double y) {
  return std::abs(x - y) <=
         kDividedDifferenceGuard * (1.0 + std::max(std::abs(x), std::abs(y)));
}

}  // namespace

double divided_difference_1(const ScalarFunction& f, double x, double y) {
  if (near_tie(x, y)) return f.derivative(0.5 * (x + y));
  return (f(x) - f(y)) / (x - y);
}

double divided_difference_2(const ScalarFunction& f, double x, double y, double z) {
  if (near_tie(x, z)) return 0.5 * f.second_derivative(0.5 * (x + z));
  return (divided_difference_1(f, y, z) - divided_difference_1(f, x, y)) / (z - x);
}

std::string mean_kind_name(MeanKind kind) {
  switch (kind) {
    case MeanKind::arithmetic: return "arithmetic";
    case MeanKind::geometric: return "geometric";
    case MeanKind::harmonic: return "harmonic";
    case MeanKind::logarithmic: return "logarithmic";
    case MeanKind::general: return "general";
  }
  throw std::logic_error("mean_kind_name: unreachable");
}

void Kernel::check_arg(double v) const {
  if (!domain_.contains(v)) {
    throw std::domain_error(fmt::format("kernel {}: argument {} outside domain {}",
                                        name_, v, domain_.to_string()));
  }
}

double Kernel::operator()(double x, double y) const {
  if (arity_ != 2) {
    throw std::invalid_argument(
        fmt::format("kernel {}: has arity {}, called with 2 arguments", name_, arity_));
  }
  check_arg(x);
  check_arg(y);
  return f2_(x, y);
}

double Kernel::operator()(double x, double y, double z) const {
  if (arity_ != 3) {
    throw std::invalid_argument(
        fmt::format("kernel {}: has arity {}, called with 3 arguments", name_, arity_));
  }
  check_arg(x);
  check_arg(y);
  check_arg(z);
  return f3_(x, y, z);
}

namespace {

double logarithmic_mean(double x, double y) {
  if (near_tie(x, y)) return 0.5 * (x + y);
  return (x - y) / (std::log(x) - std::log(y));
}

double general_mean(double alpha, double x, double y) {
  if (near_tie(x, y)) return 0.5 * (x + y);
  const double num = std::pow(x, alpha) - std::pow(y, alpha);
  const double den = std::pow(x, alpha - 1.0) - std::pow(y, alpha - 1.0);
  return (alpha - 1.0) / alpha * num / den;
}

}  // namespace

Kernel Kernel::mean(MeanKind kind, double alpha) {
  Kernel k;
  k.arity_ = 2;
  k.mean_kind_ = kind;
  k.name_ = mean_kind_name(kind);
  switch (kind) {
    case MeanKind::arithmetic:
      k.domain_ = Interval::all();
      k.f2_ = [](double x, double y) { return 0.5 * (x + y); };
      break;
    case MeanKind::geometric:
      k.domain_ = Interval::positive();
      k.f2_ = [](double x, double y) { return std::sqrt(x) * std::sqrt(y); };
      break;
    case MeanKind::harmonic:
      k.domain_ = Interval::positive();
      k.f2_ = [](double x, double y) { return 2.0 / (1.0 / x + 1.0 / y); };
      break;
    case MeanKind::logarithmic:
      k.domain_ = Interval::positive();
      k.f2_ = [](double x, double y) { return logarithmic_mean(x, y); };
      break;
    case MeanKind::general:
      if (alpha == 0.0) {
        throw std::invalid_argument("Kernel::mean: general mean undefined at alpha = 0");
      }
      k.alpha_ = alpha;
      k.name_ = fmt::format("general({})", alpha);
      k.domain_ = Interval::positive();
      if (alpha == 1.0) {
        // Continuity limit of the general family.
        k.f2_ = [](double x, double y) { return logarithmic_mean(x, y); };
      } else {
        k.f2_ = [alpha](double x, double y) { return general_mean(alpha, x, y); };
      }
      break;
  }
  return k;
}

Kernel Kernel::constant(double c, int arity) {
  if (arity != 2 && arity != 3) {
    throw std::invalid_argument(
        fmt::format("Kernel::constant: arity must be 2 or 3, got {}", arity));
  }
  Kernel k;
  k.arity_ = arity;
  k.name_ = fmt::format("constant({})", c);
  k.domain_ = Interval::all();
  if (arity == 2) {
    k.f2_ = [c](double, double) { return c; };
  } else {
    k.f3_ = [c](double, double, double) { return c; };
  }
  return k;
}

Kernel Kernel::first_divided_difference(const ScalarFunction& f) {
  Kernel k;
  k.arity_ = 2;
  k.name_ = fmt::format("dd1[{}]", f.name());
  k.domain_ = f.domain();
  k.f2_ = [f](double x, double y) { return divided_difference_1(f, x, y); };
  return k;
}

Kernel Kernel::second_divided_difference(const ScalarFunction& f) {
  Kernel k;
  k.arity_ = 3;
  k.name_ = fmt::format("dd2[{}]", f.name());
  k.domain_ = f.domain();
  k.f3_ = [f](double x, double y, double z) { return divided_difference_2(f, x, y, z); };
  return k;
}

Kernel Kernel::from_function(std::string name,
                             std::function<double(double, double)> f,
                             Interval argument_domain) {
  if (!f) throw std::invalid_argument("Kernel::from_function: null function");
  Kernel k;
  k.arity_ = 2;
  k.name_ = std::move(name);
  k.domain_ = argument_domain;
  k.f2_ = std::move(f);
  return k;
}

double max_abs_on_grid(const Kernel& k, double lo, double hi, int points_per_axis,
                       const std::vector<double>& extra) {
  if (!(lo <= hi)) {
    throw std::invalid_argument(
        fmt::format("max_abs_on_grid: window [{}, {}] is empty", lo, hi));
  }
  if (points_per_axis < 2) {
    throw std::invalid_argument("max_abs_on_grid: need at least 2 points per axis");
  }
  std::vector<double> grid;
  grid.reserve(points_per_axis + extra.size());
  for (int i = 0; i < points_per_axis; ++i) {
    grid.push_back(lo + (hi - lo) * i / (points_per_axis - 1));
  }
  grid.insert(grid.end(), extra.begin(), extra.end());
  double best = 0.0;
  if (k.arity() == 2) {
    for (double x : grid)
      for (double y : grid) best = std::max(best, std::abs(k(x, y)));
  } else {
    for (double x : grid)
      for (double y : grid)
        for (double z : grid) best = std::max(best, std::abs(k(x, y, z)));
  }
  return best;
}

namespace {

// Real roots of the polynomial restricted to [lo, hi], by companion-matrix
// eigenvalues.  Leading zero coefficients are trimmed.
std::vector<double> real_roots_in(std::vector<double> coeffs, double lo, double hi) {
  while (!coeffs.empty() && coeffs.back() == 0.0) coeffs.pop_back();
  std::vector<double> roots;
  if (coeffs.size() <= 1) return roots;  // constant or zero: no isolated roots
  const int n = static_cast<int>(coeffs.size()) - 1;
  if (n == 1) {
    const double r = -coeffs[0] / coeffs[1];
    if (r >= lo && r <= hi) roots.push_back(r);
    return roots;
  }
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i) companion(i, n - 1) = -coeffs[i] / coeffs[n];
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion);
  const double span = 1.0 + std::abs(hi - lo);
  for (int i = 0; i < n; ++i) {
    const std::complex<double> r = solver.eigenvalues()(i);
    if (std::abs(r.imag()) > 1e-8 * (1.0 + std::abs(r.real()))) continue;
    const double x = std::clamp(r.real(), lo, hi);
    if (std::abs(x - r.real()) <= 1e-9 * span) roots.push_back(x);
  }
  return roots;
}

double poly_max_abs_on(const std::vector<double>& coeffs, double a, double b) {
  std::vector<double> probes = real_roots_in(poly_derivative(coeffs), a, b);
  probes.push_back(a);
  probes.push_back(b);
  double best = 0.0;
  for (double x : probes) best = std::max(best, std::abs(poly_eval(coeffs, x)));
  return best;
}

}  // namespace

OmegaBound omega_polynomial_bound(const std::vector<double>& coeffs, double a, double b) {
  if (!(a <= b)) {
    throw std::invalid_argument(
        fmt::format("omega_polynomial_bound: window [{}, {}] is empty", a, b));
  }
  std::vector<double> work = coeffs;
  while (!work.empty() && work.back() == 0.0) work.pop_back();
  if (work.size() <= 1) return {0.0, true};
  const int degree = static_cast<int>(work.size()) - 1;
  const double width = b - a;
  double sum = 0.0;
  double width_pow = 1.0;   // (b-a)^k
  double factorial = 1.0;   // k!
  std::vector<double> deriv = work;
  for (int k = 1; k <= degree; ++k) {
    deriv = poly_derivative(deriv);
    width_pow *= width;
    factorial *= k;
    sum += poly_max_abs_on(deriv, a, b) * width_pow / factorial;
  }
  return {sum, false};
}

namespace {

// (1/e) * (y^y / x^x)^(1/(y-x)) for 0 < x, y; equals x on the diagonal.
double identric_mean(double x, double y) {
  if (near_tie(x, y)) return 0.5 * (x + y);
  return std::exp((y * std::log(y) - x * std::log(x)) / (y - x) - 1.0);
}

// Golden-section maximizer of g on [lo, hi].
double golden_max(const std::function<double(double)>& g, double lo, double hi) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double gc = g(c), gd = g(d);
  for (int it = 0; it < 80 && (b - a) > 1e-14 * (1.0 + std::abs(a)); ++it) {
    if (gc > gd) {
      b = d;
      d = c;
      gd = gc;
      c = b - kInvPhi * (b - a);
      gc = g(c);
    } else {
      a = c;
      c = d;
      gc = gd;
      d = a + kInvPhi * (b - a);
      gd = g(d);
    }
  }
  return std::max(g(0.5 * (a + b)), std::max(gc, gd));
}

}  // namespace

OmegaBound omega_polygamma_bound(int k, double a, double b) {
  if (!(a > 0.0) || !(a <= b)) {
    throw std::invalid_argument(fmt::format(
        "omega_polygamma_bound: need 0 < a <= b, got [{}, {}]", a, b));
  }
  const auto g = [k](double x) { return std::abs(polygamma(k + 1, x)); };
  if (a == b) return {g(a), false};

  // Dense single-point search with golden refinement around the grid best.
  constexpr int kGrid = 10000;
  const double step = (b - a) / (kGrid - 1);
  double best = 0.0;
  double best_x = a;
  for (int i = 0; i < kGrid; ++i) {
    const double x = a + step * i;
    const double v = g(x);
    if (v > best) {
      best = v;
      best_x = x;
    }
  }
  best = std::max(best, golden_max(g, std::max(a, best_x - step),
                                   std::min(b, best_x + step)));

  // Pair search through the identric mean, then refine its argument.
  constexpr int kPairGrid = 100;
  const double pstep = (b - a) / (kPairGrid - 1);
  double pair_best = 0.0;
  double pair_arg = a;
  for (int i = 0; i < kPairGrid; ++i) {
    for (int j = 0; j < kPairGrid; ++j) {
      const double m = identric_mean(a + pstep * i, a + pstep * j);
      const double v = g(m);
      if (v > pair_best) {
        pair_best = v;
        pair_arg = m;
      }
    }
  }
  pair_best = std::max(pair_best, golden_max(g, std::max(a, pair_arg - pstep),
                                             std::min(b, pair_arg + pstep)));
  return {std::max(best, pair_best), false};
}

}  // namespace dti
