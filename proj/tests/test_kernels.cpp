#include <cmath>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "dti/kernels.hpp"

using namespace dti;

namespace {

const double kE = 2.718281828459045;

std::vector<double> grid(double lo, double hi, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * i / (n - 1);
  return g;
}

}  // namespace

TEST_CASE("first divided difference on hand examples") {
  const ScalarFunction sq = ScalarFunction::polynomial({0, 0, 1});
  CHECK(divided_difference_1(sq, 3.0, 1.0) == doctest::Approx(4.0).epsilon(1e-15));
  // On the diagonal the limit is f'.
  CHECK(divided_difference_1(sq, 2.5, 2.5) == doctest::Approx(5.0).epsilon(1e-13));
  const ScalarFunction ex = ScalarFunction::exponential();
  CHECK(divided_difference_1(ex, 1.0, 0.0) ==
        doctest::Approx(kE - 1.0).epsilon(1e-14));
}

TEST_CASE("first divided difference is exactly symmetric") {
  const ScalarFunction cubic = ScalarFunction::polynomial({1, -2, 0, 1});
  for (double x : grid(-2.0, 2.0, 9)) {
    for (double y : grid(-2.0, 2.0, 9)) {
      CHECK(divided_difference_1(cubic, x, y) == divided_difference_1(cubic, y, x));
    }
  }
}

TEST_CASE("near tie guard joins continuously to the difference quotient") {
  const ScalarFunction ex = ScalarFunction::exponential();
  const double x = 1.3;
  // Either side of the guard threshold, both branches approximate f'(x).
  for (double h : {1e-9, 5e-8, 2e-7, 1e-6}) {
    CHECK(divided_difference_1(ex, x, x + h) ==
          doctest::Approx(std::exp(x)).epsilon(1e-5));
  }
}

TEST_CASE("second divided difference on hand examples") {
  const ScalarFunction sq = ScalarFunction::polynomial({0, 0, 1});
  // f = x^2 has constant second divided difference 1.
  CHECK(divided_difference_2(sq, 0.0, 1.0, 3.0) ==
        doctest::Approx(1.0).epsilon(1e-13));
  CHECK(divided_difference_2(sq, 2.0, 2.0, 2.0) ==
        doctest::Approx(1.0).epsilon(1e-10));
  const ScalarFunction cubic = ScalarFunction::polynomial({0, 0, 0, 1});
  CHECK(divided_difference_2(cubic, 0.0, 1.0, 2.0) ==
        doctest::Approx(3.0).epsilon(1e-13));
  const ScalarFunction lin = ScalarFunction::polynomial({5, 2});
  CHECK(divided_difference_2(lin, 0.3, 1.7, 2.9) == doctest::Approx(0.0));
}

TEST_CASE("mean kernels on hand values") {
  CHECK(Kernel::mean(MeanKind::arithmetic)(1.0, 3.0) == 2.0);
  CHECK(Kernel::mean(MeanKind::geometric)(4.0, 9.0) ==
        doctest::Approx(6.0).epsilon(1e-15));
  CHECK(Kernel::mean(MeanKind::harmonic)(2.0, 6.0) ==
        doctest::Approx(3.0).epsilon(1e-15));
  CHECK(Kernel::mean(MeanKind::logarithmic)(1.0, kE) ==
        doctest::Approx(kE - 1.0).epsilon(1e-14));
  // Diagonal limits.
  CHECK(Kernel::mean(MeanKind::logarithmic)(2.0, 2.0) ==
        doctest::Approx(2.0).epsilon(1e-12));
  CHECK(Kernel::mean(MeanKind::geometric)(3.0, 3.0) ==
        doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("general mean interpolates the classical means") {
  const Kernel g2 = Kernel::mean(MeanKind::general, 2.0);
  const Kernel g_half = Kernel::mean(MeanKind::general, 0.5);
  const Kernel arith = Kernel::mean(MeanKind::arithmetic);
  const Kernel geom = Kernel::mean(MeanKind::geometric);
  for (double x : grid(0.2, 5.0, 13)) {
    for (double y : grid(0.2, 5.0, 13)) {
      CHECK(std::abs(g2(x, y) - arith(x, y)) <= 1e-12 * (1.0 + arith(x, y)));
      CHECK(std::abs(g_half(x, y) - geom(x, y)) <= 1e-12 * (1.0 + geom(x, y)));
    }
  }
  // alpha = 1 is the logarithmic limit; nearby alphas approach it.
  const Kernel log_mean = Kernel::mean(MeanKind::logarithmic);
  const Kernel g1 = Kernel::mean(MeanKind::general, 1.0);
  const Kernel g1p = Kernel::mean(MeanKind::general, 1.0 + 1e-6);
  const Kernel g1m = Kernel::mean(MeanKind::general, 1.0 - 1e-6);
  for (double x : grid(0.5, 4.0, 8)) {
    for (double y : grid(0.6, 4.1, 8)) {
      CHECK(g1(x, y) == log_mean(x, y));
      CHECK(std::abs(g1p(x, y) - log_mean(x, y)) <= 1e-4 * (1.0 + log_mean(x, y)));
      CHECK(std::abs(g1m(x, y) - log_mean(x, y)) <= 1e-4 * (1.0 + log_mean(x, y)));
    }
  }
}

TEST_CASE("classical mean ordering holds pointwise") {
  const Kernel h = Kernel::mean(MeanKind::harmonic);
  const Kernel g = Kernel::mean(MeanKind::geometric);
  const Kernel l = Kernel::mean(MeanKind::logarithmic);
  const Kernel a = Kernel::mean(MeanKind::arithmetic);
  for (double x : grid(0.1, 6.0, 17)) {
    for (double y : grid(0.1, 6.0, 17)) {
      const double slack = 1e-12 * (1.0 + a(x, y));
      CHECK(h(x, y) <= g(x, y) + slack);
      CHECK(g(x, y) <= l(x, y) + slack);
      CHECK(l(x, y) <= a(x, y) + slack);
    }
  }
}

TEST_CASE("kernel construction and domain errors") {
  CHECK_THROWS_AS(Kernel::mean(MeanKind::general, 0.0), std::invalid_argument);
  const Kernel geom = Kernel::mean(MeanKind::geometric);
  CHECK_THROWS_WITH_AS(geom(-1.0, 4.0), doctest::Contains("outside domain"),
                       std::domain_error);
  CHECK_NOTHROW(Kernel::mean(MeanKind::arithmetic)(-1.0, 4.0));
  // Arity mismatches.
  CHECK_THROWS_AS(geom(1.0, 2.0, 3.0), std::invalid_argument);
  const Kernel c3 = Kernel::constant(2.0, 3);
  CHECK(c3(0.0, 1.0, 2.0) == 2.0);
  CHECK_THROWS_AS(c3(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(Kernel::constant(1.0, 4), std::invalid_argument);
  CHECK(mean_kind_name(MeanKind::logarithmic) == "logarithmic");
  // Divided-difference kernels inherit the function's domain.
  const Kernel dd_log = Kernel::first_divided_difference(ScalarFunction::logarithm());
  CHECK_THROWS_AS(dd_log(-1.0, 2.0), std::domain_error);
  CHECK(dd_log(1.0, kE) == doctest::Approx(1.0 / (kE - 1.0)).epsilon(1e-12));
}

TEST_CASE("grid maximum of a kernel") {
  const Kernel a = Kernel::mean(MeanKind::arithmetic);
  CHECK(max_abs_on_grid(a, 0.0, 2.0, 11) == doctest::Approx(2.0).epsilon(1e-15));
  // Extra abscissae join the grid on every axis.
  CHECK(max_abs_on_grid(a, 0.0, 2.0, 11, {10.0}) ==
        doctest::Approx(10.0).epsilon(1e-15));
  const Kernel c3 = Kernel::constant(1.5, 3);
  CHECK(max_abs_on_grid(c3, -1.0, 1.0, 5) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK_THROWS_AS(max_abs_on_grid(a, 2.0, 0.0, 11), std::invalid_argument);
  CHECK_THROWS_AS(max_abs_on_grid(a, 0.0, 2.0, 1), std::invalid_argument);
}

TEST_CASE("polynomial smoothness constant on frozen examples") {
  // f = x on [0, 1]: only the first derivative contributes.
  CHECK(omega_polynomial_bound({0, 1}, 0.0, 1.0).value ==
        doctest::Approx(1.0).epsilon(1e-15));
  // f = x^2 on [0, 1]: 2 * 1 / 1! + 2 * 1 / 2! = 3.
  CHECK(omega_polynomial_bound({0, 0, 1}, 0.0, 1.0).value ==
        doctest::Approx(3.0).epsilon(1e-14));
  // f = x^3 - x on [-1, 1]: 2 * 2 + 6 * 4 / 2 + 6 * 8 / 6 = 24, with the
  // inner max of |3x^2 - 1| attained at the endpoints, not the critical point.
  CHECK(omega_polynomial_bound({0, -1, 0, 1}, -1.0, 1.0).value ==
        doctest::Approx(24.0).epsilon(1e-13));
  CHECK_FALSE(omega_polynomial_bound({0, 1}, 0.0, 1.0).degenerate);
}

TEST_CASE("polynomial smoothness constant dominates the divided difference") {
  const std::vector<double> coeffs = {1.0, -0.5, 2.0, 0.25};
  const double a = -1.5, b = 2.0;
  const double omega = omega_polynomial_bound(coeffs, a, b).value;
  const Kernel dd =
      Kernel::first_divided_difference(ScalarFunction::polynomial(coeffs));
  CHECK(max_abs_on_grid(dd, a, b, 60) <= omega * (1.0 + 1e-12));
}

TEST_CASE("degenerate polynomials yield a flagged zero constant") {
  CHECK(omega_polynomial_bound({}, 0.0, 1.0).degenerate);
  CHECK(omega_polynomial_bound({3.0}, 0.0, 1.0).degenerate);
  CHECK(omega_polynomial_bound({3.0}, 0.0, 1.0).value == 0.0);
  CHECK_THROWS_AS(omega_polynomial_bound({0, 1}, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("digamma derivative smoothness constant dominates on a pair grid") {
  for (int k : {0, 1, 2}) {
    const double a = 0.5, b = 3.0;
    const double omega = omega_polygamma_bound(k, a, b).value;
    CHECK(omega > 0.0);
    const Kernel dd =
        Kernel::first_divided_difference(ScalarFunction::polygamma_function(k));
    CHECK(max_abs_on_grid(dd, a, b, 40) <= omega * (1.0 + 1e-10));
  }
  CHECK_THROWS_AS(omega_polygamma_bound(0, -1.0, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(omega_polygamma_bound(0, 2.0, 1.0), std::invalid_argument);
}
