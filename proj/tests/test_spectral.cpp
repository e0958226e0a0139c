#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

#include "dti/spectral.hpp"

using namespace dti;

namespace {

EinsteinTensor random_hermitian(const TensorShape& shape, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(shape.dim(), shape.dim());
  for (int r = 0; r < shape.dim(); ++r)
    for (int c = 0; c < shape.dim(); ++c) m(r, c) = Complex(u(gen), u(gen));
  Matrix h = 0.5 * (m + m.adjoint());
  return fold(h, shape);
}

// Characteristic polynomial coefficients by the Faddeev-LeVerrier
// recurrence: p(x) = x^n + c[0] x^(n-1) + ... + c[n-1].
std::vector<double> char_poly(const Matrix& a) {
  const int n = static_cast<int>(a.rows());
  std::vector<double> c(n);
  Matrix m = a;
  c[0] = -m.trace().real();
  for (int k = 1; k < n; ++k) {
    m = a * (m + c[k - 1] * Matrix::Identity(n, n));
    c[k] = -m.trace().real() / (k + 1);
  }
  return c;
}

double char_poly_eval(const std::vector<double>& c, double x) {
  double v = 1.0;
  for (double ck : c) v = v * x + ck;
  return v;
}

// All real roots of the characteristic polynomial of a Hermitian matrix by
// sign-change scanning plus bisection over the Gershgorin interval.  An
// eigensolver-independent oracle.
std::vector<double> eigenvalue_oracle(const Matrix& a) {
  const std::vector<double> c = char_poly(a);
  const int n = static_cast<int>(a.rows());
  double lo = 0.0, hi = 0.0;
  for (int i = 0; i < n; ++i) {
    double radius = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j != i) radius += std::abs(a(i, j));
    }
    lo = std::min(lo, a(i, i).real() - radius);
    hi = std::max(hi, a(i, i).real() + radius);
  }
  lo -= 1e-6;
  hi += 1e-6;
  const int scan = 200000;
  std::vector<double> roots;
  double prev_x = lo, prev_v = char_poly_eval(c, lo);
  for (int s = 1; s <= scan; ++s) {
    const double x = lo + (hi - lo) * s / scan;
    const double v = char_poly_eval(c, x);
    if ((prev_v < 0.0) != (v < 0.0)) {
      double a0 = prev_x, b0 = x;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (a0 + b0);
        if ((char_poly_eval(c, a0) < 0.0) != (char_poly_eval(c, mid) < 0.0)) {
          b0 = mid;
        } else {
          a0 = mid;
        }
      }
      roots.push_back(0.5 * (a0 + b0));
    }
    prev_x = x;
    prev_v = v;
  }
  std::sort(roots.rbegin(), roots.rend());
  return roots;
}

}  // namespace

TEST_CASE("eigenvalues agree with the characteristic polynomial oracle") {
  const TensorShape shape({2, 2});
  for (unsigned seed : {101u, 102u, 103u}) {
    const EinsteinTensor a = random_hermitian(shape, seed);
    const SpectralDecomposition dec = eigh(a);
    const std::vector<double> oracle = eigenvalue_oracle(unfold(a));
    REQUIRE(oracle.size() == 4);
    for (int i = 0; i < 4; ++i) {
      CHECK(dec.eigenvalues(i) == doctest::Approx(oracle[i]).epsilon(1e-8));
    }
  }
}

TEST_CASE("diagonal tensor decomposes exactly") {
  EinsteinTensor a = EinsteinTensor::zero(TensorShape({2}));
  a.set({0}, {0}, 3.0);
  a.set({1}, {1}, 1.0);
  const SpectralDecomposition dec = eigh(a);
  CHECK(dec.eigenvalues(0) == 3.0);
  CHECK(dec.eigenvalues(1) == 1.0);
  CHECK(frobenius_norm(subtract(dec.reconstruct(), a)) <= 1e-15);
}

TEST_CASE("eigenvalues come out descending") {
  const EinsteinTensor a = random_hermitian(TensorShape({2, 3}), 7);
  const SpectralDecomposition dec = eigh(a);
  for (int i = 0; i + 1 < dec.dim(); ++i) {
    CHECK(dec.eigenvalues(i) >= dec.eigenvalues(i + 1));
  }
}

TEST_CASE("projectors are an orthogonal resolution of the identity") {
  const TensorShape shape({2, 2});
  const EinsteinTensor a = random_hermitian(shape, 13);
  const SpectralDecomposition dec = eigh(a);
  EinsteinTensor sum = EinsteinTensor::zero(shape);
  EinsteinTensor weighted = EinsteinTensor::zero(shape);
  for (int i = 0; i < dec.dim(); ++i) {
    const EinsteinTensor p = dec.projector(i);
    CHECK(frobenius_norm(subtract(einstein_product(p, p), p)) <= 1e-13);
    CHECK(frobenius_norm(subtract(p, adjoint(p))) <= 1e-13);
    for (int j = 0; j < i; ++j) {
      const EinsteinTensor q = dec.projector(j);
      CHECK(frobenius_norm(einstein_product(p, q)) <= 1e-13);
    }
    sum = add(sum, p);
    weighted = add(weighted, scale(dec.eigenvalues(i), p));
  }
  CHECK(frobenius_norm(subtract(sum, EinsteinTensor::identity(shape))) <= 1e-13);
  CHECK(frobenius_norm(subtract(weighted, a)) <= 1e-13);
}

TEST_CASE("spectral calculus reproduces algebraic identities") {
  const TensorShape shape({2, 2});
  const EinsteinTensor a = random_hermitian(shape, 17);
  const SpectralDecomposition dec = eigh(a);

  const EinsteinTensor id_a = apply_function(ScalarFunction::identity(), dec);
  CHECK(frobenius_norm(subtract(id_a, a)) <= 1e-13);

  const EinsteinTensor c_a = apply_function(ScalarFunction::constant(2.5), dec);
  CHECK(frobenius_norm(subtract(c_a, scale(2.5, EinsteinTensor::identity(shape)))) <=
        1e-13);

  const EinsteinTensor sq = apply_function(ScalarFunction::polynomial({0, 0, 1}), dec);
  CHECK(frobenius_norm(subtract(sq, einstein_product(a, a))) <= 1e-12);
}

TEST_CASE("exp and log invert each other on positive spectra") {
  const TensorShape shape({3});
  const EinsteinTensor g = random_hermitian(shape, 19);
  // g^2 + I is positive definite.
  const EinsteinTensor pd =
      add(einstein_product(g, g), EinsteinTensor::identity(shape));
  REQUIRE(is_positive_definite(pd));
  const EinsteinTensor log_pd = apply_function(ScalarFunction::logarithm(), pd);
  const EinsteinTensor back = apply_function(ScalarFunction::exponential(), log_pd);
  CHECK(frobenius_norm(subtract(back, pd)) <= 1e-11 * (1.0 + frobenius_norm(pd)));

  const EinsteinTensor root = apply_function(ScalarFunction::square_root(), pd);
  CHECK(frobenius_norm(subtract(einstein_product(root, root), pd)) <=
        1e-11 * (1.0 + frobenius_norm(pd)));
}

TEST_CASE("domain violations in the calculus name the eigenvalue") {
  EinsteinTensor a = EinsteinTensor::zero(TensorShape({2}));
  a.set({0}, {0}, 2.0);
  a.set({1}, {1}, -1.0);
  CHECK_THROWS_WITH_AS(apply_function(ScalarFunction::logarithm(), a),
                       doctest::Contains("-1"), std::domain_error);
  CHECK(is_positive_definite(a) == false);
  a.set({1}, {1}, 0.5);
  CHECK(is_positive_definite(a));
}

TEST_CASE("non hermitian input is rejected with the measured asymmetry") {
  EinsteinTensor x = EinsteinTensor::zero(TensorShape({2}));
  x.set({0}, {1}, Complex(1.0, 0.0));
  CHECK_THROWS_WITH_AS(eigh(x), doctest::Contains("asymmetry"),
                       std::invalid_argument);
  // Loose tolerance admits it.
  CHECK_NOTHROW(eigh(x, 10.0));
}

TEST_CASE("degenerate spectra still resolve the identity") {
  const TensorShape shape({2, 2});
  const EinsteinTensor e = EinsteinTensor::identity(shape);
  const SpectralDecomposition dec = eigh(e);
  for (int i = 0; i < dec.dim(); ++i) {
    CHECK(dec.eigenvalues(i) == doctest::Approx(1.0).epsilon(1e-14));
  }
  CHECK(frobenius_norm(subtract(dec.reconstruct(), e)) <= 1e-13);
}
