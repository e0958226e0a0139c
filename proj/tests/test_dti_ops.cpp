#include <cmath>
#include <random>
#include <stdexcept>

#include <doctest.h>

#include "dti/dti_ops.hpp"

using namespace dti;

namespace {

EinsteinTensor filled_tensor(const TensorShape& shape, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(shape.dim(), shape.dim());
  for (int r = 0; r < shape.dim(); ++r)
    for (int c = 0; c < shape.dim(); ++c) m(r, c) = Complex(u(gen), u(gen));
  return fold(m, shape);
}

EinsteinTensor random_hermitian(const TensorShape& shape, unsigned seed) {
  const EinsteinTensor g = filled_tensor(shape, seed);
  return scale(0.5, add(g, adjoint(g)));
}

EinsteinTensor random_pd(const TensorShape& shape, unsigned seed) {
  const EinsteinTensor g = filled_tensor(shape, seed);
  return add(einstein_product(adjoint(g), g),
             scale(0.2, EinsteinTensor::identity(shape)));
}

double rel_diff(const EinsteinTensor& a, const EinsteinTensor& b) {
  return frobenius_norm(subtract(a, b)) / (1.0 + frobenius_norm(b));
}

}  // namespace

TEST_CASE("coefficient matrix reconstructs the tensor") {
  const TensorShape shape({2, 2});
  const SpectralDecomposition da = eigh(random_hermitian(shape, 1));
  const SpectralDecomposition db = eigh(random_hermitian(shape, 2));
  const EinsteinTensor x = filled_tensor(shape, 3);
  const Matrix c = coefficient_matrix(x, da, db);
  CHECK(rel_diff(reconstruct_from_coefficients(c, da, db), x) <= 1e-13);
}

TEST_CASE("constant kernel one acts as the identity map") {
  const TensorShape shape({2, 3});
  const SpectralDecomposition da = eigh(random_hermitian(shape, 4));
  const SpectralDecomposition db = eigh(random_hermitian(shape, 5));
  const EinsteinTensor x = filled_tensor(shape, 6);
  CHECK(rel_diff(dti_apply(da, db, Kernel::constant(1.0), x), x) <= 1e-13);
}

TEST_CASE("left eigenvalue kernel applied to the identity rebuilds the tensor") {
  const TensorShape shape({3});
  const EinsteinTensor a = random_hermitian(shape, 7);
  const SpectralDecomposition da = eigh(a);
  const Kernel left = Kernel::from_function(
      "left_eigenvalue", [](double x, double) { return x; });
  const EinsteinTensor out =
      dti_apply(da, da, left, EinsteinTensor::identity(shape));
  CHECK(rel_diff(out, a) <= 1e-13);
}

TEST_CASE("fast route matches the projector sum for assorted kernels") {
  const TensorShape shape({2, 3});
  const SpectralDecomposition da = eigh(random_pd(shape, 8));
  const SpectralDecomposition db = eigh(random_pd(shape, 9));
  const EinsteinTensor x = filled_tensor(shape, 10);
  const Kernel kernels[] = {
      Kernel::mean(MeanKind::arithmetic),
      Kernel::mean(MeanKind::geometric),
      Kernel::mean(MeanKind::general, 3.0),
      Kernel::first_divided_difference(ScalarFunction::exponential()),
  };
  for (const Kernel& psi : kernels) {
    const EinsteinTensor fast = dti_apply(da, db, psi, x);
    const EinsteinTensor slow = dti_apply_naive(da, db, psi, x);
    CHECK(rel_diff(fast, slow) <= 1e-12);
  }
}

TEST_CASE("double integral is linear in its argument") {
  const TensorShape shape({2, 2});
  const SpectralDecomposition da = eigh(random_hermitian(shape, 11));
  const SpectralDecomposition db = eigh(random_hermitian(shape, 12));
  const EinsteinTensor x = filled_tensor(shape, 13);
  const EinsteinTensor y = filled_tensor(shape, 14);
  const Kernel psi = Kernel::mean(MeanKind::arithmetic);
  const Complex a(0.7, -1.3), b(-2.1, 0.4);
  const EinsteinTensor lhs = dti_apply(da, db, psi, add(scale(a, x), scale(b, y)));
  const EinsteinTensor rhs =
      add(scale(a, dti_apply(da, db, psi, x)), scale(b, dti_apply(da, db, psi, y)));
  CHECK(rel_diff(lhs, rhs) <= 1e-12);
}

TEST_CASE("integral weights coefficients entrywise") {
  const TensorShape shape({4});
  const SpectralDecomposition da = eigh(random_hermitian(shape, 15));
  const SpectralDecomposition db = eigh(random_hermitian(shape, 16));
  const EinsteinTensor x = filled_tensor(shape, 17);
  const Kernel psi = Kernel::first_divided_difference(
      ScalarFunction::polynomial({0, 1, 0.5}));
  const Matrix w = kernel_matrix(psi, da.eigenvalues, db.eigenvalues);
  const Matrix c = coefficient_matrix(x, da, db);
  const Matrix expected = w.cwiseProduct(c);
  const Matrix got = coefficient_matrix(dti_apply(da, db, psi, x), da, db);
  CHECK((got - expected).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("kernel sum bounds the integral in every subadditive gauge") {
  const TensorShape shape({2, 2});
  const SpectralDecomposition da = eigh(random_pd(shape, 18));
  const SpectralDecomposition db = eigh(random_pd(shape, 19));
  const EinsteinTensor x = filled_tensor(shape, 20);
  const Kernel psi = Kernel::mean(MeanKind::logarithmic);
  double abs_sum = 0.0, max_abs = 0.0;
  for (int i = 0; i < shape.dim(); ++i) {
    for (int j = 0; j < shape.dim(); ++j) {
      const double v = std::abs(psi(da.eigenvalues(i), db.eigenvalues(j)));
      abs_sum += v;
      max_abs = std::max(max_abs, v);
    }
  }
  const EinsteinTensor t_x = dti_apply(da, db, psi, x);
  const NormSpec gauges[] = {NormSpec::schatten(1.0), NormSpec::schatten(2.0),
                             NormSpec::kyfan(2), NormSpec::ktrace(1),
                             NormSpec::operator_norm()};
  const int d2 = shape.dim() * shape.dim();
  for (const NormSpec& rho : gauges) {
    const double nx = norm(x, rho);
    CHECK(norm(t_x, rho) <= abs_sum * nx * (1.0 + 1e-12));
    CHECK(abs_sum * nx <= d2 * max_abs * nx * (1.0 + 1e-12));
  }
}

TEST_CASE("triple integral with constant kernel is the plain product") {
  const TensorShape shape({3});
  const SpectralDecomposition da = eigh(random_hermitian(shape, 21));
  const SpectralDecomposition db = eigh(random_hermitian(shape, 22));
  const SpectralDecomposition dc = eigh(random_hermitian(shape, 23));
  const EinsteinTensor x = filled_tensor(shape, 24);
  const EinsteinTensor y = filled_tensor(shape, 25);
  const EinsteinTensor out =
      tti_apply(da, db, dc, Kernel::constant(1.0, 3), x, y);
  CHECK(rel_diff(out, einstein_product(x, y)) <= 1e-12);
}

TEST_CASE("triple integral fast route matches the projector sum") {
  const TensorShape shape({2, 2});
  const SpectralDecomposition da = eigh(random_hermitian(shape, 26));
  const SpectralDecomposition db = eigh(random_hermitian(shape, 27));
  const SpectralDecomposition dc = eigh(random_hermitian(shape, 28));
  const EinsteinTensor x = filled_tensor(shape, 29);
  const EinsteinTensor y = filled_tensor(shape, 30);
  for (const ScalarFunction& f :
       {ScalarFunction::polynomial({0, 0, 0, 1}), ScalarFunction::exponential()}) {
    const Kernel phi = Kernel::second_divided_difference(f);
    const EinsteinTensor fast = tti_apply(da, db, dc, phi, x, y);
    const EinsteinTensor slow = tti_apply_naive(da, db, dc, phi, x, y);
    CHECK(rel_diff(fast, slow) <= 1e-10);
  }
}

TEST_CASE("triple integral norm bound with the cubed dimension factor") {
  const TensorShape shape({2, 2});
  const SpectralDecomposition da = eigh(random_hermitian(shape, 31));
  const SpectralDecomposition db = eigh(random_hermitian(shape, 32));
  const SpectralDecomposition dc = eigh(random_hermitian(shape, 33));
  const EinsteinTensor x = filled_tensor(shape, 34);
  const EinsteinTensor y = filled_tensor(shape, 35);
  const Kernel phi =
      Kernel::second_divided_difference(ScalarFunction::exponential());
  const double lo = std::min({da.eigenvalues.minCoeff(), db.eigenvalues.minCoeff(),
                              dc.eigenvalues.minCoeff()});
  const double hi = std::max({da.eigenvalues.maxCoeff(), db.eigenvalues.maxCoeff(),
                              dc.eigenvalues.maxCoeff()});
  const double omega = max_abs_on_grid(phi, lo, hi, 21);
  const EinsteinTensor out = tti_apply(da, db, dc, phi, x, y);
  const NormSpec rho = NormSpec::schatten(2.0);
  const double d3 = std::pow(shape.dim(), 3);
  CHECK(norm(out, rho) <= d3 * omega * norm(x, rho) * norm(y, rho) * (1.0 + 1e-12));
}

TEST_CASE("result is invariant under the eigenbasis chosen for a degenerate spectrum") {
  const TensorShape shape({3});
  // A = Q diag(2, 2, 1) Q^H has a two-dimensional eigenspace.
  const SpectralDecomposition qdec = eigh(random_hermitian(shape, 36));
  Eigen::VectorXd vals(3);
  vals << 2.0, 2.0, 1.0;
  const Matrix a_mat =
      qdec.basis * vals.asDiagonal() * qdec.basis.adjoint();
  const EinsteinTensor a = fold(0.5 * (a_mat + a_mat.adjoint()), shape);
  SpectralDecomposition dec1 = eigh(a);
  // Rotate the degenerate pair of basis columns: another valid decomposition.
  SpectralDecomposition dec2 = dec1;
  int i0 = -1, i1 = -1;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(dec1.eigenvalues(i) - 2.0) < 1e-8) (i0 < 0 ? i0 : i1) = i;
  }
  REQUIRE(i0 >= 0);
  REQUIRE(i1 >= 0);
  const double c = std::cos(0.7), s = std::sin(0.7);
  const Eigen::VectorXcd col0 = dec2.basis.col(i0);
  const Eigen::VectorXcd col1 = dec2.basis.col(i1);
  dec2.basis.col(i0) = c * col0 + s * col1;
  dec2.basis.col(i1) = -s * col0 + c * col1;

  const SpectralDecomposition db = eigh(random_hermitian(shape, 37));
  const EinsteinTensor x = filled_tensor(shape, 38);
  const Kernel psi =
      Kernel::first_divided_difference(ScalarFunction::exponential());
  const EinsteinTensor r1 = dti_apply(dec1, db, psi, x);
  const EinsteinTensor r2 = dti_apply(dec2, db, psi, x);
  CHECK(rel_diff(r1, r2) <= 1e-8);
}

TEST_CASE("perturbation identity holds across function families") {
  const TensorShape shape({2, 2});
  const NormSpec rho = NormSpec::schatten(2.0);
  const EinsteinTensor a = random_hermitian(shape, 39);
  const EinsteinTensor b = random_hermitian(shape, 40);
  // Linear f: the identity is exact.
  CHECK(perturbation_residual(ScalarFunction::identity(), a, b, rho) <= 1e-13);
  for (const ScalarFunction& f : {ScalarFunction::polynomial({0, 0, 1}),
                                  ScalarFunction::polynomial({1, -1, 0, 2}),
                                  ScalarFunction::exponential()}) {
    const double fa = frobenius_norm(apply_function(f, a));
    const double fb = frobenius_norm(apply_function(f, b));
    CHECK(perturbation_residual(f, a, b, rho) <= 1e-9 * (1.0 + fa + fb));
  }
  const EinsteinTensor pa = random_pd(shape, 41);
  const EinsteinTensor pb = random_pd(shape, 42);
  CHECK(perturbation_residual(ScalarFunction::logarithm(), pa, pb, rho) <= 1e-9);
}

TEST_CASE("quasi commutator identity and its reduction at d equal to identity") {
  const TensorShape shape({2, 2});
  const NormSpec rho = NormSpec::schatten(2.0);
  const EinsteinTensor a = random_hermitian(shape, 43);
  const EinsteinTensor b = random_hermitian(shape, 44);
  const EinsteinTensor d = random_hermitian(shape, 45);
  for (const ScalarFunction& f :
       {ScalarFunction::polynomial({0, 0, 1}), ScalarFunction::exponential()}) {
    CHECK(quasi_commutator_residual(f, a, b, d, rho) <= 1e-9);
    // With d = identity the sandwich collapses to the perturbation identity.
    const double with_id = quasi_commutator_residual(
        f, a, b, EinsteinTensor::identity(shape), rho);
    const double pert = perturbation_residual(f, a, b, rho);
    CHECK(std::abs(with_id - pert) <= 1e-11);
  }
}

TEST_CASE("derivative of the calculus on closed forms") {
  const TensorShape shape({3});
  const EinsteinTensor a = random_hermitian(shape, 46);
  const SpectralDecomposition da = eigh(a);
  const EinsteinTensor x = random_hermitian(shape, 47);

  // f = x: derivative is the direction itself.
  CHECK(rel_diff(frechet_derivative(ScalarFunction::identity(), da, x), x) <= 1e-12);

  // f = x^2: derivative is AX + XA.
  const EinsteinTensor got =
      frechet_derivative(ScalarFunction::polynomial({0, 0, 1}), da, x);
  const EinsteinTensor want =
      add(einstein_product(a, x), einstein_product(x, a));
  CHECK(rel_diff(got, want) <= 1e-12);
}

TEST_CASE("derivative matches the finite difference slope") {
  const TensorShape shape({2, 2});
  const EinsteinTensor a = random_hermitian(shape, 48);
  const SpectralDecomposition da = eigh(a);
  const EinsteinTensor x = random_hermitian(shape, 49);
  const ScalarFunction f = ScalarFunction::exponential();
  const EinsteinTensor deriv = frechet_derivative(f, da, x);
  double prev_err = -1.0;
  for (double t : {1e-3, 1e-4, 1e-5}) {
    const EinsteinTensor fwd = apply_function(f, add(a, scale(t, x)));
    const EinsteinTensor diff =
        subtract(subtract(fwd, apply_function(f, a)), scale(t, deriv));
    const double err = frobenius_norm(diff) / t;
    // Second-order remainder: the normalized error shrinks with t.
    if (prev_err >= 0.0) CHECK(err <= 0.2 * prev_err);
    prev_err = err;
  }
}

TEST_CASE("quasi derivative accepts commuting weights only") {
  const TensorShape shape({3});
  const EinsteinTensor a = random_hermitian(shape, 50);
  const SpectralDecomposition da = eigh(a);
  const EinsteinTensor x = random_hermitian(shape, 51);
  const ScalarFunction f = ScalarFunction::polynomial({0, 1, 1});

  // D = A^2 commutes with A; the result is the integral applied to D * X.
  const EinsteinTensor d = einstein_product(a, a);
  const EinsteinTensor got = quasi_frechet_derivative(f, da, a, x, d);
  const EinsteinTensor want =
      frechet_derivative(f, da, einstein_product(d, x));
  CHECK(rel_diff(got, want) <= 1e-11);

  const EinsteinTensor bad = random_hermitian(shape, 52);
  CHECK_THROWS_WITH_AS(quasi_frechet_derivative(f, da, a, x, bad),
                       doctest::Contains("commutator"), std::invalid_argument);
}

TEST_CASE("kernel evaluation failures name the eigenvalue pair") {
  const TensorShape shape({2});
  EinsteinTensor a = EinsteinTensor::zero(shape);
  a.set({0}, {0}, 1.0);
  a.set({1}, {1}, -2.0);
  const SpectralDecomposition da = eigh(a);
  const EinsteinTensor x = filled_tensor(shape, 53);
  const Kernel psi = Kernel::mean(MeanKind::geometric);
  CHECK_THROWS_WITH_AS(dti_apply(da, da, psi, x), doctest::Contains("-2"),
                       std::domain_error);
}
