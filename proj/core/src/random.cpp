#include "dti/random.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "dti/spectral.hpp"

namespace dti {

namespace {

std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_state(const SeedSpec& seed, std::uint64_t index) {
  std::uint64_t s = splitmix(seed.master_seed);
  s = splitmix(s ^ (seed.stream * 0xd6e8feb86659fd93ULL));
  s = splitmix(s ^ (index * 0xa0761d6478bd642fULL));
  return s;
}

}  // namespace

RandomStream::RandomStream(const SeedSpec& seed, std::uint64_t index)
    : gen_(derive_state(seed, index)) {}

double RandomStream::uniform() {
  // 53-bit mantissa in [0, 1).
  return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double RandomStream::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller; u1 in (0, 1] keeps the log finite.
  const double u1 = (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  spare_ = r * std::sin(angle);
  has_spare_ = true;
  return r * std::cos(angle);
}

Complex RandomStream::complex_gaussian() {
  constexpr double kHalfSqrt2 = 0.7071067811865476;
  const double re = gaussian() * kHalfSqrt2;
  const double im = gaussian() * kHalfSqrt2;
  return {re, im};
}

std::string EnsembleSpec::kind_name() const {
  if (std::holds_alternative<GaussianHermitianSpec>(kind)) return "gaussian_hermitian";
  if (std::holds_alternative<WishartSpec>(kind)) return "wishart";
  return "fixed_eigenvalues";
}

namespace {

Matrix gaussian_matrix(RandomStream& rng, int rows, int cols) {
  Matrix g(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) g(r, c) = rng.complex_gaussian();
  return g;
}

std::vector<double> draw_eigenvalues(const EigenvalueSampler& sampler, int d,
                                     RandomStream& rng) {
  if (const auto* c = std::get_if<ConstantEigenvalues>(&sampler)) {
    if (static_cast<int>(c->values.size()) != d) {
      throw std::invalid_argument(
          fmt::format("fixed_eigenvalues: {} values configured but dim is {}",
                      c->values.size(), d));
    }
    return c->values;
  }
  const auto& u = std::get<UniformEigenvalues>(sampler);
  if (!(u.lo <= u.hi)) {
    throw std::invalid_argument(
        fmt::format("fixed_eigenvalues: empty uniform range [{}, {}]", u.lo, u.hi));
  }
  std::vector<double> v(d);
  for (double& x : v) x = u.lo + (u.hi - u.lo) * rng.uniform();
  return v;
}

}  // namespace

EinsteinTensor sample(const EnsembleSpec& spec, const SeedSpec& seed,
                      std::uint64_t index) {
  RandomStream rng(seed, index);
  const int d = spec.shape.dim();
  if (const auto* g = std::get_if<GaussianHermitianSpec>(&spec.kind)) {
    const Matrix raw = g->scale * gaussian_matrix(rng, d, d);
    return fold(0.5 * (raw + raw.adjoint()), spec.shape);
  }
  if (const auto* w = std::get_if<WishartSpec>(&spec.kind)) {
    if (w->inner_samples < 1) {
      throw std::invalid_argument(fmt::format(
          "wishart: inner_samples must be >= 1, got {}", w->inner_samples));
    }
    if (w->ridge < 0.0) {
      throw std::invalid_argument(
          fmt::format("wishart: ridge must be >= 0, got {}", w->ridge));
    }
    const Matrix g = gaussian_matrix(rng, w->inner_samples, d);
    Matrix m = (w->scale * w->scale / w->inner_samples) * (g.adjoint() * g);
    // Blocked matrix products are Hermitian only up to roundoff.
    m = 0.5 * (m + m.adjoint().eval());
    m += w->ridge * Matrix::Identity(d, d);
    return fold(std::move(m), spec.shape);
  }
  const auto& f = std::get<FixedEigenvaluesSpec>(spec.kind);
  const std::vector<double> lambda = draw_eigenvalues(f.sampler, d, rng);
  // Haar-ish unitary: QR of a Gaussian with the phases of R's diagonal fixed.
  const Matrix g = gaussian_matrix(rng, d, d);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < d; ++i) {
    const Complex rii = r(i, i);
    if (std::abs(rii) > 0.0) q.col(i) *= rii / std::abs(rii);
  }
  Matrix m = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) m += lambda[i] * (q.col(i) * q.col(i).adjoint());
  // The rank-one accumulation is Hermitian only up to roundoff.
  m = 0.5 * (m + m.adjoint().eval());
  return fold(std::move(m), spec.shape);
}

Eigen::VectorXd sample_eigenvalues(const EnsembleSpec& spec, const SeedSpec& seed,
                                   std::uint64_t index) {
  if (const auto* f = std::get_if<FixedEigenvaluesSpec>(&spec.kind)) {
    RandomStream rng(seed, index);
    std::vector<double> lambda = draw_eigenvalues(f->sampler, spec.shape.dim(), rng);
    std::sort(lambda.begin(), lambda.end(), std::greater<>());
    Eigen::VectorXd v(lambda.size());
    for (size_t i = 0; i < lambda.size(); ++i) v(static_cast<int>(i)) = lambda[i];
    return v;
  }
  return eigh(sample(spec, seed, index)).eigenvalues;
}

}  // namespace dti
