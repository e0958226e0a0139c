#pragma once

// Seeded Hermitian random ensembles.  Every sample is a pure function of
// (master_seed, stream, index): the generator state is derived by a
// splitmix-style mix of those three words, so samples can be drawn in any
// order, from any thread, and always agree bitwise.  Complex Gaussians use
// the CN(0,1) convention (real and imaginary parts each N(0, 1/2)) and are
// produced by Box-Muller over the raw 64-bit stream, independent of
// standard-library distribution internals.

#include <cstdint>
#include <random>
#include <variant>
#include <vector>

#include "dti/tensor.hpp"

namespace dti {

struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t stream = 0;

  SeedSpec with_stream(std::uint64_t s) const { return {master_seed, s}; }
};

// Stream ids used by the experiment harness; callers may use any values.
namespace streams {
inline constexpr std::uint64_t kSampleA = 1;
inline constexpr std::uint64_t kSampleB = 2;
inline constexpr std::uint64_t kExpectationA = 3;
inline constexpr std::uint64_t kExpectationB = 4;
inline constexpr std::uint64_t kPilot = 5;
inline constexpr std::uint64_t kPerturbation = 6;
inline constexpr std::uint64_t kFixedInput = 7;
}  // namespace streams

// Deterministic per-(seed, stream, index) generator.
class RandomStream {
 public:
  RandomStream(const SeedSpec& seed, std::uint64_t index);

  double uniform();          // [0, 1)
  double gaussian();         // N(0, 1)
  Complex complex_gaussian();  // CN(0, 1)

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Eigenvalue source for the fixed-spectrum ensemble.
struct ConstantEigenvalues {
  std::vector<double> values;
};
struct UniformEigenvalues {
  double lo = 0.0;
  double hi = 1.0;
};
using EigenvalueSampler = std::variant<ConstantEigenvalues, UniformEigenvalues>;

// (G + G^H)/2 with G of iid CN(0,1) entries scaled by `scale`.
struct GaussianHermitianSpec {
  double scale = 1.0;
};
// scale^2 * G^H G / inner_samples + ridge * I, G an inner_samples x D
// complex Gaussian; positive definite whenever ridge > 0.
struct WishartSpec {
  int inner_samples = 8;
  double scale = 1.0;
  double ridge = 0.0;
};
// Q diag(values) Q^H with Q Haar-distributed from QR of a Gaussian matrix.
struct FixedEigenvaluesSpec {
  EigenvalueSampler sampler;
};

struct EnsembleSpec {
  TensorShape shape;
  std::variant<GaussianHermitianSpec, WishartSpec, FixedEigenvaluesSpec> kind;

  std::string kind_name() const;
};

// Hermitian by construction (symmetrized where the arithmetic alone would
// leave roundoff-level asymmetry).
EinsteinTensor sample(const EnsembleSpec& spec, const SeedSpec& seed,
                      std::uint64_t index);

// Spectrum of sample(spec, seed, index), descending.  For the fixed-spectrum
// ensemble the sorted configured values are returned exactly.
Eigen::VectorXd sample_eigenvalues(const EnsembleSpec& spec, const SeedSpec& seed,
                                   std::uint64_t index);

}  // namespace dti
