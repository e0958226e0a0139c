// Microbenchmarks for the hot paths: spectral decomposition, the fast
// O(D^3) double-integral route against the naive projector sum, gauge
// evaluation, and ensemble sampling.

#include <benchmark/benchmark.h>

#include "dti/bounds.hpp"

namespace {

using namespace dti;

TensorShape shape_for_dim(int d) {
  if (d == 4) return TensorShape({2, 2});
  if (d == 8) return TensorShape({2, 4});
  if (d == 16) return TensorShape({4, 4});
  return TensorShape({d});
}

EinsteinTensor hermitian_input(const TensorShape& shape, std::uint64_t index) {
  return sample(EnsembleSpec{shape, GaussianHermitianSpec{1.0}}, SeedSpec{7, 1},
                index);
}

void BM_eigh(benchmark::State& state) {
  const TensorShape shape = shape_for_dim(static_cast<int>(state.range(0)));
  const EinsteinTensor a = hermitian_input(shape, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(eigh(a));
  }
}
BENCHMARK(BM_eigh)->Arg(4)->Arg(8)->Arg(16);

void BM_dti_fast(benchmark::State& state) {
  const TensorShape shape = shape_for_dim(static_cast<int>(state.range(0)));
  const SpectralDecomposition da = eigh(hermitian_input(shape, 0));
  const SpectralDecomposition db = eigh(hermitian_input(shape, 1));
  const EinsteinTensor x = hermitian_input(shape, 2);
  const Kernel psi = Kernel::mean(MeanKind::arithmetic);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dti_apply(da, db, psi, x));
  }
}
BENCHMARK(BM_dti_fast)->Arg(4)->Arg(8)->Arg(16);

void BM_dti_naive(benchmark::State& state) {
  const TensorShape shape = shape_for_dim(static_cast<int>(state.range(0)));
  const SpectralDecomposition da = eigh(hermitian_input(shape, 0));
  const SpectralDecomposition db = eigh(hermitian_input(shape, 1));
  const EinsteinTensor x = hermitian_input(shape, 2);
  const Kernel psi = Kernel::mean(MeanKind::arithmetic);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dti_apply_naive(da, db, psi, x));
  }
}
BENCHMARK(BM_dti_naive)->Arg(4)->Arg(8);

void BM_tti_fast(benchmark::State& state) {
  const TensorShape shape = shape_for_dim(static_cast<int>(state.range(0)));
  const SpectralDecomposition da = eigh(hermitian_input(shape, 0));
  const SpectralDecomposition db = eigh(hermitian_input(shape, 1));
  const SpectralDecomposition dc = eigh(hermitian_input(shape, 2));
  const EinsteinTensor x = hermitian_input(shape, 3);
  const EinsteinTensor y = hermitian_input(shape, 4);
  const Kernel phi =
      Kernel::second_divided_difference(ScalarFunction::polynomial({0, 0, 0, 1.0}));
  for (auto _ : state) {
    benchmark::DoNotOptimize(tti_apply(da, db, dc, phi, x, y));
  }
}
BENCHMARK(BM_tti_fast)->Arg(4)->Arg(8);

void BM_norm_schatten(benchmark::State& state) {
  const TensorShape shape = shape_for_dim(static_cast<int>(state.range(0)));
  const EinsteinTensor x = hermitian_input(shape, 0);
  const NormSpec rho = NormSpec::schatten(2.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(norm(x, rho));
  }
}
BENCHMARK(BM_norm_schatten)->Arg(4)->Arg(8)->Arg(16);

void BM_sample_wishart(benchmark::State& state) {
  const TensorShape shape = shape_for_dim(static_cast<int>(state.range(0)));
  const EnsembleSpec ens{shape, WishartSpec{16, 1.0, 0.1}};
  std::uint64_t index = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample(ens, SeedSpec{7, 1}, index++));
  }
}
BENCHMARK(BM_sample_wishart)->Arg(4)->Arg(8)->Arg(16);

}  // namespace

BENCHMARK_MAIN();
