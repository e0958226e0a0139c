#pragma once

// Markov-type tail bounds for random spectral integrals, and the Monte
// Carlo machinery that certifies them.  The pattern throughout: a statistic
// ||T(...)||_rho is sampled n times on one substream family, the bound's
// expectation factor is estimated on an independent substream family, and
// each tail probability gets an exact (Clopper-Pearson) binomial interval.
// A theta row PASSes when the interval's upper end sits below the bound
// clipped at 1.  Bounds are reported raw; clipping happens only for the
// verdict.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dti/dti_ops.hpp"
#include "dti/random.hpp"

namespace dti {

struct MeanEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

// sum_ij E|psi(lambda_i, mu_j)| with the two spectra drawn independently.
MeanEstimate expectation_abs_kernel(const EnsembleSpec& ens_a,
                                    const EnsembleSpec& ens_b, const Kernel& psi,
                                    int n_samples, const SeedSpec& seed);

// Same sum with both spectra taken from a single draw per sample.
MeanEstimate expectation_abs_kernel_single(const EnsembleSpec& ens, const Kernel& psi,
                                           int n_samples, const SeedSpec& seed);

// E ||A - B||_rho over independent draws.
MeanEstimate expectation_diff_norm(const EnsembleSpec& ens_a, const EnsembleSpec& ens_b,
                                   const NormSpec& rho, int n_samples,
                                   const SeedSpec& seed);

// E ||D*A - B*D||_rho over independent draws, D fixed.
MeanEstimate expectation_quasi_diff_norm(const EnsembleSpec& ens_a,
                                         const EnsembleSpec& ens_b,
                                         const EinsteinTensor& d, const NormSpec& rho,
                                         int n_samples, const SeedSpec& seed);

// (D^2 ||X||_rho / theta) * sum_ij E|psi|.
double theorem1_bound(double theta, double norm_x, double kernel_expectation, int dim);

// (D^2 Omega / theta) * E||A - B||_rho, with Omega dominating |f^[1]| on the
// working window.  The quasi variant takes E||D*A - B*D||_rho instead.
double lipschitz_bound(double theta, double omega, double expected_diff_norm, int dim);
double quasi_lipschitz_bound(double theta, double omega, double expected_diff_norm,
                             int dim);

// (D^2 ||X||_rho / theta) * sum_ij E|f^[1](lambda_i, lambda_j)|, both spectra
// from the same draw.
double derivative_bound(double theta, double norm_x, double dd_expectation, int dim);

struct ClopperPearsonInterval {
  double lo = 0.0;
  double hi = 1.0;
};

// Exact two-sided binomial interval at the given confidence.
ClopperPearsonInterval clopper_pearson(int successes, int trials, double confidence);

// ---------------------------------------------------------------------------
// Ratio of expectations via the centered-moment series
//   S_K = E(X)/E(Y)
//       + sum_{i=1..K} (-1)^i [E(X) E(Yc^i) + E(Xc Yc^i)] / E(Y)^(i+1),
// Xc = X - E(X), Yc = Y - E(Y), all moments empirical.  The brute-force
// reference mean(X/Y) is always reported; convergence of the partial sums
// is only meaningful when |Yc| stays well inside |E(Y)|.

struct RatioSeriesResult {
  int truncation = 0;
  std::vector<double> partial_sums;        // S_0 .. S_K
  std::vector<double> y_centered_moments;  // E(Yc^i), i = 1..K
  std::vector<double> xy_moments;          // E(Xc Yc^i), i = 1..K
  double mean_x = 0.0;
  double mean_y = 0.0;
  double brute_force_reference = 0.0;      // mean of X/Y
};

RatioSeriesResult expectation_ratio_series(const std::vector<double>& x,
                                           const std::vector<double>& y,
                                           int truncation);

// ---------------------------------------------------------------------------
// Mean-kernel corollary bounds.  Each reduces the Theorem-1 expectation to
// per-eigenvalue moments:
//   arithmetic: sum_ij (E|lambda_i| + E|mu_j|) / 2
//   geometric:  (sum_i E sqrt(lambda_i)) * (sum_j E sqrt(mu_j)), independence
//   harmonic:   sum_ij E[2 / (lambda_i^-1 + mu_j^-1)]
//   general:    ratio series per (i, j) on X = lambda^a - mu^a,
//               Y = lambda^(a-1) - mu^(a-1), falling back to the direct
//               kernel expectation when the series is not certified.
// The direct sum_ij E|psi| estimate on the same draws is reported for
// comparison.

struct MeanCorollaryResult {
  double bound = 0.0;
  double expectation_sum = 0.0;
  MeanEstimate direct;
  int series_pairs = 0;
  int fallback_pairs = 0;
};

MeanCorollaryResult mean_corollary_bound(MeanKind kind, double alpha,
                                         const EnsembleSpec& ens_a,
                                         const EnsembleSpec& ens_b, double theta,
                                         double norm_x, int n_samples,
                                         const SeedSpec& seed,
                                         int ratio_truncation = 4);

// ---------------------------------------------------------------------------
// Tail experiments.

enum class StatisticKind {
  dti_norm,          // || dti_psi over (A, B) applied to X ||
  lipschitz,         // || f(A) - f(B) ||
  quasi_lipschitz,   // || D f(A) - f(B) D ||
  derivative,        // || dti_{f^[1]} over (A, A) applied to X ||
  quasi_derivative,  // same with X replaced by p(A) * X
};

std::string statistic_kind_name(StatisticKind kind);

struct TailStatistic {
  StatisticKind kind = StatisticKind::dti_norm;
  std::optional<Kernel> kernel;          // dti_norm
  std::optional<ScalarFunction> f;       // all f-based kinds
  std::optional<EinsteinTensor> x;       // dti_norm, derivative, quasi_derivative
  std::optional<EinsteinTensor> d;       // quasi_lipschitz
  std::vector<double> d_poly;            // quasi_derivative: D = p(A)
  double omega = 0.0;                    // lipschitz / quasi_lipschitz constant
};

struct TailExperimentConfig {
  TailStatistic statistic;
  EnsembleSpec ensemble_a{TensorShape{{2}}, GaussianHermitianSpec{}};
  std::optional<EnsembleSpec> ensemble_b;  // unused by single-ensemble kinds
  NormSpec norm;
  // Explicit grid; if empty, resolved from pilot-run percentiles.
  std::vector<double> theta;
  std::vector<double> theta_percentiles;  // in (0, 1)
  int n_samples = 10000;
  int n_expectation_samples = 10000;
  double confidence = 0.99;
  SeedSpec seed;
  int threads = 1;
};

enum class Verdict { pass, fail, invalid };

std::string verdict_name(Verdict v);

struct TailRow {
  double theta = 0.0;
  double p_hat = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 1.0;
  double bound = 0.0;          // raw, may exceed 1
  bool bound_clipped = false;  // true when the verdict used min(bound, 1)
  Verdict verdict = Verdict::fail;
};

struct TailExperimentReport {
  std::string statistic_name;
  int n_samples = 0;
  int n_failed_samples = 0;  // domain failures, counted into every tail
  double confidence = 0.99;
  std::uint64_t master_seed = 0;
  double expectation_value = 0.0;  // factor entering the bound
  double expectation_std_error = 0.0;
  std::vector<TailRow> rows;
  double runtime_seconds = 0.0;   // excluded from determinism comparisons
  std::uint64_t config_hash = 0;  // stamped by the serialization layer

  bool all_pass() const;
};

// Runs the experiment.  Deterministic in everything but runtime_seconds for
// a fixed config and seed, for any thread count.  Rows with theta <= 0 are
// marked invalid.  Throws if more than 0.1% of samples fail to evaluate.
TailExperimentReport empirical_tail(const TailExperimentConfig& config);

// ---------------------------------------------------------------------------
// Continuity in the r-th mean.  Per sample, base tensors A, B and Gaussian
// directions E_A, E_B are drawn once and shared across the whole c sequence
// (A_c = A + c E_A), so the measured means inherit the pathwise coupling.
// The bound per c is 2^r Omega^r ||X||^r (E||cE_A||^r + E||cE_B||^r) with
// Omega a grid max of |f^[2]| over the realized spectra; it is provable
// pathwise in the schatten(2) gauge.

struct ConvergenceRow {
  double c = 0.0;
  double mean_diff_r = 0.0;
  double bound_r = 0.0;
};

struct ConvergenceReport {
  int r = 1;
  double omega = 0.0;
  std::vector<ConvergenceRow> rows;  // in the order of the c sequence
  bool monotone_nonincreasing = false;
  bool dominated = false;
};

ConvergenceReport convergence_in_mean_check(const EnsembleSpec& base,
                                            const std::vector<double>& c_sequence,
                                            const ScalarFunction& f,
                                            const EinsteinTensor& x, int r,
                                            const NormSpec& rho, int n_samples,
                                            const SeedSpec& seed);

}  // namespace dti
