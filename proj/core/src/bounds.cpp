#include "dti/bounds.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <boost/math/distributions/beta.hpp>
#include <fmt/format.h>

namespace dti {

namespace {

MeanEstimate mean_of(const std::vector<double>& v) {
  const auto n = static_cast<double>(v.size());
  if (v.empty()) throw std::invalid_argument("mean_of: empty sample");
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (v.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n * (n - 1.0)))};
}

// Deterministic parallel map: slot t is written exactly once, aggregation
// stays with the caller, so results do not depend on the thread count.
void parallel_fill(std::vector<double>& out, int threads,
                   const std::function<double(std::uint64_t)>& fn) {
  const std::uint64_t n = out.size();
  threads = std::clamp<std::uint64_t>(threads < 1 ? 1 : threads, 1, n ? n : 1);
  if (threads == 1) {
    for (std::uint64_t t = 0; t < n; ++t) out[t] = fn(t);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const std::uint64_t chunk = (n + threads - 1) / threads;
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      const std::uint64_t lo = w * chunk;
      const std::uint64_t hi = std::min(n, lo + chunk);
      try {
        for (std::uint64_t t = lo; t < hi; ++t) out[t] = fn(t);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

double abs_kernel_sum(const Kernel& psi, const Eigen::VectorXd& lambda,
                      const Eigen::VectorXd& mu, std::uint64_t sample_index) {
  double sum = 0.0;
  for (int i = 0; i < lambda.size(); ++i) {
    for (int j = 0; j < mu.size(); ++j) {
      try {
        sum += std::abs(psi(lambda(i), mu(j)));
      } catch (const std::domain_error& e) {
        throw std::domain_error(fmt::format(
            "sample {}: kernel {} at (i={}, j={}): {}", sample_index, psi.name(), i,
            j, e.what()));
      }
    }
  }
  return sum;
}

void require_positive(int n, const char* what) {
  if (n < 1) throw std::invalid_argument(fmt::format("{} must be >= 1, got {}", what, n));
}

}  // namespace

MeanEstimate expectation_abs_kernel(const EnsembleSpec& ens_a,
                                    const EnsembleSpec& ens_b, const Kernel& psi,
                                    int n_samples, const SeedSpec& seed) {
  require_positive(n_samples, "expectation_abs_kernel: n_samples");
  std::vector<double> v(n_samples);
  for (std::uint64_t t = 0; t < static_cast<std::uint64_t>(n_samples); ++t) {
    const Eigen::VectorXd lam =
        sample_eigenvalues(ens_a, seed.with_stream(streams::kExpectationA), t);
    const Eigen::VectorXd mu =
        sample_eigenvalues(ens_b, seed.with_stream(streams::kExpectationB), t);
    v[t] = abs_kernel_sum(psi, lam, mu, t);
  }
  return mean_of(v);
}

MeanEstimate expectation_abs_kernel_single(const EnsembleSpec& ens, const Kernel& psi,
                                           int n_samples, const SeedSpec& seed) {
  require_positive(n_samples, "expectation_abs_kernel_single: n_samples");
  std::vector<double> v(n_samples);
  for (std::uint64_t t = 0; t < static_cast<std::uint64_t>(n_samples); ++t) {
    const Eigen::VectorXd lam =
        sample_eigenvalues(ens, seed.with_stream(streams::kExpectationA), t);
    v[t] = abs_kernel_sum(psi, lam, lam, t);
  }
  return mean_of(v);
}

MeanEstimate expectation_diff_norm(const EnsembleSpec& ens_a, const EnsembleSpec& ens_b,
                                   const NormSpec& rho, int n_samples,
                                   const SeedSpec& seed) {
  require_positive(n_samples, "expectation_diff_norm: n_samples");
  std::vector<double> v(n_samples);
  for (std::uint64_t t = 0; t < static_cast<std::uint64_t>(n_samples); ++t) {
    const EinsteinTensor a = sample(ens_a, seed.with_stream(streams::kExpectationA), t);
    const EinsteinTensor b = sample(ens_b, seed.with_stream(streams::kExpectationB), t);
    v[t] = norm(subtract(a, b), rho);
  }
  return mean_of(v);
}

MeanEstimate expectation_quasi_diff_norm(const EnsembleSpec& ens_a,
                                         const EnsembleSpec& ens_b,
                                         const EinsteinTensor& d, const NormSpec& rho,
                                         int n_samples, const SeedSpec& seed) {
  require_positive(n_samples, "expectation_quasi_diff_norm: n_samples");
  std::vector<double> v(n_samples);
  for (std::uint64_t t = 0; t < static_cast<std::uint64_t>(n_samples); ++t) {
    const EinsteinTensor a = sample(ens_a, seed.with_stream(streams::kExpectationA), t);
    const EinsteinTensor b = sample(ens_b, seed.with_stream(streams::kExpectationB), t);
    v[t] = norm(subtract(einstein_product(d, a), einstein_product(b, d)), rho);
  }
  return mean_of(v);
}

namespace {

void check_bound_args(double theta, double nonneg, const char* what) {
  if (!(theta > 0.0)) {
    throw std::domain_error(fmt::format("{}: theta must be positive, got {}", what, theta));
  }
  if (!(nonneg >= 0.0)) {
    throw std::domain_error(fmt::format("{}: negative factor {}", what, nonneg));
  }
}

}  // namespace

double theorem1_bound(double theta, double norm_x, double kernel_expectation, int dim) {
  check_bound_args(theta, norm_x, "theorem1_bound");
  check_bound_args(theta, kernel_expectation, "theorem1_bound");
  require_positive(dim, "theorem1_bound: dim");
  return static_cast<double>(dim) * dim * norm_x * kernel_expectation / theta;
}

double lipschitz_bound(double theta, double omega, double expected_diff_norm, int dim) {
  check_bound_args(theta, omega, "lipschitz_bound");
  check_bound_args(theta, expected_diff_norm, "lipschitz_bound");
  require_positive(dim, "lipschitz_bound: dim");
  return static_cast<double>(dim) * dim * omega * expected_diff_norm / theta;
}

double quasi_lipschitz_bound(double theta, double omega, double expected_diff_norm,
                             int dim) {
  return lipschitz_bound(theta, omega, expected_diff_norm, dim);
}

double derivative_bound(double theta, double norm_x, double dd_expectation, int dim) {
  return theorem1_bound(theta, norm_x, dd_expectation, dim);
}

ClopperPearsonInterval clopper_pearson(int successes, int trials, double confidence) {
  require_positive(trials, "clopper_pearson: trials");
  if (successes < 0 || successes > trials) {
    throw std::invalid_argument(fmt::format(
        "clopper_pearson: successes {} outside [0, {}]", successes, trials));
  }
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw std::invalid_argument(
        fmt::format("clopper_pearson: confidence must be in (0, 1), got {}", confidence));
  }
  const double alpha = 1.0 - confidence;
  ClopperPearsonInterval ci;
  if (successes == 0) {
    ci.lo = 0.0;
  } else {
    boost::math::beta_distribution<double> lo_dist(successes, trials - successes + 1);
    ci.lo = boost::math::quantile(lo_dist, alpha / 2.0);
  }
  if (successes == trials) {
    ci.hi = 1.0;
  } else {
    boost::math::beta_distribution<double> hi_dist(successes + 1, trials - successes);
    ci.hi = boost::math::quantile(hi_dist, 1.0 - alpha / 2.0);
  }
  return ci;
}

RatioSeriesResult expectation_ratio_series(const std::vector<double>& x,
                                           const std::vector<double>& y,
                                           int truncation) {
  if (x.size() != y.size() || x.empty()) {
    throw std::invalid_argument(
        fmt::format("expectation_ratio_series: need equal nonempty samples, got {} and {}",
                    x.size(), y.size()));
  }
  if (truncation < 0) {
    throw std::invalid_argument(fmt::format(
        "expectation_ratio_series: truncation must be >= 0, got {}", truncation));
  }
  for (size_t t = 0; t < y.size(); ++t) {
    if (y[t] == 0.0) {
      throw std::domain_error(
          fmt::format("expectation_ratio_series: Y sample {} is zero", t));
    }
  }
  RatioSeriesResult res;
  res.truncation = truncation;
  const auto n = static_cast<double>(x.size());
  res.mean_x = std::accumulate(x.begin(), x.end(), 0.0) / n;
  res.mean_y = std::accumulate(y.begin(), y.end(), 0.0) / n;
  if (res.mean_y == 0.0) {
    throw std::domain_error("expectation_ratio_series: empirical E(Y) is zero");
  }
  double brute = 0.0;
  for (size_t t = 0; t < x.size(); ++t) brute += x[t] / y[t];
  res.brute_force_reference = brute / n;

  res.partial_sums.push_back(res.mean_x / res.mean_y);
  double y_pow = res.mean_y;  // E(Y)^(i+1) accumulator starts at E(Y)^1
  for (int i = 1; i <= truncation; ++i) {
    double ym = 0.0, xym = 0.0;
    for (size_t t = 0; t < x.size(); ++t) {
      const double yc = y[t] - res.mean_y;
      double p = 1.0;
      for (int q = 0; q < i; ++q) p *= yc;
      ym += p;
      xym += (x[t] - res.mean_x) * p;
    }
    ym /= n;
    xym /= n;
    res.y_centered_moments.push_back(ym);
    res.xy_moments.push_back(xym);
    y_pow *= res.mean_y;  // now E(Y)^(i+1)
    const double sign = (i % 2 == 0) ? 1.0 : -1.0;
    res.partial_sums.push_back(res.partial_sums.back() +
                               sign * (res.mean_x * ym + xym) / y_pow);
  }
  return res;
}

namespace {

struct EigenDraws {
  std::vector<Eigen::VectorXd> a;
  std::vector<Eigen::VectorXd> b;
};

EigenDraws draw_spectra(const EnsembleSpec& ens_a, const EnsembleSpec& ens_b,
                        int n_samples, const SeedSpec& seed) {
  EigenDraws d;
  d.a.reserve(n_samples);
  d.b.reserve(n_samples);
  for (std::uint64_t t = 0; t < static_cast<std::uint64_t>(n_samples); ++t) {
    d.a.push_back(sample_eigenvalues(ens_a, seed.with_stream(streams::kExpectationA), t));
    d.b.push_back(sample_eigenvalues(ens_b, seed.with_stream(streams::kExpectationB), t));
  }
  return d;
}

void require_positive_spectra(const EigenDraws& draws, MeanKind kind) {
  for (size_t t = 0; t < draws.a.size(); ++t) {
    const double amin = draws.a[t].minCoeff();
    const double bmin = draws.b[t].minCoeff();
    if (amin <= 0.0 || bmin <= 0.0) {
      throw std::domain_error(fmt::format(
          "mean_corollary_bound: {} kind requires positive spectra; sample {} has "
          "minimum eigenvalue {}",
          mean_kind_name(kind), t, std::min(amin, bmin)));
    }
  }
}

}  // namespace

MeanCorollaryResult mean_corollary_bound(MeanKind kind, double alpha,
                                         const EnsembleSpec& ens_a,
                                         const EnsembleSpec& ens_b, double theta,
                                         double norm_x, int n_samples,
                                         const SeedSpec& seed, int ratio_truncation) {
  require_positive(n_samples, "mean_corollary_bound: n_samples");
  if (!(theta > 0.0)) {
    throw std::domain_error(
        fmt::format("mean_corollary_bound: theta must be positive, got {}", theta));
  }
  if (kind == MeanKind::logarithmic) {
    throw std::invalid_argument(
        "mean_corollary_bound: no moment reduction for the logarithmic kind; use "
        "theorem1_bound with the direct kernel expectation");
  }
  const int d = ens_a.shape.dim();
  if (ens_b.shape != ens_a.shape) {
    throw std::invalid_argument(
        fmt::format("mean_corollary_bound: shape mismatch {} vs {}",
                    ens_a.shape.to_string(), ens_b.shape.to_string()));
  }
  const EigenDraws draws = draw_spectra(ens_a, ens_b, n_samples, seed);
  if (kind != MeanKind::arithmetic) require_positive_spectra(draws, kind);

  MeanCorollaryResult res;
  const auto n = static_cast<double>(n_samples);

  switch (kind) {
    case MeanKind::arithmetic: {
      // sum_ij (E|lambda_i| + E|mu_j|) / 2 = D/2 (sum_i E|lambda_i| + sum_j E|mu_j|)
      double sa = 0.0, sb = 0.0;
      for (int t = 0; t < n_samples; ++t) {
        sa += draws.a[t].cwiseAbs().sum();
        sb += draws.b[t].cwiseAbs().sum();
      }
      res.expectation_sum = 0.5 * d * (sa / n + sb / n);
      break;
    }
    case MeanKind::geometric: {
      // Independence factorizes E sqrt(lambda_i) sqrt(mu_j).
      double sa = 0.0, sb = 0.0;
      for (int t = 0; t < n_samples; ++t) {
        sa += draws.a[t].cwiseSqrt().sum();
        sb += draws.b[t].cwiseSqrt().sum();
      }
      res.expectation_sum = (sa / n) * (sb / n);
      break;
    }
    case MeanKind::harmonic: {
      double s = 0.0;
      for (int t = 0; t < n_samples; ++t) {
        for (int i = 0; i < d; ++i) {
          for (int j = 0; j < d; ++j) {
            s += 2.0 / (1.0 / draws.a[t](i) + 1.0 / draws.b[t](j));
          }
        }
      }
      res.expectation_sum = s / n;
      break;
    }
    case MeanKind::general: {
      if (alpha == 0.0) {
        throw std::invalid_argument(
            "mean_corollary_bound: general mean undefined at alpha = 0");
      }
      const Kernel psi = Kernel::mean(MeanKind::general, alpha);
      double total = 0.0;
      std::vector<double> xs(n_samples), ys(n_samples);
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
          bool series_ok = (alpha != 1.0);
          double max_dev = 0.0;
          for (int t = 0; t < n_samples && series_ok; ++t) {
            const double lam = draws.a[t](i);
            const double mu = draws.b[t](j);
            xs[t] = std::pow(lam, alpha) - std::pow(mu, alpha);
            ys[t] = std::pow(lam, alpha - 1.0) - std::pow(mu, alpha - 1.0);
            if (ys[t] == 0.0) series_ok = false;
          }
          if (series_ok) {
            const double mean_y =
                std::accumulate(ys.begin(), ys.end(), 0.0) / n;
            if (mean_y == 0.0) {
              series_ok = false;
            } else {
              for (int t = 0; t < n_samples; ++t) {
                max_dev = std::max(max_dev, std::abs(ys[t] - mean_y));
              }
              // Certified only when the centered tail contracts.
              series_ok = max_dev < 0.9 * std::abs(mean_y);
            }
          }
          if (series_ok) {
            const RatioSeriesResult series =
                expectation_ratio_series(xs, ys, ratio_truncation);
            total += std::abs((alpha - 1.0) / alpha * series.partial_sums.back());
            ++res.series_pairs;
          } else {
            double s = 0.0;
            for (int t = 0; t < n_samples; ++t) {
              s += std::abs(psi(draws.a[t](i), draws.b[t](j)));
            }
            total += s / n;
            ++res.fallback_pairs;
          }
        }
      }
      res.expectation_sum = total;
      break;
    }
    case MeanKind::logarithmic:
      break;  // rejected above
  }

  // Direct sum_ij E|psi| on the identical draws, for comparison.
  const Kernel direct_kernel =
      kind == MeanKind::general ? Kernel::mean(kind, alpha) : Kernel::mean(kind);
  std::vector<double> direct(n_samples);
  for (int t = 0; t < n_samples; ++t) {
    direct[t] = abs_kernel_sum(direct_kernel, draws.a[t], draws.b[t],
                               static_cast<std::uint64_t>(t));
  }
  res.direct = mean_of(direct);
  res.bound = theorem1_bound(theta, norm_x, res.expectation_sum, d);
  return res;
}

std::string statistic_kind_name(StatisticKind kind) {
  switch (kind) {
    case StatisticKind::dti_norm: return "dti_norm";
    case StatisticKind::lipschitz: return "lipschitz";
    case StatisticKind::quasi_lipschitz: return "quasi_lipschitz";
    case StatisticKind::derivative: return "derivative";
    case StatisticKind::quasi_derivative: return "quasi_derivative";
  }
  throw std::logic_error("statistic_kind_name: unreachable");
}

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::pass: return "PASS";
    case Verdict::fail: return "FAIL";
    case Verdict::invalid: return "INVALID";
  }
  throw std::logic_error("verdict_name: unreachable");
}

bool TailExperimentReport::all_pass() const {
  if (rows.empty()) return false;
  return std::all_of(rows.begin(), rows.end(),
                     [](const TailRow& r) { return r.verdict == Verdict::pass; });
}

namespace {

bool needs_second_ensemble(StatisticKind kind) {
  return kind == StatisticKind::dti_norm || kind == StatisticKind::lipschitz ||
         kind == StatisticKind::quasi_lipschitz;
}

void validate_config(const TailExperimentConfig& cfg) {
  const auto& st = cfg.statistic;
  const auto kind = statistic_kind_name(st.kind);
  auto missing = [&](const char* what) {
    throw std::invalid_argument(
        fmt::format("empirical_tail: statistic {} requires {}", kind, what));
  };
  if (needs_second_ensemble(st.kind) && !cfg.ensemble_b) missing("ensemble_b");
  if (cfg.ensemble_b && cfg.ensemble_b->shape != cfg.ensemble_a.shape) {
    throw std::invalid_argument(
        fmt::format("empirical_tail: ensemble shapes differ, {} vs {}",
                    cfg.ensemble_a.shape.to_string(),
                    cfg.ensemble_b->shape.to_string()));
  }
  switch (st.kind) {
    case StatisticKind::dti_norm:
      if (!st.kernel) missing("a kernel");
      if (st.kernel->arity() != 2) {
        throw std::invalid_argument("empirical_tail: dti_norm kernel must have arity 2");
      }
      if (!st.x) missing("a fixed tensor x");
      break;
    case StatisticKind::lipschitz:
      if (!st.f) missing("a scalar function");
      break;
    case StatisticKind::quasi_lipschitz:
      if (!st.f) missing("a scalar function");
      if (!st.d) missing("a fixed tensor d");
      break;
    case StatisticKind::derivative:
      if (!st.f) missing("a scalar function");
      if (!st.x) missing("a fixed tensor x");
      break;
    case StatisticKind::quasi_derivative:
      if (!st.f) missing("a scalar function");
      if (!st.x) missing("a fixed tensor x");
      if (st.d_poly.empty()) missing("polynomial coefficients for d");
      break;
  }
  if ((st.kind == StatisticKind::lipschitz || st.kind == StatisticKind::quasi_lipschitz) &&
      !(st.omega >= 0.0 && std::isfinite(st.omega))) {
    throw std::invalid_argument(
        fmt::format("empirical_tail: omega must be finite and >= 0, got {}", st.omega));
  }
  if (st.x && st.x->shape() != cfg.ensemble_a.shape) {
    throw std::invalid_argument(
        fmt::format("empirical_tail: x has shape {} but ensembles have {}",
                    st.x->shape().to_string(), cfg.ensemble_a.shape.to_string()));
  }
  if (st.d && st.d->shape() != cfg.ensemble_a.shape) {
    throw std::invalid_argument(
        fmt::format("empirical_tail: d has shape {} but ensembles have {}",
                    st.d->shape().to_string(), cfg.ensemble_a.shape.to_string()));
  }
  require_positive(cfg.n_samples, "empirical_tail: n_samples");
  require_positive(cfg.n_expectation_samples, "empirical_tail: n_expectation_samples");
  if (!(cfg.confidence > 0.0 && cfg.confidence < 1.0)) {
    throw std::invalid_argument(fmt::format(
        "empirical_tail: confidence must be in (0, 1), got {}", cfg.confidence));
  }
  if (cfg.theta.empty() && cfg.theta_percentiles.empty()) {
    throw std::invalid_argument(
        "empirical_tail: need a theta grid or theta percentiles");
  }
  for (double q : cfg.theta_percentiles) {
    if (!(q > 0.0 && q < 1.0)) {
      throw std::invalid_argument(
          fmt::format("empirical_tail: percentile {} outside (0, 1)", q));
    }
  }
}

double evaluate_statistic(const TailExperimentConfig& cfg, const SeedSpec& seed,
                          std::uint64_t t) {
  const auto& st = cfg.statistic;
  const EinsteinTensor a = sample(cfg.ensemble_a, seed.with_stream(streams::kSampleA), t);
  switch (st.kind) {
    case StatisticKind::dti_norm: {
      const EinsteinTensor b =
          sample(*cfg.ensemble_b, seed.with_stream(streams::kSampleB), t);
      return norm(dti_apply(eigh(a), eigh(b), *st.kernel, *st.x), cfg.norm);
    }
    case StatisticKind::lipschitz: {
      const EinsteinTensor b =
          sample(*cfg.ensemble_b, seed.with_stream(streams::kSampleB), t);
      return norm(subtract(apply_function(*st.f, a), apply_function(*st.f, b)),
                  cfg.norm);
    }
    case StatisticKind::quasi_lipschitz: {
      const EinsteinTensor b =
          sample(*cfg.ensemble_b, seed.with_stream(streams::kSampleB), t);
      const EinsteinTensor lhs = subtract(einstein_product(*st.d, apply_function(*st.f, a)),
                                          einstein_product(apply_function(*st.f, b), *st.d));
      return norm(lhs, cfg.norm);
    }
    case StatisticKind::derivative: {
      const SpectralDecomposition dec = eigh(a);
      return norm(dti_apply(dec, dec, Kernel::first_divided_difference(*st.f), *st.x),
                  cfg.norm);
    }
    case StatisticKind::quasi_derivative: {
      const SpectralDecomposition dec = eigh(a);
      const EinsteinTensor dt =
          apply_function(ScalarFunction::polynomial(st.d_poly), dec);
      return norm(dti_apply(dec, dec, Kernel::first_divided_difference(*st.f),
                            einstein_product(dt, *st.x)),
                  cfg.norm);
    }
  }
  throw std::logic_error("evaluate_statistic: unreachable");
}

// Expectation factor of the bound for one statistic kind, on the
// expectation substreams.
MeanEstimate bound_expectation(const TailExperimentConfig& cfg) {
  const auto& st = cfg.statistic;
  switch (st.kind) {
    case StatisticKind::dti_norm:
      return expectation_abs_kernel(cfg.ensemble_a, *cfg.ensemble_b, *st.kernel,
                                    cfg.n_expectation_samples, cfg.seed);
    case StatisticKind::lipschitz:
      return expectation_diff_norm(cfg.ensemble_a, *cfg.ensemble_b, cfg.norm,
                                   cfg.n_expectation_samples, cfg.seed);
    case StatisticKind::quasi_lipschitz:
      return expectation_quasi_diff_norm(cfg.ensemble_a, *cfg.ensemble_b, *st.d,
                                         cfg.norm, cfg.n_expectation_samples, cfg.seed);
    case StatisticKind::derivative:
      return expectation_abs_kernel_single(cfg.ensemble_a,
                                           Kernel::first_divided_difference(*st.f),
                                           cfg.n_expectation_samples, cfg.seed);
    case StatisticKind::quasi_derivative: {
      // Joint E[ sum_ij |f^[1]| * ||p(A) X||_rho ]; reduces to the separated
      // product when p(A) is constant across draws.
      const Kernel dd = Kernel::first_divided_difference(*st.f);
      const ScalarFunction poly = ScalarFunction::polynomial(st.d_poly);
      std::vector<double> v(cfg.n_expectation_samples);
      for (std::uint64_t t = 0; t < v.size(); ++t) {
        const EinsteinTensor a =
            sample(cfg.ensemble_a, cfg.seed.with_stream(streams::kExpectationA), t);
        const SpectralDecomposition dec = eigh(a);
        const double ksum = abs_kernel_sum(dd, dec.eigenvalues, dec.eigenvalues, t);
        const double factor =
            norm(einstein_product(apply_function(poly, dec), *st.x), cfg.norm);
        v[t] = ksum * factor;
      }
      return mean_of(v);
    }
  }
  throw std::logic_error("bound_expectation: unreachable");
}

double bound_for_theta(const TailExperimentConfig& cfg, double theta,
                       double expectation) {
  const int d = cfg.ensemble_a.shape.dim();
  const auto& st = cfg.statistic;
  switch (st.kind) {
    case StatisticKind::dti_norm:
      return theorem1_bound(theta, norm(*st.x, cfg.norm), expectation, d);
    case StatisticKind::lipschitz:
      return lipschitz_bound(theta, st.omega, expectation, d);
    case StatisticKind::quasi_lipschitz:
      return quasi_lipschitz_bound(theta, st.omega, expectation, d);
    case StatisticKind::derivative:
      return derivative_bound(theta, norm(*st.x, cfg.norm), expectation, d);
    case StatisticKind::quasi_derivative:
      // ||p(A) X|| is already inside the expectation.
      return static_cast<double>(d) * d * expectation / theta;
  }
  throw std::logic_error("bound_for_theta: unreachable");
}

std::uint64_t mix_master(std::uint64_t master, std::uint64_t salt) {
  std::uint64_t z = master ^ salt;
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

TailExperimentReport empirical_tail(const TailExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  validate_config(config);

  TailExperimentReport report;
  report.statistic_name = statistic_kind_name(config.statistic.kind);
  report.n_samples = config.n_samples;
  report.confidence = config.confidence;
  report.master_seed = config.seed.master_seed;

  // Tail samples on the primary substreams.
  std::vector<double> stats(config.n_samples);
  std::vector<std::string> failures;
  std::mutex failures_mutex;
  parallel_fill(stats, config.threads, [&](std::uint64_t t) {
    try {
      return evaluate_statistic(config, config.seed, t);
    } catch (const std::domain_error& e) {
      {
        std::lock_guard<std::mutex> lock(failures_mutex);
        failures.emplace_back(fmt::format("sample {}: {}", t, e.what()));
      }
      return std::numeric_limits<double>::infinity();
    }
  });
  report.n_failed_samples = static_cast<int>(failures.size());
  if (report.n_failed_samples > 0.001 * config.n_samples) {
    throw std::runtime_error(fmt::format(
        "empirical_tail: {} of {} samples failed to evaluate; first failure: {}",
        report.n_failed_samples, config.n_samples, failures.front()));
  }

  // Theta grid, explicit or from pilot percentiles on a salted seed.
  std::vector<double> thetas = config.theta;
  if (thetas.empty()) {
    const int n_pilot = std::min(config.n_samples, 2000);
    SeedSpec pilot_seed{mix_master(config.seed.master_seed, 0x70696c6f74ULL),
                        config.seed.stream};
    std::vector<double> pilot(n_pilot);
    parallel_fill(pilot, config.threads, [&](std::uint64_t t) {
      return evaluate_statistic(config, pilot_seed, t);
    });
    std::sort(pilot.begin(), pilot.end());
    for (double q : config.theta_percentiles) {
      const auto idx = static_cast<size_t>(q * (n_pilot - 1));
      thetas.push_back(pilot[idx]);
    }
  }

  const MeanEstimate expectation = bound_expectation(config);
  report.expectation_value = expectation.estimate;
  report.expectation_std_error = expectation.std_error;

  for (double theta : thetas) {
    TailRow row;
    row.theta = theta;
    int hits = 0;
    for (double s : stats) {
      if (s >= theta) ++hits;
    }
    row.p_hat = static_cast<double>(hits) / config.n_samples;
    const ClopperPearsonInterval ci =
        clopper_pearson(hits, config.n_samples, config.confidence);
    row.ci_lo = ci.lo;
    row.ci_hi = ci.hi;
    if (!(theta > 0.0)) {
      row.bound = std::numeric_limits<double>::quiet_NaN();
      row.verdict = Verdict::invalid;
    } else {
      row.bound = bound_for_theta(config, theta, expectation.estimate);
      const double effective = std::min(row.bound, 1.0);
      row.bound_clipped = row.bound > 1.0;
      row.verdict = (row.ci_hi <= effective) ? Verdict::pass : Verdict::fail;
    }
    report.rows.push_back(row);
  }

  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

ConvergenceReport convergence_in_mean_check(const EnsembleSpec& base,
                                            const std::vector<double>& c_sequence,
                                            const ScalarFunction& f,
                                            const EinsteinTensor& x, int r,
                                            const NormSpec& rho, int n_samples,
                                            const SeedSpec& seed) {
  require_positive(n_samples, "convergence_in_mean_check: n_samples");
  if (r < 1) {
    throw std::invalid_argument(
        fmt::format("convergence_in_mean_check: r must be >= 1, got {}", r));
  }
  if (c_sequence.empty()) {
    throw std::invalid_argument("convergence_in_mean_check: empty c sequence");
  }
  for (double c : c_sequence) {
    if (!(c > 0.0)) {
      throw std::invalid_argument(fmt::format(
          "convergence_in_mean_check: perturbation sizes must be positive, got {}", c));
    }
  }
  if (x.shape() != base.shape) {
    throw std::invalid_argument(
        fmt::format("convergence_in_mean_check: x has shape {} but ensemble has {}",
                    x.shape().to_string(), base.shape.to_string()));
  }
  const Kernel dd1 = Kernel::first_divided_difference(f);
  const EnsembleSpec direction{base.shape, GaussianHermitianSpec{1.0}};
  const size_t nc = c_sequence.size();
  std::vector<double> diff_acc(nc, 0.0), da_acc(nc, 0.0), db_acc(nc, 0.0);
  double eig_lo = std::numeric_limits<double>::infinity();
  double eig_hi = -std::numeric_limits<double>::infinity();
  auto track = [&](const SpectralDecomposition& dec) {
    eig_lo = std::min(eig_lo, dec.eigenvalues.minCoeff());
    eig_hi = std::max(eig_hi, dec.eigenvalues.maxCoeff());
  };

  for (std::uint64_t t = 0; t < static_cast<std::uint64_t>(n_samples); ++t) {
    const EinsteinTensor a = sample(base, seed.with_stream(streams::kSampleA), t);
    const EinsteinTensor b = sample(base, seed.with_stream(streams::kSampleB), t);
    const EinsteinTensor ea =
        sample(direction, seed.with_stream(streams::kPerturbation), 2 * t);
    const EinsteinTensor eb =
        sample(direction, seed.with_stream(streams::kPerturbation), 2 * t + 1);
    const SpectralDecomposition dec_a = eigh(a);
    const SpectralDecomposition dec_b = eigh(b);
    track(dec_a);
    track(dec_b);
    const EinsteinTensor t_base = dti_apply(dec_a, dec_b, dd1, x);
    for (size_t ci = 0; ci < nc; ++ci) {
      const double c = c_sequence[ci];
      const SpectralDecomposition dec_ac = eigh(add(a, scale(c, ea)));
      const SpectralDecomposition dec_bc = eigh(add(b, scale(c, eb)));
      track(dec_ac);
      track(dec_bc);
      const EinsteinTensor t_pert = dti_apply(dec_ac, dec_bc, dd1, x);
      diff_acc[ci] += std::pow(norm(subtract(t_pert, t_base), rho), r);
      da_acc[ci] += std::pow(norm(scale(c, ea), rho), r);
      db_acc[ci] += std::pow(norm(scale(c, eb), rho), r);
    }
  }

  ConvergenceReport report;
  report.r = r;
  const Kernel dd2 = Kernel::second_divided_difference(f);
  report.omega = max_abs_on_grid(dd2, eig_lo, eig_hi, 25);
  const double norm_x = norm(x, rho);
  const double two_r = std::pow(2.0, r);
  report.monotone_nonincreasing = true;
  report.dominated = true;
  for (size_t ci = 0; ci < nc; ++ci) {
    ConvergenceRow row;
    row.c = c_sequence[ci];
    row.mean_diff_r = diff_acc[ci] / n_samples;
    row.bound_r = two_r * std::pow(report.omega, r) * std::pow(norm_x, r) *
                  (da_acc[ci] / n_samples + db_acc[ci] / n_samples);
    if (ci > 0 &&
        row.mean_diff_r > report.rows.back().mean_diff_r * (1.0 + 1e-12)) {
      report.monotone_nonincreasing = false;
    }
    if (row.mean_diff_r > row.bound_r * (1.0 + 1e-12)) report.dominated = false;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace dti
