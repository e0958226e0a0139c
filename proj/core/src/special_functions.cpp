#include "dti/special_functions.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace dti {

namespace {

// B_2, B_4, ..., B_20.
constexpr double kBernoulli[] = {
    1.0 / 6.0,       -1.0 / 30.0,     1.0 / 42.0,      -1.0 / 30.0,
    5.0 / 66.0,      -691.0 / 2730.0, 7.0 / 6.0,       -3617.0 / 510.0,
    43867.0 / 798.0, -174611.0 / 330.0};
constexpr int kNumBernoulli = 10;

// Shift until the asymptotic series at t >= 16 meets the accuracy target.
constexpr double kShiftThreshold = 16.0;
constexpr int kMaxOrder = 20;

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Asymptotic value of the k-th digamma derivative at large t.
double asymptotic(int k, double t) {
  const double inv = 1.0 / t;
  const double inv2 = inv * inv;
  if (k == 0) {
    double sum = std::log(t) - 0.5 * inv;
    double p = inv2;
    for (int j = 1; j <= kNumBernoulli; ++j) {
      sum -= kBernoulli[j - 1] * p / (2.0 * j);
      p *= inv2;
    }
    return sum;
  }
  double sum = factorial(k - 1) * std::pow(inv, k) +
               0.5 * factorial(k) * std::pow(inv, k + 1);
  double p = std::pow(inv, k + 2);
  for (int j = 1; j <= kNumBernoulli; ++j) {
    // (2j + k - 1)! / (2j)! as a running product of k - 1 factors.
    double ratio = 1.0;
    for (int i = 2 * j + 1; i <= 2 * j + k - 1; ++i) ratio *= i;
    sum += kBernoulli[j - 1] * ratio * p;
    p *= inv2;
  }
  return (k % 2 == 0) ? -sum : sum;
}

}  // namespace

double polygamma(int k, double x) {
  if (k < 0 || k > kMaxOrder) {
    throw std::invalid_argument(
        fmt::format("polygamma: order must be in [0, {}], got {}", kMaxOrder, k));
  }
  if (!(x > 0.0)) {
    throw std::domain_error(
        fmt::format("polygamma: argument must be positive, got {}", x));
  }
  // Recurrence sum picked up while shifting x upward.
  double shifted = 0.0;
  double t = x;
  while (t < kShiftThreshold) {
    shifted += std::pow(t, -(k + 1));
    t += 1.0;
  }
  const double sign = (k % 2 == 0) ? -1.0 : 1.0;  // (-1)^(k+1)
  return asymptotic(k, t) + sign * factorial(k) * shifted;
}

}  // namespace dti
