#pragma once

// Digamma and its derivatives.  Arguments are shifted up by the recurrence
// w^(k)(x) = w^(k)(x+1) - (-1)^k k! x^(-k-1) until the Bernoulli asymptotic
// series applies.  Relative accuracy is 1e-10 or better for x in
// [1e-3, 1e3] and orders up to 20.

namespace dti {

// k-th derivative of digamma for k >= 1; digamma itself for k = 0.
// Throws std::domain_error for x <= 0 and std::invalid_argument for
// k outside [0, 20].
double polygamma(int k, double x);

inline double digamma(double x) { return polygamma(0, x); }

}  // namespace dti
