#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace noma {

/// Gaussian tail probability Q(x) = P(N(0,1) > x).
///
/// Every error-probability expression in the library goes through this one
/// primitive, so the Q and erfc forms of the same quantity cannot drift apart.
inline double q_function(double x) {
  return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

inline double factorial(int n) {
  if (n < 0) throw std::domain_error("factorial of negative integer");
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

// L! / ((l-1)! (L-l)!), the multiplicity of the l-th order statistic.
inline double order_statistic_coefficient(int l, int num_users) {
  if (l < 1 || l > num_users) throw std::out_of_range("user index out of range");
  return factorial(num_users) / (factorial(l - 1) * factorial(num_users - l));
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace noma
