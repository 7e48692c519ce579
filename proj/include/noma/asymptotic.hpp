#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "noma/channel.hpp"
#include "noma/errors.hpp"
#include "noma/pep.hpp"
#include "noma/quadrature.hpp"
#include "noma/special.hpp"

namespace noma {

/// Chernoff bound on the conditional PEP, exp(-gamma beta^2 / (4 |delta|^2)),
/// with gamma = |h|^2 / sigma_n^2 the instantaneous SNR. Bounds Q only where
/// the Q argument is non-negative (beta >= 0).
inline double chernoff_conditional(double gamma, double beta, double delta_abs_sq) {
  if (!(delta_abs_sq > 0.0)) throw std::domain_error("|delta|^2 must be positive");
  if (gamma < 0.0) throw std::domain_error("gamma must be non-negative");
  return std::exp(-gamma * beta * beta / (4.0 * delta_abs_sq));
}

namespace detail {

inline void check_bound_args(int l, int num_users, double gamma_bar, double beta, double delta_abs_sq) {
  (void)order_statistic_coefficient(l, num_users);
  if (!(gamma_bar > 0.0)) throw std::domain_error("gamma_bar must be positive");
  if (!(delta_abs_sq > 0.0)) throw std::domain_error("|delta|^2 must be positive");
  if (beta == 0.0) throw std::domain_error("bound undefined for beta = 0");
}

// Shared double sum over j and k. With `rederived` the (4|delta|^2/beta^2)
// factor is raised to z - k + 1, otherwise it enters linearly.
inline double bound_double_sum(int l, int num_users, double gamma_bar, double beta, double delta_abs_sq,
                               bool rederived) {
  check_bound_args(l, num_users, gamma_bar, beta, delta_abs_sq);
  const long double ratio = 4.0L * delta_abs_sq / (static_cast<long double>(beta) * beta);
  const long double gb = gamma_bar;
  long double sum = 0.0L;
  for (int j = 0; j <= l - 1; ++j) {
    const int z = j + num_users - l + 1;
    for (int k = 0; k <= z; ++k) {
      const int sign = (j + z + k) % 2 == 0 ? 1 : -1;
      const long double factor = rederived ? std::pow(ratio, static_cast<long double>(z - k + 1)) : ratio;
      sum += static_cast<long double>(binomial(l - 1, j) * binomial(z, k)) * sign *
             std::pow(gb, static_cast<long double>(k - z)) * std::tgamma(static_cast<long double>(z - k + 1)) *
             factor;
    }
  }
  return static_cast<double>(order_statistic_coefficient(l, num_users) / gb * sum);
}

}  // namespace detail

/// High-SNR PEP bound as published: the (4|delta|^2/beta^2) factor carries
/// no exponent. Dimensionally inconsistent across k; kept for comparison.
inline double pep_upper_bound(int l, int num_users, double gamma_bar, double beta, double delta_abs_sq) {
  return detail::bound_double_sum(l, num_users, gamma_bar, beta, delta_abs_sq, false);
}

/// High-SNR PEP bound from term-by-term integration of the linearised
/// ordered-SNR density, (4|delta|^2/beta^2)^(z-k+1). Used for diversity work.
/// Evaluated in extended precision: the j-sum cancels its leading orders.
inline double pep_upper_bound_rederived(int l, int num_users, double gamma_bar, double beta,
                                        double delta_abs_sq) {
  return detail::bound_double_sum(l, num_users, gamma_bar, beta, delta_abs_sq, true);
}

/// Chernoff bound averaged over the ordered instantaneous SNR by quadrature.
/// Reference value for both closed-form bounds.
inline double chernoff_average(int l, int num_users, double gamma_bar, double beta, double delta_abs_sq) {
  detail::check_bound_args(l, num_users, gamma_bar, beta, delta_abs_sq);
  const double b = beta * beta / (4.0 * delta_abs_sq);
  const double rate = b + (num_users - l + 1) / gamma_bar;  // slowest decay of the integrand
  const double upper = 80.0 / rate;
  const double knee = 1.0 / (b + 1.0 / gamma_bar);
  std::vector<double> breaks{0.0};
  for (double k : {0.1, 1.0, 10.0})
    if (k * knee < upper) breaks.push_back(k * knee);
  breaks.push_back(upper);
  auto f = [&](double g) { return ordered_snr_pdf(l, num_users, gamma_bar, g) * chernoff_conditional(g, beta, delta_abs_sq); };
  const auto r = integrate_adaptive(f, breaks, 1e-300, 1e-10);
  if (!r.converged) throw NumericalError("Chernoff average quadrature did not converge");
  return r.value;
}

enum class DiversityMethod { ratio_form, finite_difference };

inline const char* to_string(DiversityMethod m) {
  return m == DiversityMethod::ratio_form ? "ratio_form" : "finite_difference";
}

struct DiversityEstimate {
  double snr_db = 0.0;
  double d_eff = 0.0;
  DiversityMethod method = DiversityMethod::ratio_form;
};

struct PepCurve {
  int user = 1;
  std::vector<PepPoint> points;
  double gamma_bar_offset_db = 0.0;  // 10 log10(gamma_bar / SNR), i.e. 10 log10(2 sigma_h^2)
};

struct DiversityTable {
  std::vector<DiversityEstimate> estimates;
  std::vector<double> skipped_snr_db;  // pep == 0, or gamma_bar == 1 for the ratio form
};

/// Effective diversity of a PEP curve. The ratio form is -log PEP / log
/// gamma_bar per point; the finite difference is the local log-log slope
/// between consecutive points, reported at the upper point.
inline DiversityTable effective_diversity(const PepCurve& curve) {
  const auto& pts = curve.points;
  if (pts.size() < 2) throw std::invalid_argument("diversity needs at least two curve points");
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (!(pts[i].snr_db > pts[i - 1].snr_db)) throw std::invalid_argument("SNR grid must be strictly increasing");

  DiversityTable out;
  for (const auto& p : pts) {
    const double log_gamma = (p.snr_db + curve.gamma_bar_offset_db) / 10.0;  // log10 gamma_bar
    if (!(p.pep > 0.0) || log_gamma == 0.0) {
      out.skipped_snr_db.push_back(p.snr_db);
      continue;
    }
    out.estimates.push_back({p.snr_db, -std::log10(p.pep) / log_gamma, DiversityMethod::ratio_form});
  }
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (!(pts[i].pep > 0.0) || !(pts[i - 1].pep > 0.0)) continue;
    const double slope = (std::log10(pts[i].pep) - std::log10(pts[i - 1].pep)) / ((pts[i].snr_db - pts[i - 1].snr_db) / 10.0);
    out.estimates.push_back({pts[i].snr_db, -slope, DiversityMethod::finite_difference});
  }
  return out;
}

}  // namespace noma
