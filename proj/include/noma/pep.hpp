#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "noma/channel.hpp"
#include "noma/constellation.hpp"
#include "noma/errors.hpp"
#include "noma/quadrature.hpp"
#include "noma/special.hpp"

namespace noma {

/// One conditioning of the pairwise error event of user `user` (1-based).
///
/// `interferers` are the symbols of the weaker users user+1..L, which user
/// `user` treats as noise. `prior_deltas` are the SIC residuals
/// x_k - x_hat_k of the stronger users 1..user-1 (zero when cancelled).
struct ErrorHypothesis {
  int user = 1;
  Symbol tx;
  Symbol detected;
  std::vector<Symbol> interferers;
  std::vector<Symbol> prior_deltas;

  Symbol delta() const { return tx - detected; }

  void validate(std::size_t num_users) const {
    if (user < 1 || static_cast<std::size_t>(user) > num_users)
      throw std::out_of_range("hypothesis user index out of range");
    if (tx == detected) throw std::invalid_argument("tx and detected symbols must differ");
    if (interferers.size() != num_users - static_cast<std::size_t>(user))
      throw std::invalid_argument("interferer list must cover users l+1..L");
    if (prior_deltas.size() != static_cast<std::size_t>(user - 1))
      throw std::invalid_argument("prior delta list must cover users 1..l-1");
  }
};

enum class PepMethod { closed_form, quadrature, chernoff_bound, simulated };

inline const char* to_string(PepMethod m) {
  switch (m) {
    case PepMethod::closed_form: return "closed_form";
    case PepMethod::quadrature: return "quadrature";
    case PepMethod::chernoff_bound: return "chernoff_bound";
    case PepMethod::simulated: return "simulated";
  }
  return "?";
}

struct PepPoint {
  double snr_db = 0.0;
  double pep = 0.0;
  PepMethod method = PepMethod::quadrature;
};

/// Decision-metric numerator of user l's pairwise event: the coefficient of
/// |h_l| in the argument of Q. Covers the own-signal term, the weaker-user
/// interference and the residual of imperfect SIC.
inline double beta_factor(const ErrorHypothesis& h, std::span<const double> alpha, double power) {
  h.validate(alpha.size());
  const auto l = static_cast<std::size_t>(h.user);
  const Symbol d = h.delta();
  Symbol interference{};
  for (std::size_t n = l; n < alpha.size(); ++n)
    interference += std::sqrt(alpha[n] * power) * std::conj(h.interferers[n - l]);
  Symbol residual{};
  for (std::size_t q = 0; q + 1 < l; ++q)
    residual += std::sqrt(alpha[q] * power) * std::conj(h.prior_deltas[q]);
  return std::sqrt(alpha[l - 1] * power) * std::norm(d) +
         2.0 * ((d * interference).real() + (d * residual).real());
}

/// Far-user special case of beta_factor.
inline double gamma_factor(const ErrorHypothesis& h, std::span<const double> alpha, double power) {
  if (h.user != 1) throw std::invalid_argument("gamma_factor is defined for user 1 only");
  return beta_factor(h, alpha, power);
}

// Noise scale of the pairwise metric, sqrt(2) sigma_n |delta|.
inline double upsilon_factor(double noise_var, Symbol delta) {
  return std::sqrt(2.0 * noise_var) * std::abs(delta);
}

inline double conditional_pep(const ErrorHypothesis& h, std::span<const double> alpha, double power,
                              double noise_var, double channel_mag) {
  if (channel_mag < 0.0) throw std::domain_error("channel magnitude must be non-negative");
  if (!(noise_var > 0.0)) throw std::domain_error("noise variance must be positive");
  const double beta = beta_factor(h, alpha, power);
  return q_function(channel_mag * beta / upsilon_factor(noise_var, h.delta()));
}

/// Closed-form far-user PEP, 1/2 (1 - G s / sqrt(2 z^2 + G^2 s^2)).
///
/// `sigma_h` here is the root mean square of the far user's channel
/// magnitude, i.e. sqrt(E|h_(1)|^2); for L i.i.d. users that is
/// sqrt(2 sigma_h^2 / L) in ChannelModel units.
inline double pep_user1_closed(double gamma, double zeta, double sigma_h) {
  if (!(zeta > 0.0)) throw std::domain_error("zeta must be positive");
  if (!(sigma_h > 0.0)) throw std::domain_error("sigma_h must be positive");
  const double gs = gamma * sigma_h;
  return 0.5 * (1.0 - gs / std::sqrt(2.0 * zeta * zeta + gs * gs));
}

/// Closed-form l-th user PEP exactly as published (binomial sum over j with
/// weights [L-l+j+1]). Not normalised: its ratio to pep_quadrature is the
/// constant 2 / sigma_h^2, see the consistency report.
inline double pep_user_l_closed(int l, int num_users, double beta, double upsilon, double sigma_h) {
  if (!(upsilon > 0.0)) throw std::domain_error("upsilon must be positive");
  if (!(sigma_h > 0.0)) throw std::domain_error("sigma_h must be positive");
  const double coeff = order_statistic_coefficient(l, num_users) / (sigma_h * sigma_h);
  double sum = 0.0;
  for (int j = 0; j <= l - 1; ++j) {
    const double c = num_users - l + j + 1;
    const double sign = ((2 * (l - 1) - j) % 2 == 0) ? 1.0 : -1.0;
    const double bs = beta * sigma_h;
    sum += binomial(l - 1, j) * sign / c * (1.0 - bs / std::sqrt(bs * bs + c * upsilon * upsilon));
  }
  return coeff * sum;
}

namespace detail {

// Absolute accuracy demanded of the unconditional PEP; the relative target
// keeps deep high-SNR tails accurate for slope estimation.
inline constexpr double kQuadratureAbsTol = 1e-10;
inline constexpr double kQuadratureRelTol = 1e-10;

}  // namespace detail

/// Unconditional PEP of user l: integral over the ordered magnitude density
/// of Q(beta w / upsilon). Authoritative evaluator for every closed form.
inline double pep_quadrature(int l, double beta, double upsilon, const ChannelModel& model) {
  model.validate();
  (void)order_statistic_coefficient(l, model.num_users);
  if (!(upsilon > 0.0)) throw std::domain_error("upsilon must be positive");
  if (!std::isfinite(beta)) throw std::domain_error("beta must be finite");

  const double sigma = std::sqrt(model.sigma_h_sq);
  // Density tail beyond `upper` carries less than exp(-60) of the mass.
  const double upper = sigma * std::sqrt(120.0 / (model.num_users - l + 1));
  std::vector<double> breaks{0.0};
  if (beta != 0.0) {
    const double scale = upsilon / std::abs(beta);  // Q argument equals 1 here
    for (double k : {0.25, 1.0, 4.0, 16.0})
      if (k * scale < upper) breaks.push_back(k * scale);
  }
  breaks.push_back(upper);

  auto integrand = [&](double w) {
    return ordered_magnitude_pdf(l, model, w) * q_function(beta * w / upsilon);
  };
  const auto r = integrate_adaptive(integrand, breaks, 1e-300, detail::kQuadratureRelTol);
  if (!r.converged || !std::isfinite(r.value) || r.error > detail::kQuadratureAbsTol)
    throw NumericalError("PEP quadrature did not converge (error estimate " + std::to_string(r.error) + ")");
  return std::clamp(r.value, 0.0, 1.0);
}

/// A prior-user SIC residual pattern (delta_1..delta_{l-1}) with its weight.
struct DeltaPattern {
  std::vector<Symbol> deltas;
  double weight = 0.0;
};
using SicWeights = std::vector<DeltaPattern>;

struct PerfectSic {};
struct PatternSic {
  std::vector<Symbol> deltas;  // one per stronger user
};
struct WeightedSic {
  SicWeights weights;  // for the user being evaluated
  // Optional tables conditioned on the symbols of users l..L, indexed by
  // tx + M * (interferer code). An empty table falls back to `weights`.
  std::vector<SicWeights> by_context;
};
using SicMode = std::variant<PerfectSic, PatternSic, WeightedSic>;

inline constexpr std::size_t kEnumerationCap = 1'000'000;

/// PEP of user l for the pair (tx, rx), averaged uniformly over every symbol
/// tuple of the weaker users and, within each tuple, over SIC residual
/// patterns per `sic`.
inline double average_pep(int l, Symbol tx, Symbol rx, const Constellation& constellation,
                          std::span<const double> alpha, double power, const ChannelModel& model,
                          const SicMode& sic) {
  const auto num_users = alpha.size();
  if (static_cast<std::size_t>(model.num_users) != num_users)
    throw std::invalid_argument("alpha length must equal the number of users");
  if (l < 1 || static_cast<std::size_t>(l) > num_users) throw std::out_of_range("user index out of range");
  if (tx == rx) throw std::invalid_argument("average_pep needs tx != rx");

  const std::size_t m = constellation.size();
  const std::size_t weaker = num_users - static_cast<std::size_t>(l);
  std::size_t tuples = 1;
  for (std::size_t i = 0; i < weaker; ++i) {
    if (tuples > kEnumerationCap / m)
      throw EnumerationCapError("interferer enumeration exceeds 1e6 tuples; use the simulator");
    tuples *= m;
  }

  SicWeights patterns;
  const std::vector<SicWeights>* by_context = nullptr;
  std::size_t tx_index = 0;
  if (std::holds_alternative<PerfectSic>(sic)) {
    patterns.push_back({std::vector<Symbol>(static_cast<std::size_t>(l - 1)), 1.0});
  } else if (const auto* p = std::get_if<PatternSic>(&sic)) {
    patterns.push_back({p->deltas, 1.0});
  } else {
    const auto& w = std::get<WeightedSic>(sic);
    patterns = w.weights;
    if (patterns.empty()) throw std::invalid_argument("weighted SIC mode needs a non-empty weight table");
    if (!w.by_context.empty()) {
      if (w.by_context.size() != m * tuples) throw std::invalid_argument("context weight table has the wrong size");
      const auto pts = constellation.points();
      const auto it = std::find(pts.begin(), pts.end(), tx);
      if (it == pts.end()) throw std::invalid_argument("context weights need tx to be a constellation point");
      tx_index = static_cast<std::size_t>(it - pts.begin());
      by_context = &w.by_context;
    }
  }

  const double upsilon = upsilon_factor(model.noise_var, tx - rx);
  std::map<double, double> memo;  // beta -> pep; many tuples share a beta
  ErrorHypothesis h{l, tx, rx, std::vector<Symbol>(weaker), {}};
  double sum = 0.0;
  for (std::size_t t = 0; t < tuples; ++t) {
    std::size_t code = t;
    for (std::size_t i = 0; i < weaker; ++i) {
      h.interferers[i] = constellation.point(code % m);
      code /= m;
    }
    const SicWeights* table = &patterns;
    if (by_context && !(*by_context)[tx_index + m * t].empty()) table = &(*by_context)[tx_index + m * t];
    double inner = 0.0;
    double total_weight = 0.0;
    for (const auto& pattern : *table) {
      h.prior_deltas = pattern.deltas;
      const double beta = beta_factor(h, alpha, power);
      auto it = memo.find(beta);
      if (it == memo.end()) it = memo.emplace(beta, pep_quadrature(l, beta, upsilon, model)).first;
      inner += pattern.weight * it->second;
      total_weight += pattern.weight;
    }
    sum += inner / total_weight;
  }
  return sum / static_cast<double>(tuples);
}

}  // namespace noma
