#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/random/normal_distribution.hpp>

#include "noma/parallel.hpp"
#include "noma/special.hpp"

namespace noma {

/// L i.i.d. Rayleigh downlink channels, h ~ CN(0, 2 sigma_h^2), with AWGN of
/// total complex variance noise_var.
struct ChannelModel {
  int num_users = 1;
  double sigma_h_sq = 1.0;
  double noise_var = 1.0;

  void validate() const {
    if (num_users < 1) throw std::domain_error("num_users must be >= 1");
    if (!(sigma_h_sq > 0.0) || !std::isfinite(sigma_h_sq))
      throw std::domain_error("sigma_h_sq must be positive");
    if (!(noise_var > 0.0) || !std::isfinite(noise_var))
      throw std::domain_error("noise_var must be positive");
  }
};

/// Channel model whose noise variance realises SNR = P / noise_var.
inline ChannelModel channel_at_snr(int num_users, double sigma_h_sq, double power, double snr_db) {
  ChannelModel m{num_users, sigma_h_sq, power / db_to_linear(snr_db)};
  m.validate();
  return m;
}

// Rayleigh density and CDF with parameter sigma^2: f(x) = (x/s2) exp(-x^2/2s2).
inline double rayleigh_pdf(double sigma_sq, double x) {
  if (x < 0.0) return 0.0;
  return x / sigma_sq * std::exp(-x * x / (2.0 * sigma_sq));
}

inline double rayleigh_cdf(double sigma_sq, double x) {
  if (x <= 0.0) return 0.0;
  return -std::expm1(-x * x / (2.0 * sigma_sq));
}

/// Density of |h_(l)|, the l-th smallest of L Rayleigh magnitudes.
inline double ordered_magnitude_pdf(int l, const ChannelModel& model, double omega) {
  model.validate();
  const int num_users = model.num_users;
  const double coeff = order_statistic_coefficient(l, num_users);
  if (omega < 0.0) throw std::domain_error("omega must be non-negative");
  const double x = omega * omega / (2.0 * model.sigma_h_sq);
  const double cdf = -std::expm1(-x);
  // (1 - F)^(L-l) folded into the exponential of f.
  return coeff * omega / model.sigma_h_sq * std::exp(-x * (num_users - l + 1)) *
         std::pow(cdf, l - 1);
}

/// Density of the l-th ordered instantaneous SNR when each unordered SNR is
/// exponential with mean gamma_bar. Equal to the binomially expanded sum over
/// j of C(l-1, j) (-1)^j exp(-(L-l+1+j) gamma / gamma_bar); evaluated in the
/// factored form because the sum cancels for gamma << gamma_bar.
inline double ordered_snr_pdf(int l, int num_users, double gamma_bar, double gamma) {
  if (!(gamma_bar > 0.0)) throw std::domain_error("gamma_bar must be positive");
  if (gamma < 0.0) throw std::domain_error("gamma must be non-negative");
  const double coeff = order_statistic_coefficient(l, num_users);
  const double x = gamma / gamma_bar;
  return coeff / gamma_bar * std::exp(-x * (num_users - l + 1)) * std::pow(-std::expm1(-x), l - 1);
}

struct OrderedGains {
  std::vector<double> gains;  // ascending; user l owns gains[l-1]
};

/// Fills `out` (size L) with complex gains sorted by ascending magnitude.
/// Ties keep draw order.
template <class Engine>
void draw_ordered_channels(const ChannelModel& model, Engine& rng, std::span<std::complex<double>> out) {
  boost::random::normal_distribution<double> normal(0.0, std::sqrt(model.sigma_h_sq));
  for (auto& g : out) {
    const double re = normal(rng);
    const double im = normal(rng);
    g = {re, im};
  }
  // Insertion sort: stable and fastest for a handful of users.
  for (std::size_t i = 1; i < out.size(); ++i) {
    const auto g = out[i];
    std::size_t j = i;
    for (; j > 0 && std::norm(out[j - 1]) > std::norm(g); --j) out[j] = out[j - 1];
    out[j] = g;
  }
}

template <class Engine>
std::vector<std::complex<double>> draw_ordered_channels(const ChannelModel& model, Engine& rng) {
  std::vector<std::complex<double>> h(static_cast<std::size_t>(model.num_users));
  draw_ordered_channels(model, rng, std::span<std::complex<double>>(h));
  return h;
}

template <class Engine>
OrderedGains sample_ordered_channels(const ChannelModel& model, Engine& rng) {
  OrderedGains out;
  for (const auto& g : draw_ordered_channels(model, rng)) out.gains.push_back(std::abs(g));
  return out;
}

inline OrderedGains sample_ordered_channels(const ChannelModel& model, std::uint64_t seed) {
  model.validate();
  Rng rng = make_stream(seed, 0);
  return sample_ordered_channels(model, rng);
}

}  // namespace noma
