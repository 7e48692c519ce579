#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "noma/asymptotic.hpp"
#include "noma/optimizer.hpp"

namespace {

noma::PepCurve power_law(double c, double d, std::vector<double> snrs) {
  noma::PepCurve curve;
  for (double s : snrs) curve.points.push_back({s, c * std::pow(noma::db_to_linear(s), -d), noma::PepMethod::quadrature});
  return curve;
}

std::vector<double> finite_differences(const noma::DiversityTable& t) {
  std::vector<double> out;
  for (const auto& e : t.estimates)
    if (e.method == noma::DiversityMethod::finite_difference) out.push_back(e.d_eff);
  return out;
}

}  // namespace

TEST(ChernoffConditional, Examples) {
  EXPECT_EQ(noma::chernoff_conditional(0.0, 2.0, 1.0), 1.0);
  EXPECT_EQ(noma::chernoff_conditional(5.0, 0.0, 1.0), 1.0);
  EXPECT_NEAR(noma::chernoff_conditional(1.0, 2.0, 1.0), 0.36787944117144233, 1e-16);
  EXPECT_THROW(noma::chernoff_conditional(1.0, 1.0, 0.0), std::domain_error);
  EXPECT_THROW(noma::chernoff_conditional(-1.0, 1.0, 1.0), std::domain_error);
}

TEST(ChernoffConditional, DominatesConditionalPep) {
  const auto cons = noma::qpsk_constellation();
  const std::vector<double> alpha{0.7, 0.2, 0.1};
  int checked = 0;
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = 0; b < 4; ++b)
      for (std::size_t rx = 1; rx < 4; ++rx)
        for (double nv : {1e-3, 1e-2, 0.1, 1.0})
          for (double mag : {0.0, 0.05, 0.3, 1.0, 2.5}) {
            const noma::ErrorHypothesis h{1, cons.point(0), cons.point(rx), {cons.point(a), cons.point(b)}, {}};
            const double beta = noma::beta_factor(h, alpha, 1.0);
            if (beta < 0.0) continue;
            const double gamma = mag * mag / nv;
            EXPECT_GE(noma::chernoff_conditional(gamma, beta, std::norm(h.delta())),
                      noma::conditional_pep(h, alpha, 1.0, nv, mag));
            ++checked;
          }
  EXPECT_GE(checked, 500);
}

TEST(ChernoffAverage, SingleUserExponentialIntegral) {
  for (double gb : {0.5, 10.0, 1e4})
    for (double beta : {0.3, 2.0}) {
      const double b = beta * beta / 8.0;  // |delta|^2 = 2
      EXPECT_NEAR(noma::chernoff_average(1, 1, gb, beta, 2.0), 1.0 / (1.0 + gb * b), 1e-10 / (1.0 + gb * b));
    }
}

TEST(PepUpperBound, SingleUserForms) {
  const double gb = 1e3, beta = 1.0, d2 = 2.0;
  const double r = 4.0 * d2 / (beta * beta);
  EXPECT_NEAR(noma::pep_upper_bound_rederived(1, 1, gb, beta, d2), (r - r * r / gb) / gb, 1e-15);
  EXPECT_NEAR(noma::pep_upper_bound(1, 1, gb, beta, d2), (r - r / gb) / gb, 1e-15);
  // Two leading terms of the expansion of 1 / (1 + gb / r).
  const double exact = 1.0 / (1.0 + gb / r);
  EXPECT_NEAR(noma::pep_upper_bound_rederived(1, 1, gb, beta, d2), exact, 2.0 * std::pow(r / gb, 3));
}

TEST(PepUpperBound, SlopeApproachesMinusL) {
  for (int L = 1; L <= 4; ++L)
    for (int l = 1; l <= L; ++l) {
      const double lo = noma::pep_upper_bound_rederived(l, L, 1e6, 1.0, 2.0);
      const double hi = noma::pep_upper_bound_rederived(l, L, 1e7, 1.0, 2.0);
      EXPECT_NEAR(std::log10(hi) - std::log10(lo), -static_cast<double>(l), 0.05) << "l=" << l << " L=" << L;
    }
}

TEST(PepUpperBound, VanishesAtHighSnr) {
  for (int l = 1; l <= 3; ++l) {
    EXPECT_LT(noma::pep_upper_bound_rederived(l, 3, 1e12, 1.0, 2.0), 1e-10);
    EXPECT_LT(std::abs(noma::pep_upper_bound(l, 3, 1e12, 1.0, 2.0)), 1e-10);
  }
}

TEST(PepUpperBound, Errors) {
  EXPECT_THROW(noma::pep_upper_bound(1, 2, 0.0, 1.0, 1.0), std::domain_error);
  EXPECT_THROW(noma::pep_upper_bound(3, 2, 1.0, 1.0, 1.0), std::out_of_range);
  EXPECT_THROW(noma::pep_upper_bound_rederived(1, 2, 1.0, 0.0, 1.0), std::domain_error);
  EXPECT_THROW(noma::pep_upper_bound_rederived(1, 2, 1.0, 1.0, 0.0), std::domain_error);
}

// The expansion is only valid once gamma_bar dominates 4|delta|^2/beta^2;
// for the default allocation that holds for every hypothesis from 30 dB.
TEST(PepUpperBound, DominatesQuadratureFromThirtyDb) {
  const auto cons = noma::qpsk_constellation();
  const std::vector<double> alpha{0.7, 0.2, 0.1};
  for (double snr = 30.0; snr <= 50.0; snr += 5.0) {
    const auto m = noma::channel_at_snr(3, 1.0, 1.0, snr);
    const double gb = 2.0 * m.sigma_h_sq / m.noise_var;
    for (int l = 1; l <= 3; ++l)
      for (std::size_t rx = 1; rx < 4; ++rx)
        for (std::size_t t = 0; t < 16; ++t) {
          std::vector<noma::Symbol> inter;
          for (int k = 0; k < 3 - l; ++k) inter.push_back(cons.point((t >> (2 * k)) & 3));
          const noma::ErrorHypothesis h{l, cons.point(0), cons.point(rx), inter, std::vector<noma::Symbol>(l - 1)};
          const double beta = noma::beta_factor(h, alpha, 1.0);
          if (beta <= 0.0) continue;
          const double d2 = std::norm(h.delta());
          EXPECT_GE(noma::pep_upper_bound_rederived(l, 3, gb, beta, d2),
                    noma::pep_quadrature(l, beta, noma::upsilon_factor(m.noise_var, h.delta()), m))
              << "snr=" << snr << " l=" << l;
        }
  }
}

TEST(PepUpperBound, SmallBetaBreaksExpansionAtTwentyDb) {
  // Far user, delta = 2a, interference nearly cancels: beta = 0.146, 4|delta|^2/beta^2 = 373.
  const auto cons = noma::qpsk_constellation();
  const std::vector<double> alpha{0.7, 0.2, 0.1};
  const noma::ErrorHypothesis h{1, cons.point(0), cons.point(1), {cons.point(1), cons.point(1)}, {}};
  const double beta = noma::beta_factor(h, alpha, 1.0);
  ASSERT_GT(beta, 0.0);
  ASSERT_LT(beta, 0.3);
  const auto m = noma::channel_at_snr(3, 1.0, 1.0, 20.0);
  const double gb = 2.0 * m.sigma_h_sq / m.noise_var;
  const double d2 = std::norm(h.delta());
  const double q = noma::pep_quadrature(1, beta, noma::upsilon_factor(m.noise_var, h.delta()), m);
  EXPECT_LT(noma::pep_upper_bound_rederived(1, 3, gb, beta, d2), q);
  EXPECT_GE(noma::chernoff_average(1, 3, gb, beta, d2), q);
}

TEST(EffectiveDiversity, ExactPowerLaws) {
  const auto one = noma::effective_diversity(power_law(1.0, 1.0, {0, 10, 20, 30}));
  for (double d : finite_differences(one)) EXPECT_NEAR(d, 1.0, 1e-12);
  const auto three = noma::effective_diversity(power_law(0.2, 3.0, {10, 40, 100, 300}));
  for (double d : finite_differences(three)) EXPECT_NEAR(d, 3.0, 1e-9);
  double last_ratio = 0.0;
  for (const auto& e : three.estimates)
    if (e.method == noma::DiversityMethod::ratio_form) last_ratio = e.d_eff;
  EXPECT_NEAR(last_ratio, 3.0 + std::log10(5.0) / 30.0, 1e-12);  // -log10(c) / log10(gamma) residue
}

TEST(EffectiveDiversity, RatioFormUsesGammaBarOffset) {
  auto c = power_law(1.0, 2.0, {10, 20});
  c.gamma_bar_offset_db = 10.0;  // gamma_bar = 10 * SNR
  const auto t = noma::effective_diversity(c);
  EXPECT_NEAR(t.estimates[0].d_eff, 2.0 * 10.0 / 20.0, 1e-12);
}

TEST(EffectiveDiversity, SkipsZeroAndUnitGammaBar) {
  noma::PepCurve c;
  c.points = {{0.0, 0.1, noma::PepMethod::simulated}, {10.0, 0.0, noma::PepMethod::simulated},
              {20.0, 1e-3, noma::PepMethod::simulated}, {30.0, 1e-4, noma::PepMethod::simulated}};
  const auto t = noma::effective_diversity(c);
  EXPECT_EQ(t.skipped_snr_db, (std::vector<double>{0.0, 10.0}));
  EXPECT_EQ(finite_differences(t), (std::vector<double>{1.0}));
}

TEST(EffectiveDiversity, Errors) {
  EXPECT_THROW(noma::effective_diversity(power_law(1, 1, {10})), std::invalid_argument);
  EXPECT_THROW(noma::effective_diversity(power_law(1, 1, {10, 10})), std::invalid_argument);
  EXPECT_THROW(noma::effective_diversity(power_law(1, 1, {20, 10})), std::invalid_argument);
}

TEST(EffectiveDiversity, QuadratureCurvesClimbTowardUserIndex) {
  const auto cons = noma::qpsk_constellation();
  const std::vector<double> alpha{0.7, 0.2, 0.1};
  for (int l = 1; l <= 3; ++l) {
    noma::PepCurve c;
    c.user = l;
    for (double snr = 20.0; snr <= 40.0; snr += 5.0) {
      const auto m = noma::channel_at_snr(3, 1.0, 1.0, snr);
      const auto t = noma::pairwise_pep_table(l, alpha, 1.0, m, cons, noma::PerfectSic{});
      c.points.push_back({snr, t.mean(), noma::PepMethod::quadrature});
    }
    const auto d = finite_differences(noma::effective_diversity(c));
    for (std::size_t i = 1; i < d.size(); ++i) EXPECT_GE(d[i], d[i - 1] - 1e-9) << "user " << l;
    EXPECT_NEAR(d.back(), l, 0.25) << "user " << l;
  }
}
