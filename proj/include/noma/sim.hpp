#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "noma/channel.hpp"
#include "noma/constellation.hpp"
#include "noma/errors.hpp"
#include "noma/parallel.hpp"
#include "noma/pep.hpp"

namespace noma {

/// Downlink NOMA system: L users, power split alpha (descending, sums to 1),
/// total power P, Rayleigh channels with E|h|^2 = 2 sigma_h^2.
struct SystemConfig {
  std::vector<double> alpha{0.7, 0.2, 0.1};
  double power = 1.0;
  double sigma_h_sq = 1.0;
  Constellation constellation = qpsk_constellation(1.0);
  std::vector<double> snr_grid_db;
  std::vector<std::size_t> fixed_symbols;  // empty: uniform random symbols

  int num_users() const { return static_cast<int>(alpha.size()); }

  ChannelModel channel_at(double snr_db) const {
    return channel_at_snr(num_users(), sigma_h_sq, power, snr_db);
  }

  void validate() const {
    if (alpha.empty()) throw ConfigError("alpha must name at least one user");
    double sum = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      if (!(alpha[i] > 0.0)) throw ConfigError("power coefficients must be positive");
      if (i > 0 && !(alpha[i] < alpha[i - 1]))
        throw ConfigError("power coefficients must be strictly descending");
      sum += alpha[i];
    }
    if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("power coefficients must sum to 1");
    if (!(power > 0.0) || !std::isfinite(power)) throw ConfigError("total power must be positive");
    if (!(sigma_h_sq > 0.0) || !std::isfinite(sigma_h_sq)) throw ConfigError("sigma_h_sq must be positive");
    if (!fixed_symbols.empty()) {
      if (fixed_symbols.size() != alpha.size()) throw ConfigError("fixed symbols must list one symbol per user");
      for (auto s : fixed_symbols)
        if (s >= constellation.size()) throw ConfigError("fixed symbol index out of range");
    }
  }
};

struct UserStats {
  std::uint64_t bit_errors = 0;
  std::uint64_t symbol_errors = 0;
  std::vector<std::uint64_t> detections;       // M x M, (tx, detected)
  std::vector<std::uint64_t> pairwise_events;  // M x M, (tx, competitor) metric wins
  // Residual pattern counts per symbol context: index context * patterns + code,
  // context = x_l + M x_{l+1} + ... + M^(L-l) x_L.
  std::vector<std::uint64_t> sic_patterns;

  bool operator==(const UserStats&) const = default;
};

/// Integer counters of a simulation run. Merging is exact element-wise
/// addition, so the result does not depend on how trials were partitioned.
struct SimStats {
  std::uint64_t trials = 0;
  std::size_t constellation_size = 0;
  std::size_t num_differences = 0;
  std::vector<UserStats> users;

  static std::size_t sic_table_size(std::size_t m, std::size_t num_differences, int num_users, int l) {
    std::size_t n = 1;
    for (int k = l; k <= num_users; ++k) n *= m;
    for (int k = 1; k < l; ++k) n *= num_differences;
    return n;
  }

  std::size_t sic_pattern_count(int l) const {
    std::size_t n = 1;
    for (int k = 1; k < l; ++k) n *= num_differences;
    return n;
  }

  SimStats() = default;
  SimStats(const SystemConfig& cfg)
      : constellation_size(cfg.constellation.size()), num_differences(cfg.constellation.differences().size()) {
    const std::size_t m = constellation_size;
    for (int l = 1; l <= cfg.num_users(); ++l)
      users.push_back({0, 0, std::vector<std::uint64_t>(m * m), std::vector<std::uint64_t>(m * m),
                       std::vector<std::uint64_t>(sic_table_size(m, num_differences, cfg.num_users(), l))});
  }

  SimStats& operator+=(const SimStats& o) {
    if (o.users.size() != users.size() || o.constellation_size != constellation_size)
      throw std::invalid_argument("cannot merge statistics of different systems");
    trials += o.trials;
    for (std::size_t u = 0; u < users.size(); ++u) {
      auto& a = users[u];
      const auto& b = o.users[u];
      a.bit_errors += b.bit_errors;
      a.symbol_errors += b.symbol_errors;
      for (std::size_t i = 0; i < a.detections.size(); ++i) a.detections[i] += b.detections[i];
      for (std::size_t i = 0; i < a.pairwise_events.size(); ++i) a.pairwise_events[i] += b.pairwise_events[i];
      for (std::size_t i = 0; i < a.sic_patterns.size(); ++i) a.sic_patterns[i] += b.sic_patterns[i];
    }
    return *this;
  }

  const UserStats& user(int l) const {
    if (l < 1 || static_cast<std::size_t>(l) > users.size()) throw std::out_of_range("user index out of range");
    return users[static_cast<std::size_t>(l - 1)];
  }

  std::uint64_t tx_count(int l, std::size_t tx) const {
    const auto& u = user(l);
    std::uint64_t n = 0;
    for (std::size_t r = 0; r < constellation_size; ++r) n += u.detections[tx * constellation_size + r];
    return n;
  }

  bool operator==(const SimStats&) const = default;
};

namespace detail {

// Plain complex product; std::complex operator* carries Annex G NaN
// recovery that dominates the simulator's inner loop.
inline Symbol mul(Symbol a, Symbol b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

inline double distance_sq(Symbol r, Symbol gain, Symbol point) {
  const Symbol d = r - mul(gain, point);
  return d.real() * d.real() + d.imag() * d.imag();
}

inline std::size_t nearest_point(Symbol r, Symbol gain, std::span<const Symbol> points) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < points.size(); ++m) {
    const double d = distance_sq(r, gain, points[m]);
    if (d < best_d) {
      best_d = d;
      best = m;
    }
  }
  return best;
}

}  // namespace detail

/// Superposed transmit signal s = sum_l sqrt(alpha_l P) x_l for symbol indices.
inline Symbol superpose(const SystemConfig& cfg, std::span<const std::size_t> symbols) {
  if (symbols.size() != cfg.alpha.size()) throw std::invalid_argument("one symbol per user required");
  Symbol s{};
  for (std::size_t k = 0; k < symbols.size(); ++k)
    s += std::sqrt(cfg.alpha[k] * cfg.power) * cfg.constellation.point(symbols[k]);
  return s;
}

struct SicDetection {
  std::vector<std::size_t> decisions;  // users 1..l; the last entry is user l's own symbol
  Symbol residual;                     // received sample after cancelling users 1..l-1
};

/// Successive interference cancellation at user l's receiver.
///
/// Users 1..l-1 are detected in order by minimum distance to the
/// constellation scaled by sqrt(alpha_k P) h, each decision being
/// subtracted before the next; wrong decisions stay in the residual.
/// Finally user l's own symbol is detected the same way.
inline SicDetection sic_detect(Symbol r, Symbol h, const SystemConfig& cfg, int l) {
  if (l < 1 || l > cfg.num_users()) throw std::out_of_range("user index out of range");
  const auto points = cfg.constellation.points();
  SicDetection out;
  out.residual = r;
  for (int k = 1; k <= l; ++k) {
    const Symbol gain = std::sqrt(cfg.alpha[static_cast<std::size_t>(k - 1)] * cfg.power) * h;
    const std::size_t d = detail::nearest_point(out.residual, gain, points);
    out.decisions.push_back(d);
    if (k < l) out.residual -= detail::mul(gain, points[d]);
  }
  return out;
}

inline constexpr std::uint64_t kTrialsPerStream = 1 << 14;

namespace detail {

// One block of trials on its own random stream.
inline void simulate_block(const SystemConfig& cfg, const ChannelModel& model, std::uint64_t trials, Rng& rng,
                           SimStats& stats) {
  const int num_users = cfg.num_users();
  const auto& cons = cfg.constellation;
  const auto points = cons.points();
  const std::size_t m = cons.size();
  const std::size_t num_diff = cons.differences().size();
  const unsigned bits = cons.bits_per_symbol();
  const double noise_sd = std::sqrt(model.noise_var / 2.0);
  boost::random::normal_distribution<double> noise(0.0, noise_sd);

  std::vector<double> amp(static_cast<std::size_t>(num_users));
  for (int k = 0; k < num_users; ++k) amp[static_cast<std::size_t>(k)] = std::sqrt(cfg.alpha[static_cast<std::size_t>(k)] * cfg.power);
  std::vector<std::size_t> tx(static_cast<std::size_t>(num_users));
  std::vector<Symbol> h(static_cast<std::size_t>(num_users));

  for (std::uint64_t t = 0; t < trials; ++t) {
    draw_ordered_channels(model, rng, std::span<Symbol>(h));
    Symbol s{};
    for (std::size_t k = 0; k < tx.size(); ++k) {
      tx[k] = cfg.fixed_symbols.empty() ? static_cast<std::size_t>(rng() >> (64 - bits)) : cfg.fixed_symbols[k];
      s += amp[k] * points[tx[k]];
    }
    for (std::size_t l = 0; l < tx.size(); ++l) {
      const double n_re = noise(rng);
      const double n_im = noise(rng);
      Symbol residual = mul(h[l], s) + Symbol{n_re, n_im};
      std::size_t pattern = 0;
      std::size_t place = 1;
      for (std::size_t k = 0; k < l; ++k) {
        const Symbol gain = amp[k] * h[l];
        const std::size_t d = nearest_point(residual, gain, points);
        residual -= mul(gain, points[d]);
        pattern += place * static_cast<std::size_t>(cons.difference_code(tx[k], d));
        place *= num_diff;
      }
      const Symbol gain = amp[l] * h[l];
      const std::size_t own = nearest_point(residual, gain, points);
      auto& u = stats.users[l];
      const std::size_t x = tx[l];
      ++u.detections[x * m + own];
      if (own != x) {
        ++u.symbol_errors;
        u.bit_errors += bit_errors(cons, x, own);
      }
      std::size_t context = 0;
      for (std::size_t k = tx.size(); k-- > l;) context = context * m + tx[k];
      ++u.sic_patterns[context * place + pattern];
      const double metric_tx = distance_sq(residual, gain, points[x]);
      for (std::size_t c = 0; c < m; ++c)
        if (c != x && distance_sq(residual, gain, points[c]) <= metric_tx) ++u.pairwise_events[x * m + c];
    }
  }
  stats.trials += trials;
}

}  // namespace detail

/// Monte Carlo run of `trials` downlink transmissions at `snr_db`.
///
/// Trials are cut into blocks of kTrialsPerStream; block b draws from
/// stream seed + b. Blocks are spread over `workers` threads (0 = all
/// cores) and their counters summed, so any worker count gives identical
/// statistics.
inline SimStats simulate(const SystemConfig& cfg, double snr_db, std::uint64_t trials, std::uint64_t seed,
                         unsigned workers = 1) {
  cfg.validate();
  if (trials < 1) throw ConfigError("trials must be >= 1");
  double entries = 0.0;  // SIC pattern counters over all users
  for (int l = 1; l <= cfg.num_users(); ++l)
    entries += std::pow(static_cast<double>(cfg.constellation.size()), cfg.num_users() - l + 1) *
               std::pow(static_cast<double>(cfg.constellation.differences().size()), l - 1);
  if (entries > double(1 << 22)) throw ConfigError("too many users for SIC pattern bookkeeping");
  const ChannelModel model = cfg.channel_at(snr_db);
  const std::uint64_t blocks = (trials + kTrialsPerStream - 1) / kTrialsPerStream;
  workers = static_cast<unsigned>(std::min<std::uint64_t>(resolve_workers(workers), blocks));
  std::vector<SimStats> partial(workers, SimStats(cfg));
  parallel_for(blocks, workers, [&](std::size_t b, unsigned w) {
    const std::uint64_t n = std::min(kTrialsPerStream, trials - b * kTrialsPerStream);
    Rng rng = make_stream(seed, b);
    detail::simulate_block(cfg, model, n, rng, partial[w]);
  });
  SimStats total(cfg);
  for (const auto& p : partial) total += p;
  return total;
}

enum class PepEstimator {
  detection,       // rate of deciding rx when tx was sent (confusion matrix)
  pairwise_event,  // rate of the rx metric beating the tx metric (two-point test)
};

struct EmpiricalEstimate {
  double value = 0.0;
  double half_width = 0.0;  // Wald 95%
  double upper_95 = 0.0;    // rule of three when no events were seen
  std::uint64_t events = 0;
  std::uint64_t conditioning = 0;
  bool low_confidence = false;  // fewer than 100 events
};

inline EmpiricalEstimate proportion_estimate(std::uint64_t events, std::uint64_t n) {
  if (n == 0) throw std::domain_error("no conditioning trials");
  EmpiricalEstimate e;
  e.events = events;
  e.conditioning = n;
  e.value = static_cast<double>(events) / static_cast<double>(n);
  e.half_width = 1.96 * std::sqrt(e.value * (1.0 - e.value) / static_cast<double>(n));
  e.upper_95 = events == 0 ? 3.0 / static_cast<double>(n) : e.value + e.half_width;
  e.low_confidence = events < 100;
  return e;
}

/// Empirical pairwise error rate of user l for tx -> rx, conditioned on tx.
inline EmpiricalEstimate empirical_pep(const SimStats& stats, int l, std::size_t tx, std::size_t rx,
                                       PepEstimator estimator = PepEstimator::detection) {
  const std::size_t m = stats.constellation_size;
  if (tx >= m || rx >= m) throw std::out_of_range("symbol index out of range");
  const auto& u = stats.user(l);
  if (estimator == PepEstimator::pairwise_event && tx == rx)
    throw std::invalid_argument("pairwise event needs tx != rx");
  const std::uint64_t n = stats.tx_count(l, tx);
  const std::uint64_t k = estimator == PepEstimator::detection ? u.detections[tx * m + rx] : u.pairwise_events[tx * m + rx];
  return proportion_estimate(k, n);
}

inline constexpr std::uint64_t kMinWeightTrials = 100'000;

namespace detail {

inline DeltaPattern decode_pattern(std::size_t code, std::span<const Symbol> diffs, int l) {
  DeltaPattern p;
  for (int k = 1; k < l; ++k) {
    p.deltas.push_back(diffs[code % diffs.size()]);
    code /= diffs.size();
  }
  return p;
}

inline void check_weight_inputs(const SimStats& stats, const Constellation& cons) {
  if (stats.trials < kMinWeightTrials) throw std::invalid_argument("SIC weights need at least 1e5 trials");
  if (cons.differences().size() != stats.num_differences || cons.size() != stats.constellation_size)
    throw std::invalid_argument("constellation does not match statistics");
}

}  // namespace detail

/// Observed distribution of SIC residual patterns (delta_1..delta_{l-1}) at
/// user l's receiver, normalised to sum to one.
inline SicWeights sic_delta_weights(const SimStats& stats, const Constellation& cons, int l) {
  detail::check_weight_inputs(stats, cons);
  const auto& u = stats.user(l);
  const auto diffs = cons.differences();
  const std::size_t patterns = stats.sic_pattern_count(l);
  std::vector<std::uint64_t> counts(patterns);
  for (std::size_t i = 0; i < u.sic_patterns.size(); ++i) counts[i % patterns] += u.sic_patterns[i];
  SicWeights out;
  for (std::size_t code = 0; code < patterns; ++code) {
    if (counts[code] == 0) continue;
    auto p = detail::decode_pattern(code, diffs, l);
    p.weight = static_cast<double>(counts[code]) / static_cast<double>(stats.trials);
    out.push_back(std::move(p));
  }
  return out;
}

/// Residual pattern distribution conditioned on the symbols of users l..L,
/// one table per context (x_l + M x_{l+1} + ...). Unobserved contexts are empty.
inline std::vector<SicWeights> sic_delta_weights_by_context(const SimStats& stats, const Constellation& cons, int l) {
  detail::check_weight_inputs(stats, cons);
  const auto& u = stats.user(l);
  const auto diffs = cons.differences();
  const std::size_t patterns = stats.sic_pattern_count(l);
  std::vector<SicWeights> out(u.sic_patterns.size() / patterns);
  for (std::size_t ctx = 0; ctx < out.size(); ++ctx) {
    std::uint64_t total = 0;
    for (std::size_t code = 0; code < patterns; ++code) total += u.sic_patterns[ctx * patterns + code];
    for (std::size_t code = 0; code < patterns; ++code) {
      const auto n = u.sic_patterns[ctx * patterns + code];
      if (n == 0) continue;
      auto p = detail::decode_pattern(code, diffs, l);
      p.weight = static_cast<double>(n) / static_cast<double>(total);
      out[ctx].push_back(std::move(p));
    }
  }
  return out;
}

enum class SicKind { perfect, pattern, weighted };

/// How the analytic side conditions on SIC residuals, for all users at once.
struct SicPolicy {
  SicKind kind = SicKind::perfect;
  std::vector<Symbol> pattern;  // residuals of users 1..L-1; user l uses the first l-1
  std::uint64_t trials = 1'000'000;
  std::uint64_t seed = 1;
  unsigned workers = 1;
};

/// Weighted SIC modes for every user from one simulation run, with both the
/// marginal and the symbol-conditioned pattern tables.
inline std::vector<SicMode> weighted_sic_modes(const SimStats& stats, const SystemConfig& cfg) {
  std::vector<SicMode> modes;
  for (int l = 1; l <= cfg.num_users(); ++l)
    modes.push_back(WeightedSic{sic_delta_weights(stats, cfg.constellation, l),
                                sic_delta_weights_by_context(stats, cfg.constellation, l)});
  return modes;
}

/// Per-user SicMode for the analytic evaluators at one operating point.
/// The weighted kind runs the simulator at `snr_db` to estimate the weights.
inline std::vector<SicMode> resolve_sic(const SicPolicy& policy, const SystemConfig& cfg, double snr_db) {
  const int num_users = cfg.num_users();
  std::vector<SicMode> modes;
  switch (policy.kind) {
    case SicKind::perfect:
      modes.assign(static_cast<std::size_t>(num_users), PerfectSic{});
      break;
    case SicKind::pattern:
      if (policy.pattern.size() + 1 < static_cast<std::size_t>(num_users))
        throw ConfigError("SIC pattern must give a residual for each of users 1..L-1");
      for (int l = 1; l <= num_users; ++l)
        modes.push_back(PatternSic{{policy.pattern.begin(), policy.pattern.begin() + (l - 1)}});
      break;
    case SicKind::weighted: {
      modes = weighted_sic_modes(
          simulate(cfg, snr_db, std::max(policy.trials, kMinWeightTrials), policy.seed, policy.workers), cfg);
      break;
    }
  }
  return modes;
}

}  // namespace noma
