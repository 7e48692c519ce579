#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "noma/constellation.hpp"
#include "noma/errors.hpp"
#include "noma/parallel.hpp"
#include "noma/pep.hpp"
#include "noma/sim.hpp"

namespace noma {

/// Average PEP of every ordered symbol pair for one user; diagonal is 0.
struct PairwisePepTable {
  std::size_t size = 0;
  std::vector<double> pep;  // size x size, row = tx

  double at(std::size_t tx, std::size_t rx) const { return pep[tx * size + rx]; }

  double worst() const { return pep.empty() ? 0.0 : *std::max_element(pep.begin(), pep.end()); }

  // Mean over the size*(size-1) ordered pairs tx != rx.
  double mean() const {
    double s = 0.0;
    for (double p : pep) s += p;
    return size < 2 ? 0.0 : s / static_cast<double>(size * (size - 1));
  }
};

inline PairwisePepTable pairwise_pep_table(int l, std::span<const double> alpha, double power, const ChannelModel& model,
                                           const Constellation& cons, const SicMode& sic) {
  PairwisePepTable t{cons.size(), std::vector<double>(cons.size() * cons.size(), 0.0)};
  for (std::size_t m = 0; m < cons.size(); ++m)
    for (std::size_t r = 0; r < cons.size(); ++r)
      if (m != r) t.pep[m * t.size + r] = average_pep(l, cons.point(m), cons.point(r), cons, alpha, power, model, sic);
  return t;
}

/// Bit-weighted union bound of a PEP table with equiprobable symbols,
/// expressed per bit.
inline double union_bound_from_table(const PairwisePepTable& t, const Constellation& cons) {
  double sum = 0.0;
  for (std::size_t m = 0; m < t.size; ++m)
    for (std::size_t r = 0; r < t.size; ++r)
      if (m != r) sum += bit_errors(cons, m, r) * t.at(m, r);
  return sum / (static_cast<double>(t.size) * cons.bits_per_symbol());
}

/// Union bound on user l's BER at `snr_db`.
inline double union_bound_ber(int l, std::span<const double> alpha, double power, double snr_db, double sigma_h_sq,
                              const Constellation& cons, const SicMode& sic) {
  const auto model = channel_at_snr(static_cast<int>(alpha.size()), sigma_h_sq, power, snr_db);
  return union_bound_from_table(pairwise_pep_table(l, alpha, power, model, cons, sic), cons);
}

enum class ObjectiveScope { average_over_users, per_user_list };

struct OptimizationProblem {
  SystemConfig cfg;  // alpha is the free variable; its value here is ignored
  double snr_db = 30.0;
  double p_th = 1e-3;
  double grid_step = 1e-3;
  ObjectiveScope objective_scope = ObjectiveScope::average_over_users;
  SicPolicy sic;
  unsigned workers = 1;

  void validate() const {
    if (!(p_th > 0.0) || !(p_th <= 1.0)) throw ConfigError("p_th must lie in (0, 1]");
    if (!(grid_step > 0.0) || grid_step > 0.01 + 1e-15) throw ConfigError("grid_step must lie in (0, 0.01]");
    const double n = 1.0 / grid_step;
    if (std::abs(n - std::round(n)) > 1e-6) throw ConfigError("grid_step must divide 1");
    if (cfg.num_users() < 1) throw ConfigError("at least one user required");
  }
};

/// Objective and constraint values at one power split.
struct PsiEvaluation {
  std::vector<double> alpha;
  double psi = 0.0;                 // mean of the per-user union bounds
  std::vector<double> ber;          // per-user union bound
  std::vector<double> worst_pep;    // per-user max pairwise PEP, the constrained quantity
  bool feasible = false;
};

inline PsiEvaluation objective_psi(const OptimizationProblem& problem, std::span<const double> alpha) {
  SystemConfig cfg = problem.cfg;
  cfg.alpha.assign(alpha.begin(), alpha.end());
  cfg.validate();
  const auto model = cfg.channel_at(problem.snr_db);
  const auto modes = resolve_sic(problem.sic, cfg, problem.snr_db);
  PsiEvaluation e;
  e.alpha = cfg.alpha;
  for (int l = 1; l <= cfg.num_users(); ++l) {
    const auto table = pairwise_pep_table(l, cfg.alpha, cfg.power, model, cfg.constellation,
                                          modes[static_cast<std::size_t>(l - 1)]);
    e.ber.push_back(union_bound_from_table(table, cfg.constellation));
    e.worst_pep.push_back(table.worst());
  }
  double sum = 0.0;
  for (double b : e.ber) sum += b;
  e.psi = sum / static_cast<double>(e.ber.size());
  e.feasible = std::all_of(e.worst_pep.begin(), e.worst_pep.end(), [&](double p) { return p <= problem.p_th; });
  return e;
}

/// Strictly descending power splits on the simplex with resolution `step`:
/// every coefficient is a multiple of step, at least step, and consecutive
/// coefficients differ by at least step. Lexicographic order.
inline std::vector<std::vector<double>> descending_simplex_grid(int num_users, double step) {
  const auto total = static_cast<long>(std::lround(1.0 / step));
  std::vector<std::vector<double>> out;
  std::vector<long> parts(static_cast<std::size_t>(num_users));
  // Fill position k with value v given remaining sum; recursion depth = L.
  auto fill = [&](auto&& self, std::size_t k, long remaining, long upper) -> void {
    const auto left = static_cast<long>(parts.size() - k);  // positions still to fill
    if (left == 1) {
      if (remaining >= 1 && remaining <= upper) {
        parts[k] = remaining;
        std::vector<double> a;
        for (long p : parts) a.push_back(static_cast<double>(p) / static_cast<double>(total));
        out.push_back(std::move(a));
      }
      return;
    }
    // Minimum sum of the remaining left-1 positions: 1 + 2 + ... + (left-1).
    const long tail_min = (left - 1) * left / 2;
    for (long v = std::min(upper, remaining - tail_min); v >= 1; --v) {
      // The remaining positions are each < v, so their sum is bounded too.
      const long tail_max = (v - 1 + v - (left - 1)) * (left - 1) / 2;
      if (remaining - v > tail_max) break;
      parts[k] = v;
      self(self, k + 1, remaining - v, v - 1);
    }
  };
  fill(fill, 0, total, total);
  std::sort(out.begin(), out.end());
  return out;
}

struct OptimizationResult {
  std::vector<double> best_alpha;
  double best_objective = std::numeric_limits<double>::quiet_NaN();
  std::vector<PsiEvaluation> sweep;  // every grid point, in grid order
  bool infeasible = true;

  std::vector<PsiEvaluation> feasible_set() const {
    std::vector<PsiEvaluation> f;
    for (const auto& e : sweep)
      if (e.feasible) f.push_back(e);
    return f;
  }
};

// Strict preference used for the argmin: lower psi, then larger alpha_1,
// then lexicographically smaller alpha.
inline bool better_point(const PsiEvaluation& a, const PsiEvaluation& b) {
  if (a.psi != b.psi) return a.psi < b.psi;
  if (a.alpha.front() != b.alpha.front()) return a.alpha.front() > b.alpha.front();
  return a.alpha < b.alpha;
}

/// Exhaustive grid search for the split minimising the mean union-bound BER
/// subject to every user's worst pairwise PEP staying below p_th.
inline OptimizationResult solve(const OptimizationProblem& problem) {
  problem.validate();
  const auto grid = descending_simplex_grid(problem.cfg.num_users(), problem.grid_step);
  if (grid.empty()) throw ConfigError("grid_step too coarse for the number of users");

  OptimizationResult result;
  result.sweep.resize(grid.size());
  OptimizationProblem inner = problem;
  inner.sic.workers = 1;  // grid points are the parallel unit
  parallel_for(grid.size(), problem.workers,
               [&](std::size_t i, unsigned) { result.sweep[i] = objective_psi(inner, grid[i]); });

  const PsiEvaluation* best = nullptr;
  for (const auto& e : result.sweep)
    if (e.feasible && (best == nullptr || better_point(e, *best))) best = &e;
  if (best != nullptr) {
    result.infeasible = false;
    result.best_alpha = best->alpha;
    result.best_objective = best->psi;
  }
  return result;
}

}  // namespace noma
