#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "noma/asymptotic.hpp"
#include "noma/csv.hpp"
#include "noma/optimizer.hpp"
#include "noma/pep.hpp"
#include "noma/sim.hpp"

namespace noma {

struct SimPoint {
  double snr_db = 0.0;
  SimStats stats;
};

/// Long-format simulation table: snr_db,user,metric,value,ci_half_width,trials.
/// Metrics: ber, ser, then det_<tx>_<rx> (confusion matrix) and
/// pw_<tx>_<rx> (pairwise metric test) for every ordered pair tx != rx.
/// `trials` is the conditioning count of the estimate.
inline CsvTable sim_stats_table(const std::vector<SimPoint>& points, const SystemConfig& cfg) {
  CsvTable t({"snr_db", "user", "metric", "value", "ci_half_width", "trials"});
  const std::size_t m = cfg.constellation.size();
  const auto bits = static_cast<std::uint64_t>(cfg.constellation.bits_per_symbol());
  auto row = [&](double snr, int l, const std::string& metric, const EmpiricalEstimate& e) {
    t.add_row({format_number(snr), format_number(l), metric, format_number(e.value), format_number(e.half_width),
               format_number(e.conditioning)});
  };
  for (const auto& p : points) {
    for (int l = 1; l <= cfg.num_users(); ++l) {
      const auto& u = p.stats.user(l);
      row(p.snr_db, l, "ber", proportion_estimate(u.bit_errors, p.stats.trials * bits));
      row(p.snr_db, l, "ser", proportion_estimate(u.symbol_errors, p.stats.trials));
      for (std::size_t tx = 0; tx < m; ++tx) {
        if (p.stats.tx_count(l, tx) == 0) continue;
        for (std::size_t rx = 0; rx < m; ++rx) {
          if (tx == rx) continue;
          const auto suffix = std::to_string(tx) + "_" + std::to_string(rx);
          row(p.snr_db, l, "det_" + suffix, empirical_pep(p.stats, l, tx, rx, PepEstimator::detection));
          row(p.snr_db, l, "pw_" + suffix, empirical_pep(p.stats, l, tx, rx, PepEstimator::pairwise_event));
        }
      }
    }
  }
  return t;
}

/// Analytic average PEP of one user for every ordered pair at one SNR.
struct AnalyticPepRow {
  double snr_db = 0.0;
  int user = 1;
  PairwisePepTable table;
};

inline CsvTable pep_table(const std::vector<AnalyticPepRow>& rows, const char* method) {
  CsvTable t({"snr_db", "user", "tx", "rx", "method", "pep"});
  for (const auto& r : rows)
    for (std::size_t tx = 0; tx < r.table.size; ++tx)
      for (std::size_t rx = 0; rx < r.table.size; ++rx)
        if (tx != rx)
          t.add_row({format_number(r.snr_db), format_number(r.user), format_number(static_cast<int>(tx)),
                     format_number(static_cast<int>(rx)), method, format_number(r.table.at(tx, rx))});
  return t;
}

inline CsvTable diversity_table(const std::vector<std::pair<PepCurve, DiversityTable>>& curves) {
  CsvTable t({"snr_db", "user", "method", "d_eff"});
  for (const auto& [curve, table] : curves)
    for (const auto& e : table.estimates)
      t.add_row({format_number(e.snr_db), format_number(curve.user), to_string(e.method), format_number(e.d_eff)});
  return t;
}

struct BoundRow {
  double snr_db = 0.0;
  int user = 1;
  double beta = 0.0;
  double delta_abs_sq = 0.0;
  double bound_printed = 0.0;
  double bound_rederived = 0.0;
  double chernoff_average = 0.0;
  double pep_quadrature = 0.0;
};

inline CsvTable bound_table(const std::vector<BoundRow>& rows) {
  CsvTable t({"snr_db", "user", "beta", "delta_abs_sq", "bound_printed", "bound_rederived", "chernoff_average",
              "pep_quadrature"});
  for (const auto& r : rows)
    t.add_row({format_number(r.snr_db), format_number(r.user), format_number(r.beta), format_number(r.delta_abs_sq),
               format_number(r.bound_printed), format_number(r.bound_rederived), format_number(r.chernoff_average),
               format_number(r.pep_quadrature)});
  return t;
}

/// Full optimizer sweep: alpha_1..alpha_L,psi,pep_user_1..L,feasible,ber_user_1..L.
/// pep_user_l is the worst pairwise PEP of user l, the constrained quantity.
inline CsvTable sweep_table(const OptimizationResult& r, int num_users) {
  std::vector<std::string> header;
  for (int l = 1; l <= num_users; ++l) header.push_back("alpha_" + std::to_string(l));
  header.push_back("psi");
  for (int l = 1; l <= num_users; ++l) header.push_back("pep_user_" + std::to_string(l));
  header.push_back("feasible");
  for (int l = 1; l <= num_users; ++l) header.push_back("ber_user_" + std::to_string(l));
  CsvTable t(header);
  for (const auto& e : r.sweep) {
    std::vector<std::string> row;
    for (double a : e.alpha) row.push_back(format_number(a));
    row.push_back(format_number(e.psi));
    for (double p : e.worst_pep) row.push_back(format_number(p));
    row.push_back(e.feasible ? "1" : "0");
    for (double b : e.ber) row.push_back(format_number(b));
    t.add_row(std::move(row));
  }
  return t;
}

/// One-row summary of the minimiser; empty fields when infeasible.
inline CsvTable summary_table(const OptimizationResult& r, int num_users) {
  std::vector<std::string> header{"infeasible", "psi"};
  for (int l = 1; l <= num_users; ++l) header.push_back("alpha_" + std::to_string(l));
  for (int l = 1; l <= num_users; ++l) header.push_back("pep_user_" + std::to_string(l));
  for (int l = 1; l <= num_users; ++l) header.push_back("ber_user_" + std::to_string(l));
  CsvTable t(header);
  std::vector<std::string> row{r.infeasible ? "1" : "0", format_number(r.best_objective)};
  const PsiEvaluation* best = nullptr;
  for (const auto& e : r.sweep)
    if (!r.infeasible && e.alpha == r.best_alpha) best = &e;
  for (int l = 0; l < num_users; ++l) row.push_back(best ? format_number(best->alpha[l]) : "");
  for (int l = 0; l < num_users; ++l) row.push_back(best ? format_number(best->worst_pep[l]) : "");
  for (int l = 0; l < num_users; ++l) row.push_back(best ? format_number(best->ber[l]) : "");
  t.add_row(std::move(row));
  return t;
}

/// Closed forms against quadrature. Rows:
///   user1_closed: far-user closed form with sigma^2 = 2 sigma_h^2 / L;
///   user_l_closed: the published l-th user form with sigma_h^2 passed through.
/// `ratio` is closed / quadrature.
struct ConsistencyRow {
  std::string check;
  int l = 1;
  int num_users = 1;
  double beta = 0.0;
  double upsilon = 0.0;
  double sigma_h_sq = 0.0;
  double quadrature = 0.0;
  double closed = 0.0;

  double ratio() const { return closed / quadrature; }
};

inline std::vector<ConsistencyRow> consistency_rows(double sigma_h_sq = 1.0) {
  std::vector<ConsistencyRow> rows;
  for (int num_users = 1; num_users <= 3; ++num_users) {
    const ChannelModel model{num_users, sigma_h_sq, 1.0};
    for (double beta : {0.5, 2.0, 8.0})
      for (double upsilon : {0.1, 1.0}) {
        const double q = pep_quadrature(1, beta, upsilon, model);
        const double closed = pep_user1_closed(beta, upsilon, std::sqrt(2.0 * sigma_h_sq / num_users));
        rows.push_back({"user1_closed", 1, num_users, beta, upsilon, sigma_h_sq, q, closed});
      }
    for (int l = 1; l <= num_users; ++l)
      for (double beta : {0.5, 2.0, 8.0})
        for (double upsilon : {0.1, 1.0}) {
          const double q = pep_quadrature(l, beta, upsilon, model);
          const double closed = pep_user_l_closed(l, num_users, beta, upsilon, std::sqrt(sigma_h_sq));
          rows.push_back({"user_l_closed", l, num_users, beta, upsilon, sigma_h_sq, q, closed});
        }
  }
  return rows;
}

inline CsvTable consistency_table(const std::vector<ConsistencyRow>& rows) {
  CsvTable t({"check", "l", "L", "beta", "upsilon", "sigma_h_sq", "quadrature", "closed", "ratio"});
  for (const auto& r : rows)
    t.add_row({r.check, format_number(r.l), format_number(r.num_users), format_number(r.beta), format_number(r.upsilon),
               format_number(r.sigma_h_sq), format_number(r.quadrature), format_number(r.closed),
               format_number(r.ratio())});
  return t;
}

}  // namespace noma
