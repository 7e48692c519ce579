// noma_cli: analytic, asymptotic and simulated PEP of downlink NOMA users,
// diversity tables and power-allocation sweeps. Writes CSV files plus a
// manifest.json into --out.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "noma/noma.hpp"

namespace {

constexpr const char* kVersion = "1.0.0";

enum ExitCode { kOk = 0, kUsage = 1, kConfig = 2, kNumerical = 3, kInfeasible = 4, kEnumerationCap = 5 };

// Settings every subcommand understands, keyed by the long flag name; the
// config file uses the same keys.
const std::vector<std::pair<std::string, std::string>> kKeys = {
    {"seed", "base seed of the simulator streams"},
    {"trials", "Monte Carlo trials per SNR point"},
    {"alpha", "power coefficients a1,a2,... (descending, sum 1)"},
    {"users", "number of users L"},
    {"sic-mode", "perfect | pattern | weighted"},
    {"sic-pattern", "SIC residuals of users 1..L-1 as tx:rx symbol index pairs"},
    {"sic-trials", "trials used to estimate weighted-mode SIC weights"},
    {"symbols", "fixed transmitted symbol index per user (default uniform)"},
    {"snr-db", "SNR grid in dB: a,b,c or start:step:stop"},
    {"pth", "per-user PEP threshold"},
    {"grid-step", "power-coefficient grid resolution"},
    {"sigma-h-sq", "Rayleigh parameter; E|h|^2 = 2 sigma_h^2"},
    {"power", "total transmit power P"},
    {"workers", "worker threads, 0 = all cores"},
};

struct Settings {
  noma::SystemConfig cfg;
  std::vector<double> snr_grid;
  std::uint64_t seed = 1;
  std::uint64_t trials = 1'000'000;
  noma::SicPolicy sic;
  double p_th = 1e-3;
  double grid_step = 0.0;  // 0: 1e-3 for two users, 1e-2 otherwise
  unsigned workers = 0;
  std::string out = ".";
  std::map<std::string, std::string> snapshot;  // resolved key -> value text
};

std::vector<double> default_alpha(int num_users) {
  if (num_users == 1) return {1.0};
  if (num_users == 2) return {0.8, 0.2};
  if (num_users == 3) return {0.7, 0.2, 0.1};
  // Linearly decreasing split, exact integer numerators.
  std::vector<double> a;
  const double denom = num_users * (num_users + 1) / 2.0;
  for (int l = 1; l <= num_users; ++l) a.push_back((num_users - l + 1) / denom);
  return a;
}

std::uint64_t parse_count(const std::string& text, const char* what) {
  const double v = noma::parse_double(text, what);
  if (!(v >= 0.0) || v != std::floor(v) || v > 1e18) throw noma::ConfigError(std::string(what) + ": expected a count");
  return static_cast<std::uint64_t>(v);
}

std::vector<std::size_t> parse_index_list(const std::string& text, std::size_t limit, const char* what) {
  std::vector<std::size_t> out;
  for (double v : noma::parse_double_list(text, what)) {
    if (v < 0.0 || v != std::floor(v) || v >= static_cast<double>(limit))
      throw noma::ConfigError(std::string(what) + ": symbol index out of range");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

std::vector<noma::Symbol> parse_sic_pattern(const std::string& text, const noma::Constellation& cons) {
  std::vector<noma::Symbol> out;
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw noma::ConfigError("sic-pattern: expected tx:rx pairs");
    const auto tx = parse_index_list(item.substr(0, colon), cons.size(), "sic-pattern");
    const auto rx = parse_index_list(item.substr(colon + 1), cons.size(), "sic-pattern");
    out.push_back(cons.point(tx.at(0)) - cons.point(rx.at(0)));
  }
  return out;
}

// Flags override the config file, which overrides recipe defaults.
Settings resolve(const std::map<std::string, std::string>& flags, const std::string& config_path,
                 const std::map<std::string, std::string>& recipe) {
  std::map<std::string, std::string> v = recipe;
  if (!config_path.empty()) {
    for (const auto& [k, val] : noma::load_key_value_file(config_path)) {
      if (k == "out") {
        v[k] = val;
        continue;
      }
      bool known = false;
      for (const auto& key : kKeys) known = known || key.first == k;
      if (!known) throw noma::ConfigError("unknown config key '" + k + "'");
      v[k] = val;
    }
  }
  for (const auto& [k, val] : flags) v[k] = val;

  Settings s;
  if (v.count("sigma-h-sq")) s.cfg.sigma_h_sq = noma::parse_double(v["sigma-h-sq"], "sigma-h-sq");
  if (v.count("power")) s.cfg.power = noma::parse_double(v["power"], "power");

  std::optional<int> users;
  if (v.count("users")) {
    const auto n = parse_count(v["users"], "users");
    if (n < 1 || n > 64) throw noma::ConfigError("users must lie in 1..64");
    users = static_cast<int>(n);
  }
  if (v.count("alpha")) {
    s.cfg.alpha = noma::parse_double_list(v["alpha"], "alpha");
    if (users && *users != s.cfg.num_users()) throw noma::ConfigError("alpha length does not match users");
  } else if (users) {
    s.cfg.alpha = default_alpha(*users);
  }
  if (v.count("symbols")) s.cfg.fixed_symbols = parse_index_list(v["symbols"], s.cfg.constellation.size(), "symbols");
  s.snr_grid = noma::parse_snr_grid(v.count("snr-db") ? v["snr-db"] : "0:5:40");
  s.cfg.snr_grid_db = s.snr_grid;
  if (v.count("seed")) s.seed = parse_count(v["seed"], "seed");
  if (v.count("trials")) s.trials = parse_count(v["trials"], "trials");
  if (s.trials < 1) throw noma::ConfigError("trials must be >= 1");
  if (v.count("pth")) s.p_th = noma::parse_double(v["pth"], "pth");
  if (v.count("grid-step")) s.grid_step = noma::parse_double(v["grid-step"], "grid-step");
  if (s.grid_step == 0.0) s.grid_step = s.cfg.num_users() == 2 ? 1e-3 : 1e-2;
  if (v.count("workers")) s.workers = static_cast<unsigned>(parse_count(v["workers"], "workers"));
  if (v.count("out")) s.out = v["out"];

  const std::string mode = v.count("sic-mode") ? v["sic-mode"] : "perfect";
  if (mode == "perfect") {
    s.sic.kind = noma::SicKind::perfect;
  } else if (mode == "pattern") {
    s.sic.kind = noma::SicKind::pattern;
    if (!v.count("sic-pattern")) throw noma::ConfigError("sic-mode pattern needs sic-pattern");
    s.sic.pattern = parse_sic_pattern(v["sic-pattern"], s.cfg.constellation);
  } else if (mode == "weighted") {
    s.sic.kind = noma::SicKind::weighted;
  } else {
    throw noma::ConfigError("sic-mode must be perfect, pattern or weighted");
  }
  s.sic.trials = v.count("sic-trials") ? parse_count(v["sic-trials"], "sic-trials") : 1'000'000;
  s.sic.seed = s.seed;
  s.sic.workers = s.workers;
  s.cfg.validate();

  s.snapshot = v;
  s.snapshot["sic-mode"] = mode;
  s.snapshot["sigma-h-sq"] = noma::format_number(s.cfg.sigma_h_sq);
  s.snapshot["power"] = noma::format_number(s.cfg.power);
  std::string alpha;
  for (double a : s.cfg.alpha) alpha += (alpha.empty() ? "" : ",") + noma::format_number(a);
  s.snapshot["alpha"] = alpha;
  s.snapshot["seed"] = std::to_string(s.seed);
  s.snapshot["trials"] = std::to_string(s.trials);
  return s;
}

class Run {
 public:
  explicit Run(const Settings& s) : s_(s) { std::filesystem::create_directories(s.out); }

  void write(const std::string& name, const noma::CsvTable& t) {
    t.write_file((std::filesystem::path(s_.out) / name).string());
    outputs_.push_back(name);
  }

  void manifest(const std::string& command, const std::vector<std::string>& argv, double seconds) const {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["argv"] = argv;
    j["tool_version"] = kVersion;
    j["seed"] = s_.seed;
    j["snr_convention"] = "snr_db = 10 log10(P / sigma_n^2); h ~ CN(0, 2 sigma_h^2)";
    nlohmann::ordered_json cfg;
    for (const auto& [k, v] : s_.snapshot) cfg[k] = v;
    j["config"] = cfg;
    j["outputs"] = outputs_;
    j["wall_clock_seconds"] = seconds;
    std::ofstream os(std::filesystem::path(s_.out) / "manifest.json");
    os << j.dump(2) << '\n';
  }

 private:
  const Settings& s_;
  std::vector<std::string> outputs_;
};

std::vector<noma::AnalyticPepRow> analytic_rows(const Settings& s) {
  std::vector<noma::AnalyticPepRow> rows;
  for (double snr : s.snr_grid) {
    const auto model = s.cfg.channel_at(snr);
    const auto modes = noma::resolve_sic(s.sic, s.cfg, snr);
    for (int l = 1; l <= s.cfg.num_users(); ++l)
      rows.push_back({snr, l,
                      noma::pairwise_pep_table(l, s.cfg.alpha, s.cfg.power, model, s.cfg.constellation,
                                               modes[static_cast<std::size_t>(l - 1)])});
  }
  return rows;
}

std::vector<noma::SimPoint> sim_points(const Settings& s) {
  std::vector<noma::SimPoint> points;
  for (double snr : s.snr_grid) points.push_back({snr, noma::simulate(s.cfg, snr, s.trials, s.seed, s.workers)});
  return points;
}

// Pair-averaged analytic PEP curve per user.
std::vector<std::pair<noma::PepCurve, noma::DiversityTable>> diversity_curves(const Settings& s) {
  const auto rows = analytic_rows(s);
  std::vector<std::pair<noma::PepCurve, noma::DiversityTable>> out;
  for (int l = 1; l <= s.cfg.num_users(); ++l) {
    noma::PepCurve c;
    c.user = l;
    c.gamma_bar_offset_db = 10.0 * std::log10(2.0 * s.cfg.sigma_h_sq);
    for (const auto& r : rows)
      if (r.user == l) c.points.push_back({r.snr_db, r.table.mean(), noma::PepMethod::quadrature});
    auto table = noma::effective_diversity(c);
    for (double skipped : table.skipped_snr_db)
      std::cerr << "warning: user " << l << " at " << skipped << " dB skipped in ratio form\n";
    out.emplace_back(std::move(c), std::move(table));
  }
  return out;
}

int cmd_pep(const Settings& s, Run& run) {
  run.write("pep.csv", noma::pep_table(analytic_rows(s), "quadrature"));
  return kOk;
}

int cmd_simulate(const Settings& s, Run& run) {
  run.write("sim.csv", noma::sim_stats_table(sim_points(s), s.cfg));
  return kOk;
}

int cmd_diversity(const Settings& s, Run& run) {
  run.write("diversity.csv", noma::diversity_table(diversity_curves(s)));
  return kOk;
}

// Bound versus exact PEP for the adjacent pair (0 -> 1) under perfect SIC,
// one row per distinct positive beta over the interferer tuples.
int cmd_bound(const Settings& s, Run& run) {
  const auto& cons = s.cfg.constellation;
  const noma::Symbol tx = cons.point(0), rx = cons.point(1);
  const double d2 = std::norm(tx - rx);
  const int num_users = s.cfg.num_users();
  std::vector<noma::BoundRow> rows;
  for (double snr : s.snr_grid) {
    const auto model = s.cfg.channel_at(snr);
    const double gamma_bar = 2.0 * s.cfg.sigma_h_sq / model.noise_var;
    for (int l = 1; l <= num_users; ++l) {
      const auto weaker = static_cast<std::size_t>(num_users - l);
      std::set<double> betas;
      std::size_t tuples = 1;
      for (std::size_t i = 0; i < weaker; ++i) tuples *= cons.size();
      noma::ErrorHypothesis h{l, tx, rx, std::vector<noma::Symbol>(weaker),
                              std::vector<noma::Symbol>(static_cast<std::size_t>(l - 1))};
      for (std::size_t t = 0; t < tuples; ++t) {
        std::size_t code = t;
        for (auto& x : h.interferers) {
          x = cons.point(code % cons.size());
          code /= cons.size();
        }
        const double b = noma::beta_factor(h, s.cfg.alpha, s.cfg.power);
        if (b > 0.0) betas.insert(b);
      }
      const double upsilon = noma::upsilon_factor(model.noise_var, tx - rx);
      for (double b : betas)
        rows.push_back({snr, l, b, d2, noma::pep_upper_bound(l, num_users, gamma_bar, b, d2),
                        noma::pep_upper_bound_rederived(l, num_users, gamma_bar, b, d2),
                        noma::chernoff_average(l, num_users, gamma_bar, b, d2),
                        noma::pep_quadrature(l, b, upsilon, model)});
    }
  }
  run.write("bound.csv", noma::bound_table(rows));
  return kOk;
}

noma::OptimizationProblem problem_from(const Settings& s, double snr) {
  noma::OptimizationProblem p;
  p.cfg = s.cfg;
  p.snr_db = snr;
  p.p_th = s.p_th;
  p.grid_step = s.grid_step;
  p.sic = s.sic;
  p.workers = s.workers;
  return p;
}

int optimize_at(const Settings& s, Run& run, const std::string& prefix) {
  if (s.snr_grid.size() != 1) throw noma::ConfigError("optimization needs a single snr-db value");
  const auto problem = problem_from(s, s.snr_grid.front());
  const auto result = noma::solve(problem);
  run.write(prefix + "sweep.csv", noma::sweep_table(result, s.cfg.num_users()));
  run.write(prefix + "summary.csv", noma::summary_table(result, s.cfg.num_users()));
  if (result.infeasible) {
    std::cerr << "no power split meets pth = " << s.p_th << "\n";
    return kInfeasible;
  }
  return kOk;
}

int cmd_optimize(const Settings& s, Run& run) { return optimize_at(s, run, ""); }

// Per-user analytic vs simulated PEP for every ordered pair.
int cmd_fig2(const Settings& s, Run& run) {
  const auto sims = sim_points(s);
  std::vector<noma::CsvTable> tables;
  for (int l = 1; l <= s.cfg.num_users(); ++l)
    tables.emplace_back(std::vector<std::string>{"snr_db", "tx", "rx", "analytic", "simulated", "ci_half_width",
                                                 "events"});
  const std::size_t m = s.cfg.constellation.size();
  for (const auto& point : sims) {
    const auto model = s.cfg.channel_at(point.snr_db);
    const auto modes = s.sic.kind == noma::SicKind::weighted ? noma::weighted_sic_modes(point.stats, s.cfg)
                                                             : noma::resolve_sic(s.sic, s.cfg, point.snr_db);
    for (int l = 1; l <= s.cfg.num_users(); ++l) {
      const auto table = noma::pairwise_pep_table(l, s.cfg.alpha, s.cfg.power, model, s.cfg.constellation,
                                                  modes[static_cast<std::size_t>(l - 1)]);
      for (std::size_t tx = 0; tx < m; ++tx) {
        if (point.stats.tx_count(l, tx) == 0) continue;
        for (std::size_t rx = 0; rx < m; ++rx) {
          if (tx == rx) continue;
          const auto e = noma::empirical_pep(point.stats, l, tx, rx, noma::PepEstimator::pairwise_event);
          tables[static_cast<std::size_t>(l - 1)].add_row(
              {noma::format_number(point.snr_db), noma::format_number(static_cast<int>(tx)),
               noma::format_number(static_cast<int>(rx)), noma::format_number(table.at(tx, rx)),
               noma::format_number(e.value), noma::format_number(e.half_width), noma::format_number(e.events)});
        }
      }
    }
  }
  for (int l = 1; l <= s.cfg.num_users(); ++l)
    run.write("fig2_user" + std::to_string(l) + ".csv", tables[static_cast<std::size_t>(l - 1)]);
  return kOk;
}

int cmd_fig3(const Settings& s, Run& run) {
  const auto curves = diversity_curves(s);
  noma::CsvTable pep({"snr_db", "user", "pep"});
  for (const auto& [c, t] : curves)
    for (const auto& p : c.points)
      pep.add_row({noma::format_number(p.snr_db), noma::format_number(c.user), noma::format_number(p.pep)});
  run.write("fig3_pep.csv", pep);
  run.write("fig3_diversity.csv", noma::diversity_table(curves));
  return kOk;
}

int cmd_fig4(const Settings& s, Run& run) { return optimize_at(s, run, "fig4_"); }

int cmd_consistency(const Settings& s, Run& run) {
  run.write("consistency.csv", noma::consistency_table(noma::consistency_rows(s.cfg.sigma_h_sq)));
  return kOk;
}

struct Command {
  const char* name;
  const char* help;
  int (*fn)(const Settings&, Run&);
  std::map<std::string, std::string> recipe;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Command> commands = {
      {"pep", "analytic average PEP per user and symbol pair", cmd_pep, {}},
      {"simulate", "Monte Carlo error statistics", cmd_simulate, {}},
      {"diversity", "effective diversity of the analytic PEP curves", cmd_diversity, {}},
      {"bound", "high-SNR PEP bounds against exact PEP", cmd_bound, {}},
      {"optimize", "power-allocation grid search", cmd_optimize, {{"snr-db", "30"}}},
      {"fig2", "analytic vs simulated PEP, three users", cmd_fig2,
       {{"alpha", "0.7,0.2,0.1"}, {"sic-mode", "weighted"}}},
      {"fig3", "diversity convergence, three users", cmd_fig3, {{"alpha", "0.7,0.2,0.1"}, {"snr-db", "0:1:40"}}},
      {"fig4", "two-user sweep at 30 dB", cmd_fig4,
       {{"alpha", "0.8,0.2"}, {"snr-db", "30"}, {"pth", "1e-3"}, {"grid-step", "1e-3"}, {"sic-mode", "weighted"}}},
      {"consistency", "closed forms against quadrature", cmd_consistency, {}},
  };

  CLI::App app{"NOMA pairwise error probability, diversity and power allocation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  std::map<std::string, std::string> raw;
  std::string config_path;
  std::string out;
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    for (const auto& [key, help] : kKeys) sub->add_option("--" + key, raw[key], help);
    sub->add_option("--config", config_path, "key = value file; flags override it");
    sub->add_option("--out", out, "output directory");
    subs.emplace_back(sub, &c);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  for (const auto& [sub, cmd] : subs) {
    if (!sub->parsed()) continue;
    std::map<std::string, std::string> flags;
    for (const auto& [key, help] : kKeys)
      if (sub->count("--" + key) > 0) flags[key] = raw[key];
    if (sub->count("--out") > 0) flags["out"] = out;
    try {
      const auto start = std::chrono::steady_clock::now();
      const Settings s = resolve(flags, config_path, cmd->recipe);
      Run run(s);
      const int code = cmd->fn(s, run);
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
      run.manifest(cmd->name, std::vector<std::string>(argv, argv + argc), elapsed.count());
      return code;
    } catch (const noma::EnumerationCapError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kEnumerationCap;
    } catch (const noma::NumericalError& e) {
      std::cerr << "numerical failure: " << e.what() << "\n";
      return kNumerical;
    } catch (const std::logic_error& e) {  // ConfigError and library domain checks
      std::cerr << "config error: " << e.what() << "\n";
      return kConfig;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kNumerical;
    }
  }
  return kUsage;
}
