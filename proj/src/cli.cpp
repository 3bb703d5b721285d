#include "msgmimc/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "msgmimc/estimator.hpp"
#include "msgmimc/field.hpp"
#include "msgmimc/kernels.hpp"
#include "msgmimc/msg.hpp"

namespace msgmimc::cli {

namespace fs = std::filesystem;

namespace {

std::string fmtg(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// numpy-style linear interpolation quantile on sorted data
double quantile(std::vector<double> x, double prob) {
  std::sort(x.begin(), x.end());
  if (x.empty()) return 0.0;
  const double h = prob * static_cast<double>(x.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= x.size()) return x.back();
  const double w = h - static_cast<double>(lo);
  return (1.0 - w) * x[lo] + w * x[lo + 1];
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::string t = s;
  std::replace(t.begin(), t.end(), ',', ' ');
  std::istringstream in(t);
  double v;
  while (in >> v) out.push_back(v);
  return out;
}

std::vector<std::string> parse_words(const std::string& s) {
  std::vector<std::string> out;
  std::string t = s;
  std::replace(t.begin(), t.end(), ',', ' ');
  std::istringstream in(t);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

// Config access with defaults; every lookup lands in `resolved`.
class Params {
 public:
  Params(const Options& opt) {
    if (!opt.config_path.empty()) kv_ = parse_config_file(opt.config_path);
    for (const auto& [k, v] : opt.extra) kv_[k] = v;
  }

  std::string gets(const std::string& key, const std::string& dflt) {
    const auto it = kv_.find(key);
    const std::string v = it == kv_.end() ? dflt : it->second;
    resolved_[key] = v;
    return v;
  }
  double getd(const std::string& key, double dflt) {
    return std::stod(gets(key, fmtg(dflt)));
  }
  long long geti(const std::string& key, long long dflt) {
    return std::stoll(gets(key, std::to_string(dflt)));
  }
  std::vector<double> getv(const std::string& key, const std::string& dflt) {
    return parse_list(gets(key, dflt));
  }
  std::vector<std::string> getw(const std::string& key,
                                const std::string& dflt) {
    return parse_words(gets(key, dflt));
  }

  void write_resolved(const fs::path& dir) const {
    std::ofstream f(dir / "resolved_config.txt");
    for (const auto& [k, v] : resolved_) f << k << " = " << v << "\n";
  }

 private:
  std::map<std::string, std::string> kv_;
  std::map<std::string, std::string> resolved_;
};

fs::path prepare_out(const Options& opt) {
  fs::path dir(opt.out_dir);
  fs::create_directories(dir);
  return dir;
}

CycleConfig solver_config(Params& p, const std::string& prefix,
                          double eps_dflt) {
  CycleConfig cfg;
  cfg.mu = static_cast<int>(p.geti(prefix + ".mu", 2));
  cfg.nu1 = static_cast<int>(p.geti(prefix + ".nu1", 2));
  cfg.nu2 = static_cast<int>(p.geti(prefix + ".nu2", 2));
  cfg.damping = p.getd(prefix + ".damping", 0.9);
  cfg.nu0_max = static_cast<int>(p.geti(prefix + ".nu0_max", 50));
  cfg.eps_solver = p.getd(prefix + ".eps_solver", eps_dflt);
  return cfg;
}

HyperPrior prior_config(Params& p) {
  HyperPrior prior;
  prior.nu = p.getd("prior.nu", 0.5);
  prior.lambda = p.getd("prior.lambda", 0.25);
  prior.eta_lo = p.getd("prior.eta_lo", 1.0 / 16.0);
  prior.eta_hi = p.getd("prior.eta_hi", 0.25);
  prior.theta_lo = p.getd("prior.theta_deg_lo", -30.0) * M_PI / 180.0;
  prior.theta_hi = p.getd("prior.theta_deg_hi", 30.0) * M_PI / 180.0;
  return prior;
}

struct CycleCode {
  std::string code;
  int mu, nu1, nu2;
};

CycleCode parse_cycle(const std::string& code) {
  if (code.size() != 3 || (code[0] != 'V' && code[0] != 'W') ||
      !std::isdigit(code[1]) || !std::isdigit(code[2]))
    throw std::invalid_argument("bad cycle code '" + code +
                                "' (expect e.g. V11 or W22)");
  return {code, code[0] == 'V' ? 1 : 2, code[1] - '0', code[2] - '0'};
}

int default_base(const QoISpec& q) {
  return q.kind == QoIKind::point ? 2 : 4;
}

void run_tasks(int threads, std::size_t count,
               const std::function<void(std::size_t)>& fn) {
  if (threads <= 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> cursor{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t k = cursor.fetch_add(1);
      if (k >= count) return;
      fn(k);
    }
  };
  std::vector<std::thread> pool;
  const int nt = std::min<std::size_t>(threads, count);
  for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

} // namespace

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto strip = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string t = strip(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected key = value");
    kv[strip(t.substr(0, eq))] = strip(t.substr(eq + 1));
  }
  return kv;
}

// ---------------------------------------------------------------------------
// solve-bench: residual trajectories and convergence factors for MG and MSG
// over a grid of (eta, theta) pairs, matching the robustness experiments.
// ---------------------------------------------------------------------------

int run_solve_bench(const Options& opt) {
  Params p(opt);
  const fs::path dir = prepare_out(opt);

  const int gp = static_cast<int>(p.geti("solve_bench.p", 6));
  const int gq = static_cast<int>(p.geti("solve_bench.q", 6));
  const auto etas = p.getv("solve_bench.etas", "0.25 0.125 0.0625");
  const auto thetas = p.getv("solve_bench.thetas_deg", "0 10 20 30");
  const int samples = static_cast<int>(p.geti("solve_bench.samples", 100));
  const int cycles = static_cast<int>(p.geti("solve_bench.cycles", 50));
  const double floor_rel = p.getd("solve_bench.stop_floor", 1e-13);
  const double mark = p.getd("solve_bench.mark_tol", 1e-8);
  const auto strategies = p.getw("solve_bench.cycles_list", "W22");
  const auto solvers = p.getw("solve_bench.solvers", "msg mg");
  const double nu = p.getd("prior.nu", 0.5);
  const double lambda = p.getd("prior.lambda", 0.25);
  CycleConfig msg_cfg = solver_config(p, "solver", 1e-8);
  const double mg_damping = p.getd("solve_bench.mg_damping", 1.0);
  const std::uint64_t seed = opt.seed.value_or(p.geti("seed", 2024));
  const int threads = opt.threads.value_or(p.geti("threads", 1));
  p.write_resolved(dir);

  const GridLevel lv{gp, gq};
  const bool want_msg =
      std::find(solvers.begin(), solvers.end(), "msg") != solvers.end();
  const bool want_mg =
      std::find(solvers.begin(), solvers.end(), "mg") != solvers.end();
  if (want_mg && gp != gq)
    throw std::invalid_argument("solve-bench: the MG baseline needs p == q");

  struct Cell {
    double eta, theta_deg;
    Spectrum spectrum;
    CovarianceSpec spec;
  };
  std::vector<Cell> cells;
  const int factor = embedding_size(std::max(gp, gq), nu);
  for (double eta : etas)
    for (double th : thetas) {
      CovarianceSpec spec{nu, lambda, eta, th * M_PI / 180.0};
      cells.push_back({eta, th, embed_eigenvalues(spec, lv, factor), spec});
    }

  struct RunOut {
    std::vector<double> msg_rel, mg_rel;
  };
  std::vector<RunOut> results(cells.size() * samples);

  std::vector<CycleCode> codes;
  for (const auto& s : strategies) codes.push_back(parse_cycle(s));

  // One CSV block per cycle strategy; realizations are shared between the
  // two solvers of a task and across strategies via the sample id.
  std::ofstream longcsv(dir / "residuals_long.csv");
  longcsv << "solver,eta,theta_deg,cycle,sample,cycle_index,resnorm\n";
  std::ofstream qcsv(dir / "residuals_quantiles.csv");
  qcsv << "solver,eta,theta_deg,cycle,cycle_index,q20,q40,q50,q60,q80\n";
  std::ofstream fcsv(dir / "factors.csv");
  fcsv << "solver,eta,theta_deg,cycle,sample,factor,diverged,cycles_to_mark\n";
  nlohmann::json summary;
  summary["schema_version"] = 1;
  summary["mark_tol"] = mark;
  nlohmann::json jcells = nlohmann::json::array();

  for (const auto& code : codes) {
    CycleConfig mcfg = msg_cfg;
    mcfg.mu = code.mu;
    mcfg.nu1 = code.nu1;
    mcfg.nu2 = code.nu2;
    CycleConfig gcfg = mcfg;
    gcfg.damping = mg_damping;

    run_tasks(threads, results.size(), [&](std::size_t k) {
      const std::size_t ci = k / samples;
      const int si = static_cast<int>(k % samples);
      const Cell& cell = cells[ci];
      rng::Stream stream(seed, k, rng::Lane::field);
      const FieldRealization f =
          sample_field(cell.spectrum, cell.spec, lv, stream, k);
      GridFn b(lv);
      for (int j = 1; j < lv.ny() - 1; ++j)
        for (int i = 1; i < lv.nx() - 1; ++i) b(i, j) = 1.0;
      RunOut out;
      if (want_msg) {
        MsgHierarchy h(f);
        out.msg_rel = msg_iterate(h, b, mcfg, cycles, floor_rel).rel;
      }
      if (want_mg) {
        MgHierarchy h(f);
        out.mg_rel = mg_iterate(h, b, gcfg, cycles, floor_rel).rel;
      }
      (void)si;
      results[k] = std::move(out);
    });

    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
      const Cell& cell = cells[ci];
      for (const char* solver : {"msg", "mg"}) {
        const bool is_msg = std::string(solver) == "msg";
        if (is_msg ? !want_msg : !want_mg) continue;
        // long rows, padded with the final value once a run stops early
        std::vector<std::vector<double>> padded(samples);
        for (int si = 0; si < samples; ++si) {
          const auto& hist = is_msg ? results[ci * samples + si].msg_rel
                                    : results[ci * samples + si].mg_rel;
          padded[si] = hist;
          padded[si].resize(cycles + 1, hist.back());
          for (int c = 0; c <= cycles; ++c)
            longcsv << solver << ',' << fmtg(cell.eta) << ','
                    << fmtg(cell.theta_deg) << ',' << code.code << ',' << si
                    << ',' << c << ',' << fmtg(padded[si][c]) << '\n';
        }
        int converged = 0;
        std::vector<double> factors;
        for (int si = 0; si < samples; ++si) {
          const auto& hist = is_msg ? results[ci * samples + si].msg_rel
                                    : results[ci * samples + si].mg_rel;
          const ConvergenceFactor cf = convergence_factor(hist);
          IterationHistory ih;
          ih.rel = hist;
          const int c8 = ih.cycles_to(mark);
          if (c8 >= 0) ++converged;
          factors.push_back(cf.factor);
          fcsv << solver << ',' << fmtg(cell.eta) << ','
               << fmtg(cell.theta_deg) << ',' << code.code << ',' << si << ','
               << fmtg(cf.factor) << ',' << (cf.diverged ? 1 : 0) << ',' << c8
               << '\n';
        }
        for (int c = 0; c <= cycles; ++c) {
          std::vector<double> col(samples);
          for (int si = 0; si < samples; ++si) col[si] = padded[si][c];
          qcsv << solver << ',' << fmtg(cell.eta) << ',' << fmtg(cell.theta_deg)
               << ',' << code.code << ',' << c;
          for (double pr : {0.2, 0.4, 0.5, 0.6, 0.8})
            qcsv << ',' << fmtg(quantile(col, pr));
          qcsv << '\n';
        }
        nlohmann::json jc;
        jc["solver"] = solver;
        jc["cycle"] = code.code;
        jc["eta"] = cell.eta;
        jc["theta_deg"] = cell.theta_deg;
        jc["median_factor"] = quantile(factors, 0.5);
        jc["converged_fraction"] =
            static_cast<double>(converged) / static_cast<double>(samples);
        jcells.push_back(jc);
      }
    }
  }
  summary["cells"] = std::move(jcells);
  std::ofstream(dir / "summary.json") << summary.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// rates: fixed-sample pilot runs on every index of a small box, then the
// weighted log-linear fit of (alpha, beta, gamma).
// ---------------------------------------------------------------------------

int run_rates(const Options& opt) {
  Params p(opt);
  const fs::path dir = prepare_out(opt);

  mimc::EstimatorConfig cfg;
  cfg.qoi = qoi_from_name(opt.qoi.value_or(p.gets("qoi", "point")));
  cfg.p0 = static_cast<int>(p.geti("rates.p0", default_base(cfg.qoi)));
  cfg.q0 = static_cast<int>(p.geti("rates.q0", default_base(cfg.qoi)));
  cfg.prior = prior_config(p);
  cfg.solver = solver_config(p, "solver", 1e-10);
  cfg.seed = opt.seed.value_or(p.geti("seed", 2024));
  const int box = static_cast<int>(p.geti("rates.box", 5));
  const int per_index =
      static_cast<int>(p.geti("rates.samples_per_index", 32));
  const int threads = opt.threads.value_or(p.geti("threads", 1));
  const long long min_count = p.geti("rates.min_count", 2);
  p.write_resolved(dir);

  const std::size_t n_cells = static_cast<std::size_t>(box) * box;
  std::vector<mimc::DrawResult> results(n_cells *
                                        static_cast<std::size_t>(per_index));
  std::string failure;
  std::atomic<bool> failed{false};
  run_tasks(threads, results.size(), [&](std::size_t k) {
    if (failed.load()) return;
    const std::size_t cell = k / per_index;
    const mimc::MultiIndex l{static_cast<int>(cell % box),
                             static_cast<int>(cell / box)};
    try {
      results[k] = mimc::draw_delta(k, l, cfg);
    } catch (const SolverFailure& e) {
      failed.store(true);
      failure = std::string("index (") + std::to_string(l.l1) + "," +
                std::to_string(l.l2) + "): " + e.what();
    }
  });
  if (failed.load()) {
    std::cerr << "rates: pilot solve failed at " << failure << "\n";
    return 3;
  }

  mimc::IndexStats stats;
  for (std::size_t k = 0; k < results.size(); ++k) {
    const auto& d = results[k];
    stats.record_dq(d.L, d.y);
    stats.set_cost_dof(d.L, mimc::stencil_cost_dof(d.L, cfg.p0, cfg.q0));
    stats.record_wall(d.L, d.wall_solve);
  }
  const mimc::Rates rates = mimc::fit_rates(stats, min_count, false);

  std::ofstream scsv(dir / ("pilot_stats_" + cfg.qoi.name() + ".csv"));
  scsv << "l1,l2,count,mean,var,cost_dof,mean_wall_seconds\n";
  for (const auto& [l, c] : stats.cells())
    scsv << l.l1 << ',' << l.l2 << ',' << c.n << ',' << fmtg(c.mean) << ','
         << fmtg(c.var()) << ',' << fmtg(c.cost_dof) << ','
         << fmtg(c.n_wall ? c.wall_sum / c.n_wall : 0.0) << '\n';

  nlohmann::json j;
  j["schema_version"] = 1;
  j["qoi"] = cfg.qoi.name();
  j["base"] = {cfg.p0, cfg.q0};
  j["box"] = box;
  j["samples_per_index"] = per_index;
  j["seed"] = cfg.seed;
  if (!rates.ok) {
    j["rates"] = nullptr;
  } else {
    j["rates"] = {{"alpha", {rates.alpha[0], rates.alpha[1]}},
                  {"beta", {rates.beta[0], rates.beta[1]}},
                  {"gamma", {rates.gamma[0], rates.gamma[1]}},
                  {"se_alpha", {rates.se_alpha[0], rates.se_alpha[1]}},
                  {"se_beta", {rates.se_beta[0], rates.se_beta[1]}},
                  {"se_gamma", {rates.se_gamma[0], rates.se_gamma[1]}}};
  }
  std::ofstream(dir / ("rates_" + cfg.qoi.name() + ".json")) << j.dump(2)
                                                             << "\n";
  std::cout << "rates(" << cfg.qoi.name() << "): ";
  if (rates.ok)
    std::cout << "alpha=(" << rates.alpha[0] << "," << rates.alpha[1]
              << ") beta=(" << rates.beta[0] << "," << rates.beta[1]
              << ") gamma=(" << rates.gamma[0] << "," << rates.gamma[1]
              << ")\n";
  else
    std::cout << "insufficient data\n";
  return 0;
}

// ---------------------------------------------------------------------------
// estimate: the unbiased estimator over an eps and seed list, with the cost
// accounting of recycled vs non-recycled sampling.
// ---------------------------------------------------------------------------

int run_estimate(const Options& opt) {
  Params p(opt);
  const fs::path dir = prepare_out(opt);

  mimc::EstimatorConfig base;
  base.qoi = qoi_from_name(opt.qoi.value_or(p.gets("qoi", "point")));
  base.p0 = static_cast<int>(p.geti("estimate.p0", default_base(base.qoi)));
  base.q0 = static_cast<int>(p.geti("estimate.q0", default_base(base.qoi)));
  base.prior = prior_config(p);
  base.solver = solver_config(p, "solver", 1e-8);
  base.n_min = static_cast<int>(p.geti("estimate.n_min", 32));
  base.refit_every = static_cast<int>(p.geti("estimate.refit_every", 16));
  base.cap_exp_sum = static_cast<int>(p.geti("estimate.cap_exp_sum", 14));
  base.max_samples = static_cast<std::size_t>(
      p.geti("estimate.max_samples", 500000));
  base.max_seconds = p.getd("estimate.max_seconds", 0.0);
  base.threads = opt.threads.value_or(p.geti("threads", 1));
  base.init_r1 = p.getd("estimate.init_r1", 0.5 * M_LN2 * 5.0);
  base.init_r2 = p.getd("estimate.init_r2", 0.5 * M_LN2 * 5.0);

  std::vector<double> eps_list =
      !opt.eps.empty() ? opt.eps : p.getv("estimate.eps", "1e-3");
  std::vector<double> seeds_d = p.getv("estimate.seeds", "1 2 3");
  if (opt.seed) seeds_d = {static_cast<double>(*opt.seed)};
  p.write_resolved(dir);

  std::ofstream runs(dir / "estimate_runs.csv");
  runs << "qoi,eps,seed,E,sqrtV,N,bias_flag,recycled_dof,non_recycled_dof,"
          "cost_ratio,budget_exhausted,wall_seconds\n";
  std::ofstream occ(dir / "index_occupancy.csv");
  occ << "qoi,eps,seed,l1,l2,count\n";

  bool any_budget = false;
  for (double eps : eps_list) {
    for (double sd : seeds_d) {
      mimc::EstimatorConfig cfg = base;
      cfg.eps = eps;
      cfg.seed = static_cast<std::uint64_t>(sd);
      const mimc::EstimatorResult r = mimc::run_estimator(cfg);
      any_budget = any_budget || r.budget_exhausted;
      const double ratio = r.cost_recycled_dof > 0.0
                               ? r.cost_non_recycled_dof / r.cost_recycled_dof
                               : 0.0;
      runs << cfg.qoi.name() << ',' << fmtg(eps) << ',' << cfg.seed << ','
           << fmtg(r.E) << ',' << fmtg(std::sqrt(r.V)) << ',' << r.N << ','
           << (r.bias_flagged ? 1 : 0) << ',' << fmtg(r.cost_recycled_dof)
           << ',' << fmtg(r.cost_non_recycled_dof) << ',' << fmtg(ratio) << ','
           << (r.budget_exhausted ? 1 : 0) << ',' << fmtg(r.wall_seconds)
           << '\n';
      for (const auto& [l, c] : r.stats.cells())
        occ << cfg.qoi.name() << ',' << fmtg(eps) << ',' << cfg.seed << ','
            << l.l1 << ',' << l.l2 << ',' << c.n << '\n';
      std::ostringstream tag;
      tag << "estimate_" << cfg.qoi.name() << "_eps" << fmtg(eps) << "_seed"
          << cfg.seed;
      std::ofstream(dir / (tag.str() + ".json"))
          << mimc::dump_state_json(r, cfg) << "\n";
      nlohmann::json timing;
      timing["wall_seconds"] = r.wall_seconds;
      std::ofstream(dir / (tag.str() + "_timing.json")) << timing.dump(2)
                                                        << "\n";
    }
  }
  return any_budget ? 2 : 0;
}

// ---------------------------------------------------------------------------
// cost-theorem: predicted cost reduction factor next to a measured ratio.
// ---------------------------------------------------------------------------

int run_cost_theorem(const Options& opt) {
  Params p(opt);
  const fs::path dir = prepare_out(opt);

  std::vector<double> beta = p.getv("cost_theorem.beta", "4 4");
  std::vector<double> gamma = p.getv("cost_theorem.gamma", "1 1");
  const std::string rates_json = p.gets("cost_theorem.rates_json", "");
  const std::string estimate_json = p.gets("cost_theorem.estimate_json", "");
  p.write_resolved(dir);

  if (!rates_json.empty()) {
    std::ifstream f(rates_json);
    if (!f) throw std::runtime_error("cannot open " + rates_json);
    nlohmann::json j = nlohmann::json::parse(f);
    const nlohmann::json& r =
        j.contains("rates") ? j["rates"] : j["fitted_rates"];
    beta = {r["beta"][0], r["beta"][1]};
    gamma = {r["gamma"][0], r["gamma"][1]};
  }
  const double factor = mimc::cost_reduction_factor(beta, gamma);
  double measured_ratio = 0.0;
  bool have_measured = false;
  if (!estimate_json.empty()) {
    std::ifstream f(estimate_json);
    if (!f) throw std::runtime_error("cannot open " + estimate_json);
    nlohmann::json j = nlohmann::json::parse(f);
    measured_ratio = j["costs"]["ratio"];
    have_measured = true;
  }

  std::ofstream csv(dir / "cost_theorem.csv");
  csv << "beta1,beta2,gamma1,gamma2,predicted_factor,predicted_ratio,"
         "measured_ratio,rel_diff\n";
  const double pred_ratio = factor > 0.0 ? 1.0 / factor : 0.0;
  csv << fmtg(beta[0]) << ',' << fmtg(beta[1]) << ',' << fmtg(gamma[0]) << ','
      << fmtg(gamma[1]) << ',' << fmtg(factor) << ',' << fmtg(pred_ratio)
      << ',';
  if (have_measured) {
    const double measured_factor =
        measured_ratio > 0.0 ? 1.0 / measured_ratio : 0.0;
    csv << fmtg(measured_ratio) << ','
        << fmtg(std::abs(measured_factor - factor) / factor) << '\n';
  } else {
    csv << ",\n";
  }
  std::cout << "predicted cost reduction factor: " << fmtg(factor)
            << "  (non-recycled/recycled ratio " << fmtg(pred_ratio) << ")\n";
  if (have_measured)
    std::cout << "measured ratio: " << fmtg(measured_ratio) << "\n";
  return 0;
}

int run_dump_field(const Options& opt) {
  Params p(opt);
  const fs::path dir = prepare_out(opt);
  CovarianceSpec spec;
  spec.nu = p.getd("prior.nu", 0.5);
  spec.lambda = p.getd("prior.lambda", 0.25);
  spec.eta = p.getd("field.eta", 0.25);
  spec.theta = p.getd("field.theta_deg", 0.0) * M_PI / 180.0;
  const GridLevel lv{static_cast<int>(p.geti("field.p", 5)),
                     static_cast<int>(p.geti("field.q", 5))};
  const std::uint64_t seed = opt.seed.value_or(p.geti("seed", 2024));
  p.write_resolved(dir);
  const int factor = embedding_size(std::max(lv.p, lv.q), spec.nu);
  const Spectrum sp = embed_eigenvalues(spec, lv, factor);
  rng::Stream stream(seed, 0, rng::Lane::field);
  const FieldRealization f = sample_field(sp, spec, lv, stream, 0);
  dump_realization(f, (dir / "field.txt").string());
  return 0;
}

int main_entry(int argc, char** argv) {
  CLI::App app{"MSG/FMSG elliptic solver with an unbiased multi-index Monte "
               "Carlo estimator"};
  app.require_subcommand(1);

  Options opt;
  std::vector<std::string> extra_kv;
  for (const char* name : {"solve-bench", "rates", "estimate", "cost-theorem",
                           "dump-field"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", opt.config_path, "config file");
    sub->add_option("--out", opt.out_dir, "output directory");
    std::uint64_t seed_val = 0;
    sub->add_option("--seed", seed_val, "seed override")
        ->each([&opt](const std::string& s) { opt.seed = std::stoull(s); });
    int thr = 0;
    sub->add_option("--threads", thr, "worker threads")
        ->each([&opt](const std::string& s) { opt.threads = std::stoi(s); });
    std::string qoi;
    sub->add_option("--qoi", qoi, "point | average | flux")
        ->each([&opt](const std::string& s) { opt.qoi = s; });
    sub->add_option("--eps", opt.eps, "RMSE tolerance list (estimate)");
    sub->add_option("--set", extra_kv, "extra key=value config overrides");
    sub->callback([&opt, name] { opt.command = name; });
  }

  try {
    app.parse(argc, argv);
    for (const auto& kvs : extra_kv) {
      const auto eq = kvs.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("--set expects key=value");
      opt.extra[kvs.substr(0, eq)] = kvs.substr(eq + 1);
    }
    if (opt.command == "solve-bench") return run_solve_bench(opt);
    if (opt.command == "rates") return run_rates(opt);
    if (opt.command == "estimate") return run_estimate(opt);
    if (opt.command == "cost-theorem") return run_cost_theorem(opt);
    if (opt.command == "dump-field") return run_dump_field(opt);
    return 1;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const SolverFailure& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

} // namespace msgmimc::cli
