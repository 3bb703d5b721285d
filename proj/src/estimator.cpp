#include "msgmimc/estimator.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace msgmimc::mimc {

void EstimatorConfig::validate() const {
  prior.validate();
  solver.validate();
  if (p0 < 1 || q0 < 1)
    throw std::invalid_argument("EstimatorConfig: p0, q0 must be >= 1");
  if (qoi.kind == QoIKind::average && (p0 < 2 || q0 < 2))
    throw std::invalid_argument(
        "EstimatorConfig: subdomain average needs p0, q0 >= 2");
  if (!(eps > 0.0)) throw std::invalid_argument("EstimatorConfig: eps > 0");
  if (n_min < 2) throw std::invalid_argument("EstimatorConfig: n_min >= 2");
  if (refit_every < 1)
    throw std::invalid_argument("EstimatorConfig: refit_every >= 1");
  if (cap_exp_sum > 0 && cap_exp_sum < p0 + q0)
    throw std::invalid_argument("EstimatorConfig: cap below the (0,0) grid");
  if (threads < 1) throw std::invalid_argument("EstimatorConfig: threads >= 1");
  if (!(init_r1 > 0.0 && init_r2 > 0.0))
    throw std::invalid_argument("EstimatorConfig: initial rates > 0");
}

namespace {

// Deterministic clamp into the feasible region. Rectangular caps clamp each
// component; the p + q budget then shrinks the larger component first
// (ties shrink l2).
MultiIndex clamp_index(MultiIndex L, const EstimatorConfig& cfg,
                       bool* clamped) {
  MultiIndex out = L;
  if (cfg.cap_l1 >= 0) out.l1 = std::min(out.l1, cfg.cap_l1);
  if (cfg.cap_l2 >= 0) out.l2 = std::min(out.l2, cfg.cap_l2);
  if (cfg.cap_exp_sum > 0) {
    const int budget = cfg.cap_exp_sum - cfg.p0 - cfg.q0;
    while (out.l1 + out.l2 > budget) {
      if (out.l2 >= out.l1)
        --out.l2;
      else
        --out.l1;
    }
  }
  *clamped = !(out == L);
  return out;
}

GridFn unit_rhs(GridLevel lv) {
  GridFn b(lv);
  for (int j = 1; j < lv.ny() - 1; ++j)
    for (int i = 1; i < lv.nx() - 1; ++i) b(i, j) = 1.0;
  return b;
}

// Everything after the index draw: field, one FMSG solve, the QoI tensor.
DrawResult solve_box(std::uint64_t n, MultiIndex L, const EstimatorConfig& cfg) {
  DrawResult out;
  out.L = L;
  const GridLevel top{cfg.p0 + L.l1, cfg.q0 + L.l2};

  FieldRealization f;
  if (cfg.zero_field) {
    f.level = top;
    f.z = GridFn(top);
    f.hyper = CovarianceSpec{cfg.prior.nu, cfg.prior.lambda, 1.0, 0.0};
    f.seed = n;
  } else {
    rng::Stream hyper_stream(cfg.seed, n, rng::Lane::hyper);
    const CovarianceSpec spec = draw_hyper(cfg.prior, hyper_stream);
    const int factor = embedding_size(std::max(top.p, top.q), spec.nu);
    const Spectrum sp = embed_eigenvalues(spec, top, factor);
    rng::Stream field_stream(cfg.seed, n, rng::Lane::field);
    f = sample_field(sp, spec, top, field_stream, n);
  }

  MsgHierarchy h(f, cfg.averaging);
  const auto t0 = std::chrono::steady_clock::now();
  const FmsgResult fr = msg_f_cycle(h, unit_rhs(top), cfg.solver);
  out.wall_solve = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
  out.fmsg_cycles = fr.total_cycles;

  // QoI on every grid of the index box; the one solve funds them all.
  BoxFn q(L);
  for (int b = 0; b <= L.l2; ++b)
    for (int a = 0; a <= L.l1; ++a) {
      const GridLevel lv{cfg.p0 + a, cfg.q0 + b};
      const auto& slot = h.at(lv.p - 1, lv.q - 1);
      if (cfg.qoi.kind == QoIKind::flux) {
        const FieldRealization fc =
            lv == f.level ? f : coarsen_realization(f, lv);
        q.at({a, b}) = eval_qoi(cfg.qoi, slot.sol, fc);
      } else {
        q.at({a, b}) = eval_qoi(cfg.qoi, slot.sol, f);
      }
    }
  const BoxFn dq = delta_tensor(q);
  out.contribs.reserve(dq.v.size());
  for (int b = 0; b <= L.l2; ++b)
    for (int a = 0; a <= L.l1; ++a)
      out.contribs.push_back({{a, b}, dq.at({a, b})});

  out.cost_dof = stencil_cost_dof(L, cfg.p0, cfg.q0);
  for (int b = 0; b <= L.l2; ++b)
    for (int a = 0; a <= L.l1; ++a)
      out.cost_dof_full += stencil_cost_dof({a, b}, cfg.p0, cfg.q0);
  return out;
}

} // namespace

DrawResult draw_Y(std::uint64_t n, const IndexPMF& pmf,
                  const EstimatorConfig& cfg) {
  rng::Stream index_stream(cfg.seed, n, rng::Lane::index);
  const MultiIndex raw = pmf.sample(index_stream);
  bool clamped = false;
  const MultiIndex L = clamp_index(raw, cfg, &clamped);
  DrawResult out = solve_box(n, L, cfg);
  out.clamped = clamped;
  double y = 0.0;
  for (const auto& [tau, dq] : out.contribs) y += dq / pmf.tail_prob(tau);
  out.y = y;
  return out;
}

DrawResult draw_delta(std::uint64_t n, MultiIndex forced,
                      const EstimatorConfig& cfg) {
  DrawResult out = solve_box(n, forced, cfg);
  out.y = out.contribs.back().second; // ΔQ at the forced corner
  return out;
}

namespace {

struct Merge {
  EstimatorAccum acc;
  IndexStats stats;
  std::vector<SampleRecord> samples;
  double cost_rec = 0.0, cost_full = 0.0;
  bool bias = false;

  void add(const DrawResult& d, const EstimatorConfig& cfg) {
    acc.add(d.y);
    samples.push_back({d.y, d.L, d.clamped});
    bias = bias || d.clamped;
    cost_rec += d.cost_dof;
    cost_full += d.cost_dof_full;
    for (const auto& [tau, dq] : d.contribs) {
      stats.record_dq(tau, dq);
      stats.set_cost_dof(tau, stencil_cost_dof(tau, cfg.p0, cfg.q0));
    }
    stats.record_wall(d.L, d.wall_solve);
  }
};

} // namespace

EstimatorResult run_estimator_with(const EstimatorConfig& cfg,
                                   const DrawFn& draw) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t_start)
        .count();
  };

  IndexPMF pmf = cfg.fixed_pmf
                     ? *cfg.fixed_pmf
                     : IndexPMF::geometric(cfg.init_r1, cfg.init_r2);
  Merge m;
  EstimatorResult out;
  std::uint64_t next = 0;
  bool done = false;

  while (!done) {
    // One batch per pmf snapshot: n_min samples first, then the refit cadence.
    const std::size_t batch =
        next == 0 ? static_cast<std::size_t>(cfg.n_min)
                  : static_cast<std::size_t>(cfg.refit_every);
    std::vector<DrawResult> results(batch);
    if (cfg.threads <= 1) {
      for (std::size_t k = 0; k < batch; ++k)
        results[k] = draw(next + k, pmf);
    } else {
      std::atomic<std::size_t> cursor{0};
      auto worker = [&] {
        for (;;) {
          const std::size_t k = cursor.fetch_add(1);
          if (k >= batch) return;
          results[k] = draw(next + k, pmf);
        }
      };
      std::vector<std::thread> pool;
      const int nt = std::min<int>(cfg.threads, static_cast<int>(batch));
      pool.reserve(nt);
      for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }

    // Merge in sample order; the first qualifying sample stops the run and
    // later results of the batch are discarded, independent of threading.
    for (std::size_t k = 0; k < batch; ++k) {
      m.add(results[k], cfg);
      const std::size_t N = static_cast<std::size_t>(m.acc.count());
      if (N >= static_cast<std::size_t>(cfg.n_min) &&
          std::sqrt(m.acc.V()) <= cfg.eps) {
        done = true;
        break;
      }
      if (N >= cfg.max_samples ||
          (cfg.max_seconds > 0.0 && elapsed() > cfg.max_seconds)) {
        out.budget_exhausted = true;
        done = true;
        break;
      }
    }
    next += batch;

    if (!done && !cfg.fixed_pmf) {
      const Rates r = fit_rates(m.stats, 2, cfg.fit_wall);
      bool degenerate = false;
      pmf = update_pmf(pmf, r, &degenerate);
      out.degeneracy_warned = out.degeneracy_warned || degenerate;
    }
  }

  out.E = m.acc.E();
  out.V = m.acc.count() >= 2 ? m.acc.V() : 0.0;
  out.N = static_cast<std::size_t>(m.acc.count());
  out.bias_flagged = m.bias;
  out.stats = std::move(m.stats);
  out.fitted = fit_rates(out.stats, 2, cfg.fit_wall);
  out.pmf_r1 = pmf.r1();
  out.pmf_r2 = pmf.r2();
  out.cost_recycled_dof = m.cost_rec;
  out.cost_non_recycled_dof = m.cost_full;
  out.samples = std::move(m.samples);
  out.wall_seconds = elapsed();
  return out;
}

EstimatorResult run_estimator(const EstimatorConfig& cfg) {
  return run_estimator_with(
      cfg, [&cfg](std::uint64_t n, const IndexPMF& pmf) {
        return draw_Y(n, pmf, cfg);
      });
}

std::string dump_state_json(const EstimatorResult& r,
                            const EstimatorConfig& cfg) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["qoi"] = cfg.qoi.name();
  j["base"] = {cfg.p0, cfg.q0};
  j["eps"] = cfg.eps;
  j["seed"] = cfg.seed;
  j["E"] = r.E;
  j["V"] = r.V;
  j["N"] = r.N;
  j["bias_flag"] = r.bias_flagged;
  j["degeneracy_warning"] = r.degeneracy_warned;
  j["budget_exhausted"] = r.budget_exhausted;
  j["pmf"] = {{"mode", "model"}, {"rates", {r.pmf_r1, r.pmf_r2}}};
  if (r.fitted.ok) {
    j["fitted_rates"] = {
        {"alpha", {r.fitted.alpha[0], r.fitted.alpha[1]}},
        {"beta", {r.fitted.beta[0], r.fitted.beta[1]}},
        {"gamma", {r.fitted.gamma[0], r.fitted.gamma[1]}},
        {"se_alpha", {r.fitted.se_alpha[0], r.fitted.se_alpha[1]}},
        {"se_beta", {r.fitted.se_beta[0], r.fitted.se_beta[1]}},
        {"se_gamma", {r.fitted.se_gamma[0], r.fitted.se_gamma[1]}}};
  } else {
    j["fitted_rates"] = nullptr;
  }
  j["costs"] = {{"recycled_dof", r.cost_recycled_dof},
                {"non_recycled_dof", r.cost_non_recycled_dof},
                {"ratio", r.cost_recycled_dof > 0.0
                              ? r.cost_non_recycled_dof / r.cost_recycled_dof
                              : 0.0}};
  nlohmann::json idx = nlohmann::json::array();
  for (const auto& [l, c] : r.stats.cells()) {
    idx.push_back({{"l", {l.l1, l.l2}},
                   {"count", c.n},
                   {"mean", c.mean},
                   {"var", c.var()},
                   {"cost_dof", c.cost_dof}});
  }
  j["indices"] = std::move(idx);
  return j.dump(2);
}

} // namespace msgmimc::mimc
