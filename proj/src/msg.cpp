#include "msgmimc/msg.hpp"

#include <algorithm>
#include <cmath>

#include "msgmimc/kernels.hpp"

namespace msgmimc {

void CycleConfig::validate() const {
  if (mu != 1 && mu != 2)
    throw std::invalid_argument("CycleConfig: mu must be 1 or 2");
  if (nu1 < 0 || nu2 < 0)
    throw std::invalid_argument("CycleConfig: smoothing counts must be >= 0");
  if (!(damping > 0.0 && damping <= 1.0))
    throw std::invalid_argument("CycleConfig: damping must be in (0, 1]");
  if (nu0_max < 1) throw std::invalid_argument("CycleConfig: nu0_max >= 1");
  if (!(eps_solver > 0.0))
    throw std::invalid_argument("CycleConfig: eps_solver must be > 0");
}

void smooth_rbgs(GridFn& v, const StencilOp& A, const GridFn& b, int sweeps) {
  if (!(v.level() == A.level && b.level() == A.level))
    throw std::invalid_argument("smooth_rbgs: level mismatch");
  const auto& ops = kern::active_ops();
  const auto s = A.view();
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    ops.rbgs_color(v.data(), b.data(), s, A.level.nx(), A.level.ny(), 0);
    ops.rbgs_color(v.data(), b.data(), s, A.level.nx(), A.level.ny(), 1);
  }
}

WeightFieldPair weight_factors(const StencilOp& A) {
  const GridLevel lv = A.level;
  GridFn f(lv), g(lv);
  for (int j = 0; j < lv.ny(); ++j)
    for (int i = 0; i < lv.nx(); ++i) {
      f(i, j) = (i & 1) ? -1.0 : 1.0;
      g(i, j) = (j & 1) ? -1.0 : 1.0;
    }
  GridFn af = apply(A, f), ag = apply(A, g);
  WeightFieldPair w{GridFn(lv), GridFn(lv)};
  for (int j = 0; j < lv.ny(); ++j)
    for (int i = 0; i < lv.nx(); ++i) {
      if (i == 0 || i == lv.nx() - 1 || j == 0 || j == lv.ny() - 1) {
        w.kx(i, j) = 0.5;
        w.ky(i, j) = 0.5;
        continue;
      }
      const double lx = af(i, j), ly = ag(i, j);
      const double d = lx * lx + ly * ly;
      if (d == 0.0) {
        w.kx(i, j) = 0.5;
        w.ky(i, j) = 0.5;
      } else {
        w.kx(i, j) = lx * lx / d;
        w.ky(i, j) = 1.0 - w.kx(i, j);
      }
    }
  return w;
}

double interior_norm2(const GridFn& a) {
  return std::sqrt(kern::active_ops().sumsq_interior(a.data(), a.level().nx(),
                                                     a.level().ny()));
}

double rel_residual(const StencilOp& A, const GridFn& v, const GridFn& b) {
  const GridFn r = residual(A, v, b);
  const double nb = interior_norm2(b);
  const double nr = interior_norm2(r);
  return nb > 0.0 ? nr / nb : (nr > 0.0 ? INFINITY : 0.0);
}

MsgHierarchy::MsgHierarchy(const FieldRealization& fine, AveragingRule rule)
    : ox_max_(fine.level.p - 1), oy_max_(fine.level.q - 1) {
  if (fine.level.p < 1 || fine.level.q < 1)
    throw std::invalid_argument("MsgHierarchy: top exponents must be >= 1");
  slots_.resize(static_cast<std::size_t>(ox_max_ + 1) * (oy_max_ + 1));
  for (int a = 0; a <= ox_max_; ++a) {
    for (int b = 0; b <= oy_max_; ++b) {
      Slot& s = slots_[idx(a, b)];
      s.lv = GridLevel{a + 1, b + 1};
      const FieldRealization zc =
          (s.lv == fine.level) ? fine : coarsen_realization(fine, s.lv);
      s.A = assemble(zc, rule);
      s.sol = GridFn(s.lv);
      s.rhs = GridFn(s.lv);
      s.v = GridFn(s.lv);
      s.b = GridFn(s.lv);
      s.r = GridFn(s.lv);
    }
  }
}

std::vector<std::pair<int, int>> MsgHierarchy::diagonal(int d) const {
  std::vector<std::pair<int, int>> out;
  for (int a = std::max(0, d - oy_max_); a <= std::min(ox_max_, d); ++a)
    out.emplace_back(a, d - a);
  return out;
}

namespace {

const WeightFieldPair& weights_of(MsgHierarchy::Slot& s) {
  // A is fixed per realization, so the weights are cycle-invariant.
  if (!s.w_ready) {
    s.w = weight_factors(s.A);
    s.w_ready = true;
  }
  return s.w;
}

// v += damping * (weighted combination of prolonged corrections).
void add_correction(MsgHierarchy& h, int a, int b, const CycleConfig& cfg,
                    Interp kind) {
  auto& s = h.at(a, b);
  const GridFn* vx = a > 0 ? &h.at(a - 1, b).v : nullptr;
  const GridFn* vy = b > 0 ? &h.at(a, b - 1).v : nullptr;
  const auto& ops = kern::active_ops();
  const int nx = s.lv.nx(), ny = s.lv.ny();
  if (vx && vy) {
    const GridFn px = prolong_x(*vx, kind);
    const GridFn py = prolong_y(*vy, kind);
    const WeightFieldPair& w = weights_of(s);
    ops.add_scaled_weighted_pair(s.v.data(), px.data(), py.data(),
                                 w.kx.data(), w.ky.data(), cfg.damping, nx, ny);
  } else if (vx) {
    const GridFn px = prolong_x(*vx, kind);
    ops.add_scaled(s.v.data(), px.data(), cfg.damping, nx, ny);
  } else {
    const GridFn py = prolong_y(*vy, kind);
    ops.add_scaled(s.v.data(), py.data(), cfg.damping, nx, ny);
  }
}

void solve_single_unknown(MsgHierarchy::Slot& s) {
  // Grid (1,1): one interior node.
  s.v(1, 1) = s.b(1, 1) / s.A.cc[static_cast<std::size_t>(1) * s.lv.nx() + 1];
}

} // namespace

void msg_mu_cycle(MsgHierarchy& h, int L, const CycleConfig& cfg) {
  if (L == 0) {
    solve_single_unknown(h.at(0, 0));
    return;
  }
  const auto diag = h.diagonal(L);
  for (auto [a, b] : diag) {
    auto& s = h.at(a, b);
    smooth_rbgs(s.v, s.A, s.b, cfg.nu1);
  }
  for (auto [a, b] : diag) {
    auto& s = h.at(a, b);
    residual(s.A, s.v, s.b, s.r);
  }
  for (auto [a, b] : h.diagonal(L - 1)) {
    auto& s = h.at(a, b);
    const GridFn* rx = a + 1 <= h.ox_max() ? &h.at(a + 1, b).r : nullptr;
    const GridFn* ry = b + 1 <= h.oy_max() ? &h.at(a, b + 1).r : nullptr;
    s.b = combine_restrict(rx, ry);
    s.v.set_zero();
  }
  for (int m = 0; m < cfg.mu; ++m) msg_mu_cycle(h, L - 1, cfg);
  for (auto [a, b] : diag) {
    add_correction(h, a, b, cfg, Interp::linear);
    auto& s = h.at(a, b);
    smooth_rbgs(s.v, s.A, s.b, cfg.nu2);
  }
}

namespace {

// Adaptive mu-cycles on diagonal L of the (v, b) storage until every grid
// meets the tolerance. Returns the per-cycle history of the diagonal's
// worst relative residual.
FmsgLevelStats converge_diagonal(MsgHierarchy& h, int L,
                                 const CycleConfig& cfg) {
  const auto diag = h.diagonal(L);
  std::vector<double> hist;
  FmsgLevelStats stats;
  for (int cyc = 0;; ++cyc) {
    double worst = 0.0;
    GridLevel worst_lv;
    for (auto [a, b] : diag) {
      auto& s = h.at(a, b);
      residual(s.A, s.v, s.b, s.r);
      const double nb = interior_norm2(s.b);
      const double nr = interior_norm2(s.r);
      const double rel = nb > 0.0 ? nr / nb : (nr > 0.0 ? INFINITY : 0.0);
      if (rel >= worst) {
        worst = rel;
        worst_lv = s.lv;
      }
    }
    hist.push_back(worst);
    if (worst <= cfg.eps_solver) {
      stats.cycles = cyc;
      stats.final_rel = worst;
      return stats;
    }
    if (cyc >= cfg.nu0_max)
      throw SolverFailure(worst_lv, hist,
                          "FMSG: grid " + worst_lv.str() +
                              " not converged after " +
                              std::to_string(cfg.nu0_max) + " cycles (rel " +
                              std::to_string(worst) + ")");
    msg_mu_cycle(h, L, cfg);
  }
}

void f_cycle_rec(MsgHierarchy& h, int L, const CycleConfig& cfg,
                 FmsgResult& out) {
  if (L == 0) {
    h.at(0, 0).sol.set_zero();
  } else {
    for (auto [a, b] : h.diagonal(L - 1)) {
      auto& s = h.at(a, b);
      const GridFn* bx = a + 1 <= h.ox_max() ? &h.at(a + 1, b).rhs : nullptr;
      const GridFn* by = b + 1 <= h.oy_max() ? &h.at(a, b + 1).rhs : nullptr;
      s.rhs = combine_restrict(bx, by);
    }
    f_cycle_rec(h, L - 1, cfg, out);
    for (auto [a, b] : h.diagonal(L)) {
      auto& s = h.at(a, b);
      const GridFn* vx = a > 0 ? &h.at(a - 1, b).sol : nullptr;
      const GridFn* vy = b > 0 ? &h.at(a, b - 1).sol : nullptr;
      const WeightFieldPair& w = (vx && vy) ? weights_of(s) : s.w;
      s.sol = combine_prolong(vx, vy, w, Interp::cubic);
    }
  }
  for (auto [a, b] : h.diagonal(L)) {
    auto& s = h.at(a, b);
    s.v = s.sol;
    s.b = s.rhs;
  }
  FmsgLevelStats stats = converge_diagonal(h, L, cfg);
  for (auto [a, b] : h.diagonal(L)) {
    auto& s = h.at(a, b);
    s.sol = s.v;
  }
  out.per_diag[L] = stats;
  out.total_cycles += stats.cycles;
}

} // namespace

FmsgResult msg_f_cycle(MsgHierarchy& h, const GridFn& b_top,
                       const CycleConfig& cfg) {
  cfg.validate();
  if (!(b_top.level() == h.top_level()))
    throw std::invalid_argument("msg_f_cycle: right-hand side level mismatch");
  h.top().rhs = b_top;
  FmsgResult out;
  out.per_diag.resize(h.top_diag() + 1);
  f_cycle_rec(h, h.top_diag(), cfg, out);
  return out;
}

int IterationHistory::cycles_to(double tol) const {
  for (std::size_t i = 0; i < rel.size(); ++i)
    if (rel[i] <= tol) return static_cast<int>(i);
  return -1;
}

IterationHistory msg_iterate(MsgHierarchy& h, const GridFn& b_top,
                             const CycleConfig& cfg, int max_cycles,
                             double stop_rel) {
  cfg.validate();
  auto& top = h.top();
  if (!(b_top.level() == top.lv))
    throw std::invalid_argument("msg_iterate: right-hand side level mismatch");
  top.b = b_top;
  top.v.set_zero();
  IterationHistory out;
  out.rel.push_back(rel_residual(top.A, top.v, top.b));
  for (int c = 0; c < max_cycles && out.rel.back() > stop_rel; ++c) {
    msg_mu_cycle(h, h.top_diag(), cfg);
    out.rel.push_back(rel_residual(top.A, top.v, top.b));
  }
  return out;
}

MgHierarchy::MgHierarchy(const FieldRealization& fine, AveragingRule rule) {
  if (fine.level.p != fine.level.q)
    throw std::invalid_argument("MgHierarchy: needs a square finest grid");
  kbar_ = fine.level.p;
  slots_.resize(kbar_);
  for (int k = 1; k <= kbar_; ++k) {
    Slot& s = slots_[k - 1];
    s.lv = GridLevel{k, k};
    const FieldRealization zc =
        (s.lv == fine.level) ? fine : coarsen_realization(fine, s.lv);
    s.A = assemble(zc, rule);
    s.v = GridFn(s.lv);
    s.b = GridFn(s.lv);
    s.r = GridFn(s.lv);
  }
}

void mg_mu_cycle(MgHierarchy& h, int k, const CycleConfig& cfg) {
  auto& s = h.at(k);
  if (k == 1) {
    s.v(1, 1) = s.b(1, 1) / s.A.cc[static_cast<std::size_t>(1) * s.lv.nx() + 1];
    return;
  }
  smooth_rbgs(s.v, s.A, s.b, cfg.nu1);
  residual(s.A, s.v, s.b, s.r);
  auto& c = h.at(k - 1);
  c.b = restrict_y(restrict_x(s.r));
  c.v.set_zero();
  for (int m = 0; m < cfg.mu; ++m) mg_mu_cycle(h, k - 1, cfg);
  const GridFn corr = prolong_linear_y(prolong_linear_x(c.v));
  kern::active_ops().add_scaled(s.v.data(), corr.data(), cfg.damping,
                                s.lv.nx(), s.lv.ny());
  smooth_rbgs(s.v, s.A, s.b, cfg.nu2);
}

IterationHistory mg_iterate(MgHierarchy& h, const GridFn& b_top,
                            const CycleConfig& cfg, int max_cycles,
                            double stop_rel) {
  cfg.validate();
  auto& top = h.at(h.kbar());
  if (!(b_top.level() == top.lv))
    throw std::invalid_argument("mg_iterate: right-hand side level mismatch");
  top.b = b_top;
  top.v.set_zero();
  IterationHistory out;
  out.rel.push_back(rel_residual(top.A, top.v, top.b));
  for (int c = 0; c < max_cycles && out.rel.back() > stop_rel; ++c) {
    mg_mu_cycle(h, h.kbar(), cfg);
    out.rel.push_back(rel_residual(top.A, top.v, top.b));
  }
  return out;
}

ConvergenceFactor convergence_factor(const std::vector<double>& history,
                                     int last, int skip) {
  if (history.size() < 2)
    throw std::invalid_argument("convergence_factor: need >= 2 entries");
  std::vector<double> ratios;
  ratios.reserve(history.size() - 1);
  for (std::size_t i = 0; i + 1 < history.size(); ++i)
    ratios.push_back(history[i] > 0.0 ? history[i + 1] / history[i] : 0.0);
  std::size_t lo = 0;
  if (ratios.size() > static_cast<std::size_t>(skip)) lo = skip;
  if (ratios.size() - lo > static_cast<std::size_t>(last))
    lo = ratios.size() - last;
  ConvergenceFactor out;
  double logsum = 0.0;
  bool any_zero = false;
  for (std::size_t i = lo; i < ratios.size(); ++i) {
    if (ratios[i] == 0.0)
      any_zero = true;
    else
      logsum += std::log(ratios[i]);
  }
  out.factor =
      any_zero ? 0.0 : std::exp(logsum / static_cast<double>(ratios.size() - lo));
  out.diverged = out.factor >= 1.0;
  return out;
}

} // namespace msgmimc
