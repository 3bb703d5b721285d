#pragma once

#include <functional>
#include <optional>
#include <string>

#include "msgmimc/field.hpp"
#include "msgmimc/mimc.hpp"
#include "msgmimc/msg.hpp"
#include "msgmimc/pde.hpp"

namespace msgmimc::mimc {

struct EstimatorConfig {
  QoISpec qoi = QoISpec::point_eval();
  int p0 = 2, q0 = 2; // coarsest exponents of the index (0,0) grid
  HyperPrior prior;
  CycleConfig solver;
  double eps = 1e-3;       // RMSE tolerance, stop when sqrt(V) <= eps
  std::uint64_t seed = 1;
  int n_min = 32;          // samples before the stopping test applies
  int refit_every = 16;    // pmf learning cadence after n_min
  int cap_exp_sum = 14;    // feasibility cap on p + q of the finest solve
  int cap_l1 = -1;         // optional rectangular caps on the index itself
  int cap_l2 = -1;
  std::size_t max_samples = 500000;
  double max_seconds = 0.0; // 0 = unlimited; wall-clock escape hatch
  int threads = 1;
  double init_r1 = 0.5 * M_LN2 * (1.0 + 4.0); // Algorithm defaults beta=4,
  double init_r2 = 0.5 * M_LN2 * (1.0 + 4.0); // gamma=1
  bool fit_wall = false;   // fit gamma against wall time instead of DOF
  bool zero_field = false; // z == 0 everywhere (deterministic validation)
  AveragingRule averaging = AveragingRule::geometric;
  std::optional<IndexPMF> fixed_pmf; // bypass learning entirely

  void validate() const;
};

struct DrawResult {
  double y = 0.0;
  MultiIndex L;          // after clamping
  bool clamped = false;
  std::vector<std::pair<MultiIndex, double>> contribs; // ΔQ_tau, tau <= L
  double cost_dof = 0.0;      // DOF cost of the one recycled solve
  double cost_dof_full = 0.0; // standalone cost of every difference in the box
  double wall_solve = 0.0;
  int fmsg_cycles = 0;
};

// One unbiased sample: draw L (clamped to the caps), draw hyperparameters
// and the field at the finest grid, run one FMSG solve, evaluate the QoI on
// every grid of the index box and assemble Y = sum ΔQ_tau / p_tau.
DrawResult draw_Y(std::uint64_t n, const IndexPMF& pmf,
                  const EstimatorConfig& cfg);

// Same pipeline with a forced index and no pmf (used by the rate pilots);
// the returned y is the raw ΔQ at `forced`.
DrawResult draw_delta(std::uint64_t n, MultiIndex forced,
                      const EstimatorConfig& cfg);

struct EstimatorResult {
  double E = 0.0;
  double V = 0.0;
  std::size_t N = 0;
  bool bias_flagged = false;      // some sampled L hit a feasibility cap
  bool degeneracy_warned = false; // fitted beta <= gamma at some refit
  bool budget_exhausted = false;
  IndexStats stats;
  Rates fitted;
  double pmf_r1 = 0.0, pmf_r2 = 0.0;
  double cost_recycled_dof = 0.0;
  double cost_non_recycled_dof = 0.0;
  double wall_seconds = 0.0;
  std::vector<SampleRecord> samples;
};

using DrawFn = std::function<DrawResult(std::uint64_t, const IndexPMF&)>;

// The sampling loop: initialise the pmf, then repeat {draw L, solve, form Y,
// update E and V, refit the pmf} until sqrt(V) <= eps. Samples are merged
// in index order, so the statistical output is independent of the thread
// count. `draw` defaults to the PDE pipeline above.
EstimatorResult run_estimator(const EstimatorConfig& cfg);
EstimatorResult run_estimator_with(const EstimatorConfig& cfg,
                                   const DrawFn& draw);

// JSON state dump (schema documented in the README).
std::string dump_state_json(const EstimatorResult& r,
                            const EstimatorConfig& cfg);

} // namespace msgmimc::mimc
