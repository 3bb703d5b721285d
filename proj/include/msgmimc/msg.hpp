#pragma once

#include <stdexcept>
#include <vector>

#include "msgmimc/field.hpp"
#include "msgmimc/grid.hpp"
#include "msgmimc/pde.hpp"

namespace msgmimc {

// Cycle parameters shared by the MSG cycles and the standard-coarsening
// baseline. The damping default comes from a one-off calibration sweep over
// {0.6 .. 1.0} on the eta = 1/16, theta = 0 robustness case (see README).
struct CycleConfig {
  int mu = 2;      // 1 = V-cycle, 2 = W-cycle
  int nu1 = 2;     // pre-smoothing sweeps
  int nu2 = 2;     // post-smoothing sweeps
  double damping = 0.9;
  int nu0_max = 50;        // cap on adaptive cycles per F-cycle level
  double eps_solver = 1e-8; // per-level relative residual target

  void validate() const;
};

// `sweeps` full red-black Gauss-Seidel sweeps in place (red = even i + j
// first); every nodal update solves its stencil row exactly.
void smooth_rbgs(GridFn& v, const StencilOp& A, const GridFn& b, int sweeps);

// Matrix-dependent prolongation weights from the two high-frequency modes
// f = (-1)^i and g = (-1)^j: kx = (Af)^2 / ((Af)^2 + (Ag)^2), ky = 1 - kx,
// and 1/2 each where both responses vanish.
WeightFieldPair weight_factors(const StencilOp& A);

double interior_norm2(const GridFn& a);
double rel_residual(const StencilOp& A, const GridFn& v, const GridFn& b);

// The full rectangular lattice of semi-coarsened grids under one field
// realization: exponents (p, q) with 1 <= p <= pbar, 1 <= q <= qbar,
// addressed by offsets (a, b) = (p - 1, q - 1). Every operator is a direct
// discretisation of the same realization, never a Galerkin product.
class MsgHierarchy {
 public:
  struct Slot {
    GridLevel lv;
    StencilOp A;
    WeightFieldPair w;
    bool w_ready = false;
    GridFn sol; // converged solution (written by the F-cycle)
    GridFn rhs; // restricted right-hand side
    GridFn v;   // cycle iterate / coarse correction
    GridFn b;   // cycle right-hand side / restricted residual
    GridFn r;   // residual scratch
  };

  MsgHierarchy(const FieldRealization& fine,
               AveragingRule rule = AveragingRule::geometric);

  int ox_max() const { return ox_max_; }
  int oy_max() const { return oy_max_; }
  int top_diag() const { return ox_max_ + oy_max_; }
  GridLevel top_level() const { return {ox_max_ + 1, oy_max_ + 1}; }

  Slot& at(int a, int b) { return slots_[idx(a, b)]; }
  const Slot& at(int a, int b) const { return slots_[idx(a, b)]; }
  Slot& top() { return at(ox_max_, oy_max_); }

  // Grids (a, b) with a + b == d, in increasing a.
  std::vector<std::pair<int, int>> diagonal(int d) const;

 private:
  std::size_t idx(int a, int b) const {
    return static_cast<std::size_t>(a) * (oy_max_ + 1) + b;
  }
  int ox_max_, oy_max_;
  std::vector<Slot> slots_;
};

// One MSG mu-cycle on the diagonal p + q - 2 == L, acting on the (v, b)
// storage; diagonals below L are used as correction scratch.
void msg_mu_cycle(MsgHierarchy& h, int L, const CycleConfig& cfg);

struct SolverFailure : std::runtime_error {
  SolverFailure(GridLevel lv, std::vector<double> hist, const std::string& msg)
      : std::runtime_error(msg), level(lv), history(std::move(hist)) {}
  GridLevel level;
  std::vector<double> history; // per-cycle max relative residual of the level
};

struct FmsgLevelStats {
  int cycles = 0;
  double final_rel = 0.0;
};

struct FmsgResult {
  std::vector<FmsgLevelStats> per_diag;
  int total_cycles = 0;
};

// Full MSG: nested iteration with cubic interpolation of solutions and an
// adaptive number of mu-cycles per diagonal until every grid of the
// diagonal satisfies ||b - A v|| <= eps_solver * ||b||. On return, sol on
// every grid of the box solves that grid's own discretisation to tolerance.
FmsgResult msg_f_cycle(MsgHierarchy& h, const GridFn& b_top,
                       const CycleConfig& cfg);

// Plain mu-cycle iteration on the finest grid from a zero initial guess.
// history[0] is the initial relative residual; one entry per cycle after
// that. Stops early once rel <= stop_rel.
struct IterationHistory {
  std::vector<double> rel;
  // First cycle index with rel <= tol, or -1.
  int cycles_to(double tol) const;
};

IterationHistory msg_iterate(MsgHierarchy& h, const GridFn& b_top,
                             const CycleConfig& cfg, int max_cycles,
                             double stop_rel = 0.0);

// Standard-coarsening multigrid baseline on the square grids (k, k) with
// the same smoother, full-weighting restriction and bilinear prolongation.
class MgHierarchy {
 public:
  struct Slot {
    GridLevel lv;
    StencilOp A;
    GridFn v, b, r;
  };
  MgHierarchy(const FieldRealization& fine,
              AveragingRule rule = AveragingRule::geometric);
  int kbar() const { return kbar_; }
  Slot& at(int k) { return slots_[k - 1]; }

 private:
  int kbar_;
  std::vector<Slot> slots_;
};

void mg_mu_cycle(MgHierarchy& h, int k, const CycleConfig& cfg);
IterationHistory mg_iterate(MgHierarchy& h, const GridFn& b_top,
                            const CycleConfig& cfg, int max_cycles,
                            double stop_rel = 0.0);

// Geometric mean of successive residual ratios over the last `last` cycles,
// after dropping the first `skip` ratios when enough are available.
struct ConvergenceFactor {
  double factor = 0.0;
  bool diverged = false;
};

ConvergenceFactor convergence_factor(const std::vector<double>& history,
                                     int last = 10, int skip = 5);

} // namespace msgmimc
