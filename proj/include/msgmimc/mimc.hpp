#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "msgmimc/grid.hpp"
#include "msgmimc/rng.hpp"

namespace msgmimc::mimc {

// Two-dimensional multi-index; ordering is componentwise.
struct MultiIndex {
  int l1 = 0;
  int l2 = 0;
  bool operator==(const MultiIndex&) const = default;
  bool operator<(const MultiIndex& o) const {
    return l1 != o.l1 ? l1 < o.l1 : l2 < o.l2;
  }
  bool leq(const MultiIndex& o) const { return l1 <= o.l1 && l2 <= o.l2; }
};

// Probability mass over multi-indices with everywhere-positive tail
// probabilities p_l = P(L >= l componentwise). Model mode is the product
// geometric pi(l) ~ exp(-r1 l1 - r2 l2); empirical mode tabulates weights
// on a finite box and continues them with per-direction geometric decay.
class IndexPMF {
 public:
  enum class Mode { model, empirical };

  static IndexPMF geometric(double r1, double r2);
  // w: weights on [0,B1] x [0,B2], row-major with l1 fastest; decay factors
  // x1 = exp(-r1), x2 = exp(-r2) continue the boundary weights beyond the
  // box. Zero rates (decay 0) give a purely finite mass for tests.
  static IndexPMF empirical(std::vector<double> w, int B1, int B2, double r1,
                            double r2);

  Mode mode() const { return mode_; }
  double r1() const { return r1_; }
  double r2() const { return r2_; }

  double mass(MultiIndex l) const;
  double tail_prob(MultiIndex l) const;
  MultiIndex sample(rng::Stream& stream) const;

 private:
  IndexPMF() = default;
  double tail_weight(MultiIndex l) const; // unnormalised, empirical mode
  Mode mode_ = Mode::model;
  double r1_ = 0.0, r2_ = 0.0; // model rates / empirical tail rates
  int B1_ = -1, B2_ = -1;
  std::vector<double> w_;
  double total_ = 1.0;
};

// Running per-index statistics of the multi-index differences.
struct IndexCell {
  long long n = 0;
  double mean = 0.0;
  double m2 = 0.0;       // sum of squared deviations
  double cost_dof = 0.0; // deterministic DOF-model cost of one sample
  long long n_wall = 0;
  double wall_sum = 0.0;

  double var() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
};

class IndexStats {
 public:
  void record_dq(MultiIndex l, double dq);
  void set_cost_dof(MultiIndex l, double cost);
  void record_wall(MultiIndex l, double seconds);
  const std::map<MultiIndex, IndexCell>& cells() const { return cells_; }
  bool empty() const { return cells_.empty(); }

 private:
  std::map<MultiIndex, IndexCell> cells_;
};

// Fitted per-direction rates: |E_l| ~ 2^(-alpha.l), V_l ~ 2^(-beta.l),
// C_l ~ 2^(gamma.l), from count-weighted least squares on log2 data.
struct Rates {
  bool ok = false;
  double alpha[2] = {0, 0};
  double beta[2] = {0, 0};
  double gamma[2] = {0, 0};
  double se_alpha[2] = {0, 0};
  double se_beta[2] = {0, 0};
  double se_gamma[2] = {0, 0};
};

Rates fit_rates(const IndexStats& stats, long long min_count = 2,
                bool use_wall = false);

// Model-mode pmf from fitted rates, r_j = (ln 2 / 2)(gamma_j + beta_j).
// Keeps `current` when rates are unavailable or the finite-work window
// gamma_j < beta_j fails; the latter sets *degenerate.
IndexPMF update_pmf(const IndexPMF& current, const Rates& rates,
                    bool* degenerate = nullptr);

// Dense values on the box [0, top].
struct BoxFn {
  MultiIndex top;
  std::vector<double> v;

  explicit BoxFn(MultiIndex t = {0, 0})
      : top(t), v(static_cast<std::size_t>(t.l1 + 1) * (t.l2 + 1), 0.0) {}
  double& at(MultiIndex l) {
    return v[static_cast<std::size_t>(l.l2) * (top.l1 + 1) + l.l1];
  }
  double at(MultiIndex l) const {
    return v[static_cast<std::size_t>(l.l2) * (top.l1 + 1) + l.l1];
  }
};

// First differences tensorised over both directions; terms with a negative
// component are omitted. Sums to q.at(top) over the whole box.
BoxFn delta_tensor(const BoxFn& q);

// Running mean and estimator variance (variance of the mean),
// E = (1/N) sum Y, V = 1/(N(N-1)) sum (Y - E)^2.
class EstimatorAccum {
 public:
  void add(double y);
  long long count() const { return n_; }
  double E() const;
  double V() const;

 private:
  long long n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// Interior unknowns of grid (p, q).
double dof_of(int p, int q);

// DOF-model cost of one multi-index difference sample at l: the sum of the
// unknown counts of the (up to 4) grids its stencil touches.
double stencil_cost_dof(MultiIndex l, int p0, int q0);

// Theorem-style cost reduction factor of sample recycling,
// 1 - sum_{nonempty u} (-1)^(|u|+1) prod_{j in u} 2^(-(gamma_j+beta_j)/2).
double cost_reduction_factor(std::span<const double> beta,
                             std::span<const double> gamma);

// Per-sample log entry sufficient to replay the cost accounting.
struct SampleRecord {
  double y = 0.0;
  MultiIndex L;
  bool clamped = false;
};

enum class CostMode { recycled, non_recycled };

double cost_accounting(std::span<const SampleRecord> samples, int p0, int q0,
                       CostMode mode);

} // namespace msgmimc::mimc
