#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace msgmimc {

// A tensor grid on the unit square with 2^p cells in x and 2^q cells in y,
// node coordinates (i * 2^-p, j * 2^-q), 0 <= i <= 2^p, 0 <= j <= 2^q.
struct GridLevel {
  int p = 1;
  int q = 1;

  int nx() const { return (1 << p) + 1; }
  int ny() const { return (1 << q) + 1; }
  double dx() const { return 1.0 / (1 << p); }
  double dy() const { return 1.0 / (1 << q); }
  std::size_t nodes() const {
    return static_cast<std::size_t>(nx()) * static_cast<std::size_t>(ny());
  }
  // Interior unknowns of the homogeneous Dirichlet problem.
  std::size_t interior() const {
    return static_cast<std::size_t>(nx() - 2) * static_cast<std::size_t>(ny() - 2);
  }
  bool operator==(const GridLevel&) const = default;
  std::string str() const {
    return "(" + std::to_string(p) + "," + std::to_string(q) + ")";
  }
};

// Real-valued function on a grid, stored densely row-major with x fastest.
// Dirichlet instances keep all boundary entries exactly zero; the transfer
// and stencil loops only ever write interior nodes of such functions.
class GridFn {
 public:
  GridFn() = default;
  explicit GridFn(GridLevel level)
      : level_(level), v_(level.nodes(), 0.0) {}

  const GridLevel& level() const { return level_; }
  int nx() const { return level_.nx(); }
  int ny() const { return level_.ny(); }

  double& operator()(int i, int j) { return v_[idx(i, j)]; }
  double operator()(int i, int j) const { return v_[idx(i, j)]; }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }
  std::span<const double> values() const { return v_; }

  void fill(double c) { v_.assign(v_.size(), c); }
  void set_zero() { fill(0.0); }

 private:
  std::size_t idx(int i, int j) const {
    return static_cast<std::size_t>(j) * level_.nx() + i;
  }
  GridLevel level_;
  std::vector<double> v_;
};

// Matrix-dependent prolongation weights; kx + ky = 1 pointwise at interior
// nodes and both lie in [0, 1].
struct WeightFieldPair {
  GridFn kx;
  GridFn ky;
};

enum class Interp { linear, cubic };

// One-dimensional full weighting 1/4 [1 2 1] applied row-wise (x) or
// column-wise (y). Boundary nodes are copied from the coinciding fine node.
GridFn restrict_x(const GridFn& fine);
GridFn restrict_y(const GridFn& fine);

GridFn prolong_linear_x(const GridFn& coarse);
GridFn prolong_linear_y(const GridFn& coarse);

// Cubic interpolation: coinciding nodes copied, midpoints use the centered
// (-1 9 9 -1)/16 weights, the first/last midpoint the one-sided cubic.
// Falls back to linear when the coarse direction has fewer than 4 cells.
GridFn prolong_cubic_x(const GridFn& coarse);
GridFn prolong_cubic_y(const GridFn& coarse);

GridFn prolong_x(const GridFn& coarse, Interp kind);
GridFn prolong_y(const GridFn& coarse, Interp kind);

// Two-grid combination rules. Absent inputs (null) encode the edges of the
// grid hierarchy; at least one input must be present.
GridFn combine_restrict(const GridFn* rx, const GridFn* ry);
GridFn combine_prolong(const GridFn* vx, const GridFn* vy,
                       const WeightFieldPair& w, Interp kind = Interp::linear);

} // namespace msgmimc
