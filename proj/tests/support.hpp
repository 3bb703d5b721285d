#pragma once

// Shared test helpers: random grid data and an independent dense direct
// solver used as the oracle for the multigrid paths.

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "msgmimc/grid.hpp"
#include "msgmimc/pde.hpp"

namespace testsupport {

using msgmimc::GridFn;
using msgmimc::GridLevel;
using msgmimc::StencilOp;

inline GridFn random_interior(GridLevel lv, std::mt19937_64& gen,
                              double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  GridFn f(lv);
  for (int j = 1; j < lv.ny() - 1; ++j)
    for (int i = 1; i < lv.nx() - 1; ++i) f(i, j) = dist(gen);
  return f;
}

inline GridFn random_full(GridLevel lv, std::mt19937_64& gen, double lo = -1.0,
                          double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  GridFn f(lv);
  for (int j = 0; j < lv.ny(); ++j)
    for (int i = 0; i < lv.nx(); ++i) f(i, j) = dist(gen);
  return f;
}

inline double dot_interior(const GridFn& a, const GridFn& b) {
  double s = 0.0;
  for (int j = 1; j < a.ny() - 1; ++j)
    for (int i = 1; i < a.nx() - 1; ++i) s += a(i, j) * b(i, j);
  return s;
}

inline double max_abs_diff(const GridFn& a, const GridFn& b) {
  double m = 0.0;
  for (int j = 0; j < a.ny(); ++j)
    for (int i = 0; i < a.nx(); ++i)
      m = std::max(m, std::abs(a(i, j) - b(i, j)));
  return m;
}

// Dense direct solve of A u = b over the interior unknowns.
inline GridFn dense_solve(const StencilOp& A, const GridFn& b) {
  const int nx = A.level.nx(), ny = A.level.ny();
  const int mx = nx - 2, my = ny - 2;
  const int n = mx * my;
  auto unk = [&](int i, int j) { return (j - 1) * mx + (i - 1); };
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd rhs(n);
  for (int j = 1; j < ny - 1; ++j) {
    for (int i = 1; i < nx - 1; ++i) {
      const std::size_t k = static_cast<std::size_t>(j) * nx + i;
      const int row = unk(i, j);
      M(row, row) = A.cc[k];
      if (i > 1) M(row, unk(i - 1, j)) = A.cw[k];
      if (i < nx - 2) M(row, unk(i + 1, j)) = A.ce[k];
      if (j > 1) M(row, unk(i, j - 1)) = A.cs[k];
      if (j < ny - 2) M(row, unk(i, j + 1)) = A.cn[k];
      rhs(row) = b(i, j);
    }
  }
  const Eigen::VectorXd x = M.partialPivLu().solve(rhs);
  GridFn u(A.level);
  for (int j = 1; j < ny - 1; ++j)
    for (int i = 1; i < nx - 1; ++i) u(i, j) = x(unk(i, j));
  return u;
}

// Constant log-field z == c on a level (a == exp(c)).
inline msgmimc::FieldRealization constant_field(GridLevel lv, double z = 0.0) {
  msgmimc::FieldRealization f;
  f.level = lv;
  f.z = GridFn(lv);
  if (z != 0.0)
    for (int j = 0; j < lv.ny(); ++j)
      for (int i = 0; i < lv.nx(); ++i) f.z(i, j) = z;
  f.hyper = msgmimc::CovarianceSpec{};
  return f;
}

inline GridFn unit_rhs(GridLevel lv) {
  GridFn b(lv);
  for (int j = 1; j < lv.ny() - 1; ++j)
    for (int i = 1; i < lv.nx() - 1; ++i) b(i, j) = 1.0;
  return b;
}

} // namespace testsupport
