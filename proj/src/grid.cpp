#include "msgmimc/grid.hpp"

#include <stdexcept>

namespace msgmimc {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

} // namespace

GridFn restrict_x(const GridFn& fine) {
  require(fine.level().p >= 1, "restrict_x: fine grid needs p >= 1");
  const GridLevel cl{fine.level().p - 1, fine.level().q};
  GridFn out(cl);
  const int nx = cl.nx(), ny = cl.ny();
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      if (i == 0 || i == nx - 1 || j == 0 || j == ny - 1) {
        out(i, j) = fine(2 * i, j);
      } else {
        out(i, j) = 0.25 * fine(2 * i - 1, j) + 0.5 * fine(2 * i, j) +
                    0.25 * fine(2 * i + 1, j);
      }
    }
  }
  return out;
}

GridFn restrict_y(const GridFn& fine) {
  require(fine.level().q >= 1, "restrict_y: fine grid needs q >= 1");
  const GridLevel cl{fine.level().p, fine.level().q - 1};
  GridFn out(cl);
  const int nx = cl.nx(), ny = cl.ny();
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      if (i == 0 || i == nx - 1 || j == 0 || j == ny - 1) {
        out(i, j) = fine(i, 2 * j);
      } else {
        out(i, j) = 0.25 * fine(i, 2 * j - 1) + 0.5 * fine(i, 2 * j) +
                    0.25 * fine(i, 2 * j + 1);
      }
    }
  }
  return out;
}

GridFn prolong_linear_x(const GridFn& coarse) {
  const GridLevel fl{coarse.level().p + 1, coarse.level().q};
  GridFn out(fl);
  const int ncx = coarse.nx();
  for (int j = 0; j < fl.ny(); ++j) {
    for (int i = 0; i < ncx; ++i) out(2 * i, j) = coarse(i, j);
    for (int i = 0; i + 1 < ncx; ++i)
      out(2 * i + 1, j) = 0.5 * (coarse(i, j) + coarse(i + 1, j));
  }
  return out;
}

GridFn prolong_linear_y(const GridFn& coarse) {
  const GridLevel fl{coarse.level().p, coarse.level().q + 1};
  GridFn out(fl);
  const int ncy = coarse.ny();
  for (int j = 0; j < ncy; ++j)
    for (int i = 0; i < fl.nx(); ++i) out(i, 2 * j) = coarse(i, j);
  for (int j = 0; j + 1 < ncy; ++j)
    for (int i = 0; i < fl.nx(); ++i)
      out(i, 2 * j + 1) = 0.5 * (coarse(i, j) + coarse(i, j + 1));
  return out;
}

namespace {

// Cubic midpoint value between coarse nodes I and I+1 on a line of n+1
// coarse nodes (n cells, n >= 4). Centered stencil where four neighbours
// exist, one-sided cubic at the first and last midpoint.
inline double cubic_mid(const double* c, int stride, int n, int I) {
  auto at = [&](int k) { return c[static_cast<std::size_t>(k) * stride]; };
  if (I == 0)
    return (5.0 * at(0) + 15.0 * at(1) - 5.0 * at(2) + at(3)) / 16.0;
  if (I == n - 1)
    return (5.0 * at(n) + 15.0 * at(n - 1) - 5.0 * at(n - 2) + at(n - 3)) / 16.0;
  return (-at(I - 1) + 9.0 * at(I) + 9.0 * at(I + 1) - at(I + 2)) / 16.0;
}

} // namespace

GridFn prolong_cubic_x(const GridFn& coarse) {
  const int n = 1 << coarse.level().p;
  if (n < 4) return prolong_linear_x(coarse);
  const GridLevel fl{coarse.level().p + 1, coarse.level().q};
  GridFn out(fl);
  for (int j = 0; j < fl.ny(); ++j) {
    const double* row = coarse.data() + static_cast<std::size_t>(j) * coarse.nx();
    for (int i = 0; i <= n; ++i) out(2 * i, j) = row[i];
    for (int I = 0; I < n; ++I) out(2 * I + 1, j) = cubic_mid(row, 1, n, I);
  }
  return out;
}

GridFn prolong_cubic_y(const GridFn& coarse) {
  const int n = 1 << coarse.level().q;
  if (n < 4) return prolong_linear_y(coarse);
  const GridLevel fl{coarse.level().p, coarse.level().q + 1};
  GridFn out(fl);
  const int nx = coarse.nx();
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i < nx; ++i) out(i, 2 * j) = coarse(i, j);
  for (int J = 0; J < n; ++J)
    for (int i = 0; i < nx; ++i)
      out(i, 2 * J + 1) = cubic_mid(coarse.data() + i, nx, n, J);
  return out;
}

GridFn prolong_x(const GridFn& coarse, Interp kind) {
  return kind == Interp::cubic ? prolong_cubic_x(coarse) : prolong_linear_x(coarse);
}

GridFn prolong_y(const GridFn& coarse, Interp kind) {
  return kind == Interp::cubic ? prolong_cubic_y(coarse) : prolong_linear_y(coarse);
}

GridFn combine_restrict(const GridFn* rx, const GridFn* ry) {
  require(rx || ry, "combine_restrict: both inputs absent");
  if (rx && !ry) return restrict_x(*rx);
  if (ry && !rx) return restrict_y(*ry);
  GridFn a = restrict_x(*rx);
  const GridFn b = restrict_y(*ry);
  require(a.level() == b.level(), "combine_restrict: input levels inconsistent");
  const std::size_t n = a.level().nodes();
  double* pa = a.data();
  const double* pb = b.data();
  for (std::size_t k = 0; k < n; ++k) pa[k] = 0.5 * pa[k] + 0.5 * pb[k];
  return a;
}

GridFn combine_prolong(const GridFn* vx, const GridFn* vy,
                       const WeightFieldPair& w, Interp kind) {
  require(vx || vy, "combine_prolong: both inputs absent");
  if (vx && !vy) return prolong_x(*vx, kind);
  if (vy && !vx) return prolong_y(*vy, kind);
  GridFn a = prolong_x(*vx, kind);
  const GridFn b = prolong_y(*vy, kind);
  require(a.level() == b.level(), "combine_prolong: input levels inconsistent");
  require(w.kx.level() == a.level(), "combine_prolong: weight level mismatch");
  const std::size_t n = a.level().nodes();
  double* pa = a.data();
  const double* pb = b.data();
  const double* kx = w.kx.data();
  const double* ky = w.ky.data();
  for (std::size_t k = 0; k < n; ++k) pa[k] = kx[k] * pa[k] + ky[k] * pb[k];
  return a;
}

} // namespace msgmimc
