#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "msgmimc/pde.hpp"
#include "support.hpp"

using namespace msgmimc;
using namespace testsupport;

TEST_CASE("assemble reduces to the 5-point Laplacian for a == 1") {
  const GridLevel lv{3, 3};
  const StencilOp A = assemble(constant_field(lv));
  const double h2 = 1.0 / (lv.dx() * lv.dx());
  for (int j = 1; j < lv.ny() - 1; ++j)
    for (int i = 1; i < lv.nx() - 1; ++i) {
      const std::size_t k = static_cast<std::size_t>(j) * lv.nx() + i;
      CHECK(A.cc[k] == doctest::Approx(4.0 * h2).epsilon(1e-14));
      CHECK(A.cw[k] == doctest::Approx(-h2).epsilon(1e-14));
      CHECK(A.ce[k] == doctest::Approx(-h2).epsilon(1e-14));
      CHECK(A.cs[k] == doctest::Approx(-h2).epsilon(1e-14));
      CHECK(A.cn[k] == doctest::Approx(-h2).epsilon(1e-14));
    }
}

TEST_CASE("assemble with unequal mesh widths") {
  const GridLevel lv{3, 2};
  const StencilOp A = assemble(constant_field(lv));
  const double ix2 = 1.0 / (lv.dx() * lv.dx());
  const double iy2 = 1.0 / (lv.dy() * lv.dy());
  const std::size_t k = static_cast<std::size_t>(2) * lv.nx() + 3;
  CHECK(A.cc[k] == doctest::Approx(2.0 * ix2 + 2.0 * iy2));
  CHECK(A.cw[k] == doctest::Approx(-ix2));
  CHECK(A.cn[k] == doctest::Approx(-iy2));
}

TEST_CASE("assembled operator is a symmetric bilinear form") {
  const GridLevel lv{4, 3};
  FieldRealization f = constant_field(lv);
  std::mt19937_64 gen(41);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int j = 0; j < lv.ny(); ++j)
    for (int i = 0; i < lv.nx(); ++i) f.z(i, j) = dist(gen);
  const StencilOp A = assemble(f);

  for (int rep = 0; rep < 5; ++rep) {
    const GridFn u = random_interior(lv, gen);
    const GridFn v = random_interior(lv, gen);
    const double a = dot_interior(apply(A, u), v);
    const double b = dot_interior(u, apply(A, v));
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
  }

  // Edge-coefficient consistency: c_east(i,j) == c_west(i+1,j).
  for (int j = 1; j < lv.ny() - 1; ++j)
    for (int i = 1; i < lv.nx() - 2; ++i) {
      const std::size_t k = static_cast<std::size_t>(j) * lv.nx() + i;
      CHECK(A.ce[k] == A.cw[k + 1]);
    }
  // M-matrix rows: centre positive, off-diagonals nonpositive, zero row sum.
  for (int j = 1; j < lv.ny() - 1; ++j)
    for (int i = 1; i < lv.nx() - 1; ++i) {
      const std::size_t k = static_cast<std::size_t>(j) * lv.nx() + i;
      CHECK(A.cc[k] > 0.0);
      CHECK(A.cw[k] <= 0.0);
      CHECK(A.cc[k] == doctest::Approx(-(A.cw[k] + A.ce[k] + A.cs[k] +
                                         A.cn[k])).epsilon(1e-14));
    }
}

TEST_CASE("residual behaviour") {
  const GridLevel lv{3, 3};
  FieldRealization f = constant_field(lv);
  std::mt19937_64 gen(42);
  for (int j = 0; j < lv.ny(); ++j)
    for (int i = 0; i < lv.nx(); ++i)
      f.z(i, j) = 0.3 * std::sin(2.0 * i + j);
  const StencilOp A = assemble(f);
  const GridFn b = unit_rhs(lv);

  const GridFn zero(lv);
  CHECK(max_abs_diff(residual(A, zero, b), b) == 0.0);

  // Against the dense direct solve the residual is at the rounding floor.
  const GridFn u = dense_solve(A, b);
  const GridFn r = residual(A, u, b);
  double nr = 0.0, nb = 0.0;
  for (int j = 1; j < lv.ny() - 1; ++j)
    for (int i = 1; i < lv.nx() - 1; ++i) {
      nr += r(i, j) * r(i, j);
      nb += b(i, j) * b(i, j);
    }
  CHECK(std::sqrt(nr) <= 1e-12 * std::sqrt(nb));

  // Linearity of apply.
  const GridFn x = random_interior(lv, gen);
  const GridFn y = random_interior(lv, gen);
  GridFn xy(lv);
  for (int j = 0; j < lv.ny(); ++j)
    for (int i = 0; i < lv.nx(); ++i) xy(i, j) = x(i, j) + y(i, j);
  const GridFn ax = apply(A, x), ay = apply(A, y), axy = apply(A, xy);
  for (int j = 1; j < lv.ny() - 1; ++j)
    for (int i = 1; i < lv.nx() - 1; ++i)
      CHECK(axy(i, j) == doctest::Approx(ax(i, j) + ay(i, j)).epsilon(1e-12));
}

TEST_CASE("discrete maximum principle on a small grid") {
  const GridLevel lv{3, 3};
  std::mt19937_64 gen(43);
  FieldRealization f = constant_field(lv);
  std::uniform_real_distribution<double> dist(-1.5, 1.5);
  for (int j = 0; j < lv.ny(); ++j)
    for (int i = 0; i < lv.nx(); ++i) f.z(i, j) = dist(gen);
  const StencilOp A = assemble(f);
  const GridFn u = dense_solve(A, unit_rhs(lv));
  for (int j = 1; j < lv.ny() - 1; ++j)
    for (int i = 1; i < lv.nx() - 1; ++i) CHECK(u(i, j) >= 0.0);
}

TEST_CASE("apply(assemble) is second-order consistent") {
  // Manufactured a = exp(z), u smooth; the observed truncation order of
  // A u vs -div(a grad u) under refinement must sit near 2.
  auto zf = [](double x, double y) {
    return 0.5 * std::sin(2.0 * M_PI * x) * std::cos(M_PI * y);
  };
  auto uf = [](double x, double y) {
    return std::sin(M_PI * x) * std::sin(2.0 * M_PI * y);
  };
  // -div(a grad u) = -(ax ux + a uxx + ay uy + a uyy)
  auto rhs = [&](double x, double y) {
    const double a = std::exp(zf(x, y));
    const double zx = 0.5 * 2.0 * M_PI * std::cos(2.0 * M_PI * x) *
                      std::cos(M_PI * y);
    const double zy = -0.5 * M_PI * std::sin(2.0 * M_PI * x) *
                      std::sin(M_PI * y);
    const double ux = M_PI * std::cos(M_PI * x) * std::sin(2.0 * M_PI * y);
    const double uy = 2.0 * M_PI * std::sin(M_PI * x) *
                      std::cos(2.0 * M_PI * y);
    const double uxx = -M_PI * M_PI * uf(x, y);
    const double uyy = -4.0 * M_PI * M_PI * uf(x, y);
    return -(a * zx * ux + a * uxx + a * zy * uy + a * uyy);
  };

  std::vector<double> errs;
  for (int p = 3; p <= 6; ++p) {
    const GridLevel lv{p, p};
    FieldRealization f = constant_field(lv);
    GridFn u(lv);
    for (int j = 0; j < lv.ny(); ++j)
      for (int i = 0; i < lv.nx(); ++i) {
        const double x = i * lv.dx(), y = j * lv.dy();
        f.z(i, j) = zf(x, y);
        u(i, j) = uf(x, y);
      }
    const GridFn au = apply(assemble(f), u);
    double worst = 0.0;
    for (int j = 1; j < lv.ny() - 1; ++j)
      for (int i = 1; i < lv.nx() - 1; ++i)
        worst = std::max(worst,
                         std::abs(au(i, j) - rhs(i * lv.dx(), j * lv.dy())));
    errs.push_back(worst);
  }
  for (std::size_t k = 0; k + 1 < errs.size(); ++k) {
    const double order = std::log2(errs[k] / errs[k + 1]);
    CHECK(order > 1.7);
    CHECK(order < 2.3);
  }
}

TEST_CASE("point QoI") {
  const GridLevel lv{3, 3};
  GridFn u(lv);
  CHECK(qoi_point(u) == 0.0);
  u(4, 4) = 1.0;
  CHECK(qoi_point(u) == 1.0);
  CHECK_THROWS_AS(qoi_point(u, 1.0 / 3.0, 0.5), std::invalid_argument);
}

TEST_CASE("point QoI converges at second order for the unit source") {
  // Dense solves on nested grids; successive differences shrink ~4x.
  double prev_q = 0.0;
  std::vector<double> diffs;
  for (int p = 3; p <= 5; ++p) {
    const GridLevel lv{p, p};
    const StencilOp A = assemble(constant_field(lv));
    const GridFn u = dense_solve(A, unit_rhs(lv));
    const double q = qoi_point(u);
    if (p > 3) diffs.push_back(q - prev_q);
    prev_q = q;
  }
  const double ratio = diffs[0] / diffs[1];
  CHECK(ratio > 2.8);
  CHECK(ratio < 5.5);
}

TEST_CASE("average QoI") {
  const GridLevel lv{4, 4};
  GridFn u(lv);
  u.fill(3.25);
  CHECK(qoi_average(u) == doctest::Approx(3.25).epsilon(1e-14));

  // Trapezoid is exact on bilinear functions over aligned rectangles.
  GridFn bl(lv);
  for (int j = 0; j < lv.ny(); ++j)
    for (int i = 0; i < lv.nx(); ++i) {
      const double x = i * lv.dx(), y = j * lv.dy();
      bl(i, j) = (1.0 + 2.0 * x) * (3.0 - y);
    }
  // integral of (1+2x)(3-y)/(1/16) over [1/4,1/2]^2:
  // int(1+2x) dx = [x+x^2] = (1/2+1/4)-(1/4+1/16) = 7/16
  // int(3-y) dy = [3y-y^2/2] = (3/2-1/8)-(3/4-1/32) = 21/32
  const double want = (7.0 / 16.0) * (21.0 / 32.0) * 16.0;
  CHECK(qoi_average(bl) == doctest::Approx(want).epsilon(1e-13));

  // Matches a dense direct solve combined with the same quadrature.
  const GridLevel g{4, 4};
  const StencilOp A = assemble(constant_field(g));
  const GridFn sol = dense_solve(A, unit_rhs(g));
  double sum = 0.0;
  const int i0 = 4, i1 = 8; // [1/4,1/2] at p=4
  for (int j = i0; j <= i1; ++j) {
    const double wy = (j == i0 || j == i1) ? 0.5 : 1.0;
    for (int i = i0; i <= i1; ++i) {
      const double wx = (i == i0 || i == i1) ? 0.5 : 1.0;
      sum += wx * wy * sol(i, j);
    }
  }
  const double oracle = sum * g.dx() * g.dy() * 16.0;
  CHECK(qoi_average(sol) == doctest::Approx(oracle).epsilon(1e-12));

  CHECK_THROWS_AS(qoi_average(u, 0.1, 0.5, 0.25, 0.5), std::invalid_argument);
}

TEST_CASE("flux QoI") {
  const GridLevel lv{5, 5};
  const FieldRealization f = constant_field(lv);
  GridFn zero(lv);
  CHECK(qoi_flux(zero, f) == 0.0);

  // u = x(1-x), constant in y: -du/dx at x=1 is 1, first-order accurate.
  GridFn u(lv);
  for (int j = 0; j < lv.ny(); ++j)
    for (int i = 0; i < lv.nx(); ++i) {
      const double x = i * lv.dx();
      u(i, j) = x * (1.0 - x);
    }
  CHECK(qoi_flux(u, f) == doctest::Approx(1.0).epsilon(2.0 * lv.dx()));

  // Linearity in u for a fixed field.
  std::mt19937_64 gen(44);
  const GridFn a = random_full(lv, gen);
  const GridFn b = random_full(lv, gen);
  GridFn ab(lv);
  for (int j = 0; j < lv.ny(); ++j)
    for (int i = 0; i < lv.nx(); ++i) ab(i, j) = a(i, j) + 2.0 * b(i, j);
  CHECK(qoi_flux(ab, f) ==
        doctest::Approx(qoi_flux(a, f) + 2.0 * qoi_flux(b, f)).epsilon(1e-12));
}
