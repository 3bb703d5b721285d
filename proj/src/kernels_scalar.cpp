// Scalar reference kernels. The SIMD variants mirror these expressions
// term for term; keep the association order in sync with kernels_avx2.cpp.

#include "msgmimc/kernels.hpp"

#include <cstddef>

namespace msgmimc::kern {
namespace {

inline std::size_t at(int i, int j, int nx) {
  return static_cast<std::size_t>(j) * nx + i;
}

void rbgs_color_scalar(double* v, const double* b, const Stencil5& s, int nx,
                       int ny, int parity) {
  for (int j = 1; j < ny - 1; ++j) {
    const int i0 = 1 + ((parity + j + 1) & 1);
    for (int i = i0; i < nx - 1; i += 2) {
      const std::size_t k = at(i, j, nx);
      const double num = b[k] - ((s.cw[k] * v[k - 1] + s.ce[k] * v[k + 1]) +
                                 (s.cs[k] * v[k - nx] + s.cn[k] * v[k + nx]));
      v[k] = num / s.cc[k];
    }
  }
}

void residual_scalar(double* r, const double* v, const double* b,
                     const Stencil5& s, int nx, int ny) {
  for (int j = 1; j < ny - 1; ++j) {
    for (int i = 1; i < nx - 1; ++i) {
      const std::size_t k = at(i, j, nx);
      const double av = (s.cc[k] * v[k] + s.cw[k] * v[k - 1]) +
                        (s.ce[k] * v[k + 1] + s.cs[k] * v[k - nx]) +
                        s.cn[k] * v[k + nx];
      r[k] = b[k] - av;
    }
  }
}

void apply_scalar(double* out, const double* v, const Stencil5& s, int nx,
                  int ny) {
  for (int j = 1; j < ny - 1; ++j) {
    for (int i = 1; i < nx - 1; ++i) {
      const std::size_t k = at(i, j, nx);
      out[k] = (s.cc[k] * v[k] + s.cw[k] * v[k - 1]) +
               (s.ce[k] * v[k + 1] + s.cs[k] * v[k - nx]) +
               s.cn[k] * v[k + nx];
    }
  }
}

double sumsq_scalar(const double* a, int nx, int ny) {
  // Four whole-chunk accumulators plus four tail accumulators, combined in
  // a fixed order; the SIMD variant keeps the identical structure.
  double lanes[4] = {0.0, 0.0, 0.0, 0.0};
  double tail[4] = {0.0, 0.0, 0.0, 0.0};
  for (int j = 1; j < ny - 1; ++j) {
    const double* row = a + static_cast<std::size_t>(j) * nx + 1;
    const int m = nx - 2;
    int k = 0;
    for (; k + 3 < m; k += 4)
      for (int l = 0; l < 4; ++l) lanes[l] += row[k + l] * row[k + l];
    for (; k < m; ++k) tail[k & 3] += row[k] * row[k];
  }
  const double l0 = lanes[0] + tail[0];
  const double l1 = lanes[1] + tail[1];
  const double l2 = lanes[2] + tail[2];
  const double l3 = lanes[3] + tail[3];
  return (l0 + l1) + (l2 + l3);
}

void add_scaled_scalar(double* v, const double* c, double alpha, int nx,
                       int ny) {
  for (int j = 1; j < ny - 1; ++j) {
    const std::size_t off = static_cast<std::size_t>(j) * nx;
    for (int i = 1; i < nx - 1; ++i) v[off + i] += alpha * c[off + i];
  }
}

void add_scaled_weighted_pair_scalar(double* v, const double* a,
                                     const double* b, const double* wa,
                                     const double* wb, double alpha, int nx,
                                     int ny) {
  for (int j = 1; j < ny - 1; ++j) {
    const std::size_t off = static_cast<std::size_t>(j) * nx;
    for (int i = 1; i < nx - 1; ++i) {
      const std::size_t k = off + i;
      v[k] += alpha * (wa[k] * a[k] + wb[k] * b[k]);
    }
  }
}

} // namespace

const Ops& scalar_ops() {
  static const Ops ops = {"scalar",
                          rbgs_color_scalar,
                          residual_scalar,
                          apply_scalar,
                          sumsq_scalar,
                          add_scaled_scalar,
                          add_scaled_weighted_pair_scalar};
  return ops;
}

} // namespace msgmimc::kern
