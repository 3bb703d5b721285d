// AVX2 kernels. This translation unit is compiled with -mavx2 and
// -ffp-contract=off only; every lane performs the same mul/add/div chain
// as the scalar reference so results match bit for bit.

#include "msgmimc/kernels.hpp"

#if defined(__AVX2__)

#include <immintrin.h>

#include <cstddef>
#include <cstdint>

namespace msgmimc::kern {
namespace {

inline std::size_t at(int i, int j, int nx) {
  return static_cast<std::size_t>(j) * nx + i;
}

inline __m256d stencil_sum(const double* v, const Stencil5& s, std::size_t k,
                           int nx) {
  const __m256d vc = _mm256_loadu_pd(v + k);
  const __m256d vw = _mm256_loadu_pd(v + k - 1);
  const __m256d ve = _mm256_loadu_pd(v + k + 1);
  const __m256d vs = _mm256_loadu_pd(v + k - nx);
  const __m256d vn = _mm256_loadu_pd(v + k + nx);
  const __m256d t1 = _mm256_add_pd(_mm256_mul_pd(_mm256_loadu_pd(s.cc + k), vc),
                                   _mm256_mul_pd(_mm256_loadu_pd(s.cw + k), vw));
  const __m256d t2 = _mm256_add_pd(_mm256_mul_pd(_mm256_loadu_pd(s.ce + k), ve),
                                   _mm256_mul_pd(_mm256_loadu_pd(s.cs + k), vs));
  const __m256d t3 = _mm256_mul_pd(_mm256_loadu_pd(s.cn + k), vn);
  return _mm256_add_pd(_mm256_add_pd(t1, t2), t3);
}

void rbgs_color_avx2(double* v, const double* b, const Stencil5& s, int nx,
                     int ny, int parity) {
  // Candidate updates are computed for a full vector of nodes and blended
  // onto the colour in question. Neighbours of a node always have the other
  // colour, so in-place updates of one colour are order-independent.
  // The vector loop always starts at i = 1, so within a chunk the odd
  // nodes sit in lanes 0 and 2, the even nodes in lanes 1 and 3.
  const __m256d odd_lanes = _mm256_castsi256_pd(_mm256_set_epi64x(0, -1, 0, -1));
  const __m256d even_lanes = _mm256_castsi256_pd(_mm256_set_epi64x(-1, 0, -1, 0));
  for (int j = 1; j < ny - 1; ++j) {
    const int want = (parity + j) & 1; // update i with i % 2 == want
    const __m256d mask = want ? odd_lanes : even_lanes;
    int i = 1;
    for (; i + 3 < nx - 1; i += 4) {
      const std::size_t k = at(i, j, nx);
      const __m256d vw = _mm256_loadu_pd(v + k - 1);
      const __m256d ve = _mm256_loadu_pd(v + k + 1);
      const __m256d vs = _mm256_loadu_pd(v + k - nx);
      const __m256d vn = _mm256_loadu_pd(v + k + nx);
      const __m256d t1 =
          _mm256_add_pd(_mm256_mul_pd(_mm256_loadu_pd(s.cw + k), vw),
                        _mm256_mul_pd(_mm256_loadu_pd(s.ce + k), ve));
      const __m256d t2 =
          _mm256_add_pd(_mm256_mul_pd(_mm256_loadu_pd(s.cs + k), vs),
                        _mm256_mul_pd(_mm256_loadu_pd(s.cn + k), vn));
      const __m256d num =
          _mm256_sub_pd(_mm256_loadu_pd(b + k), _mm256_add_pd(t1, t2));
      const __m256d upd = _mm256_div_pd(num, _mm256_loadu_pd(s.cc + k));
      const __m256d cur = _mm256_loadu_pd(v + k);
      _mm256_storeu_pd(v + k, _mm256_blendv_pd(cur, upd, mask));
    }
    // Scalar tail, identical expression.
    int it = i + (((i & 1) == want) ? 0 : 1);
    for (; it < nx - 1; it += 2) {
      const std::size_t k = at(it, j, nx);
      const double num = b[k] - ((s.cw[k] * v[k - 1] + s.ce[k] * v[k + 1]) +
                                 (s.cs[k] * v[k - nx] + s.cn[k] * v[k + nx]));
      v[k] = num / s.cc[k];
    }
  }
}

void residual_avx2(double* r, const double* v, const double* b,
                   const Stencil5& s, int nx, int ny) {
  for (int j = 1; j < ny - 1; ++j) {
    int i = 1;
    for (; i + 3 < nx - 1; i += 4) {
      const std::size_t k = at(i, j, nx);
      const __m256d av = stencil_sum(v, s, k, nx);
      _mm256_storeu_pd(r + k, _mm256_sub_pd(_mm256_loadu_pd(b + k), av));
    }
    for (; i < nx - 1; ++i) {
      const std::size_t k = at(i, j, nx);
      const double av = (s.cc[k] * v[k] + s.cw[k] * v[k - 1]) +
                        (s.ce[k] * v[k + 1] + s.cs[k] * v[k - nx]) +
                        s.cn[k] * v[k + nx];
      r[k] = b[k] - av;
    }
  }
}

void apply_avx2(double* out, const double* v, const Stencil5& s, int nx,
                int ny) {
  for (int j = 1; j < ny - 1; ++j) {
    int i = 1;
    for (; i + 3 < nx - 1; i += 4) {
      const std::size_t k = at(i, j, nx);
      _mm256_storeu_pd(out + k, stencil_sum(v, s, k, nx));
    }
    for (; i < nx - 1; ++i) {
      const std::size_t k = at(i, j, nx);
      out[k] = (s.cc[k] * v[k] + s.cw[k] * v[k - 1]) +
               (s.ce[k] * v[k + 1] + s.cs[k] * v[k - nx]) +
               s.cn[k] * v[k + nx];
    }
  }
}

double sumsq_avx2(const double* a, int nx, int ny) {
  __m256d acc = _mm256_setzero_pd();
  double tail[4] = {0.0, 0.0, 0.0, 0.0};
  for (int j = 1; j < ny - 1; ++j) {
    const double* row = a + static_cast<std::size_t>(j) * nx + 1;
    const int m = nx - 2;
    int k = 0;
    for (; k + 3 < m; k += 4) {
      const __m256d x = _mm256_loadu_pd(row + k);
      acc = _mm256_add_pd(acc, _mm256_mul_pd(x, x));
    }
    for (; k < m; ++k) tail[k & 3] += row[k] * row[k];
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  const double l0 = lanes[0] + tail[0];
  const double l1 = lanes[1] + tail[1];
  const double l2 = lanes[2] + tail[2];
  const double l3 = lanes[3] + tail[3];
  return (l0 + l1) + (l2 + l3);
}

void add_scaled_avx2(double* v, const double* c, double alpha, int nx,
                     int ny) {
  const __m256d va = _mm256_set1_pd(alpha);
  for (int j = 1; j < ny - 1; ++j) {
    const std::size_t off = static_cast<std::size_t>(j) * nx;
    int i = 1;
    for (; i + 3 < nx - 1; i += 4) {
      const std::size_t k = off + i;
      const __m256d r = _mm256_add_pd(
          _mm256_loadu_pd(v + k), _mm256_mul_pd(va, _mm256_loadu_pd(c + k)));
      _mm256_storeu_pd(v + k, r);
    }
    for (; i < nx - 1; ++i) v[off + i] += alpha * c[off + i];
  }
}

void add_scaled_weighted_pair_avx2(double* v, const double* a, const double* b,
                                   const double* wa, const double* wb,
                                   double alpha, int nx, int ny) {
  const __m256d va = _mm256_set1_pd(alpha);
  for (int j = 1; j < ny - 1; ++j) {
    const std::size_t off = static_cast<std::size_t>(j) * nx;
    int i = 1;
    for (; i + 3 < nx - 1; i += 4) {
      const std::size_t k = off + i;
      const __m256d m = _mm256_add_pd(
          _mm256_mul_pd(_mm256_loadu_pd(wa + k), _mm256_loadu_pd(a + k)),
          _mm256_mul_pd(_mm256_loadu_pd(wb + k), _mm256_loadu_pd(b + k)));
      const __m256d r =
          _mm256_add_pd(_mm256_loadu_pd(v + k), _mm256_mul_pd(va, m));
      _mm256_storeu_pd(v + k, r);
    }
    for (; i < nx - 1; ++i) {
      const std::size_t k = off + i;
      v[k] += alpha * (wa[k] * a[k] + wb[k] * b[k]);
    }
  }
}

} // namespace

const Ops& avx2_ops() {
  static const Ops ops = {"avx2",
                          rbgs_color_avx2,
                          residual_avx2,
                          apply_avx2,
                          sumsq_avx2,
                          add_scaled_avx2,
                          add_scaled_weighted_pair_avx2};
  return ops;
}

bool avx2_compiled() { return true; }

} // namespace msgmimc::kern

#else

namespace msgmimc::kern {
const Ops& avx2_ops() { return scalar_ops(); }
bool avx2_compiled() { return false; }
} // namespace msgmimc::kern

#endif
