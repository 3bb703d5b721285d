#pragma once

// Hot stencil loops of the solver, as scalar reference kernels plus SIMD
// variants selected at runtime. Both implementations of a kernel perform
// the identical floating-point operations per node, in the same order and
// without FMA contraction, so their outputs are bit-identical; the test
// suite asserts exact equality on random inputs.

namespace msgmimc::kern {

// Variable 5-point stencil, one coefficient array per leg, full grid size,
// valid at interior nodes only.
struct Stencil5 {
  const double* cc;
  const double* cw;
  const double* ce;
  const double* cs;
  const double* cn;
};

struct Ops {
  const char* name;

  // One red-black half sweep: update nodes with (i + j) % 2 == parity.
  void (*rbgs_color)(double* v, const double* b, const Stencil5& s, int nx,
                     int ny, int parity);
  // r = b - A v at interior nodes; boundary rows of r untouched.
  void (*residual)(double* r, const double* v, const double* b,
                   const Stencil5& s, int nx, int ny);
  // out = A v at interior nodes.
  void (*apply_op)(double* out, const double* v, const Stencil5& s, int nx,
                   int ny);
  // Sum of squares over interior nodes (fixed 4-lane accumulation order).
  double (*sumsq_interior)(const double* a, int nx, int ny);
  // v += alpha * c at interior nodes.
  void (*add_scaled)(double* v, const double* c, double alpha, int nx, int ny);
  // v += alpha * (wa .* a + wb .* b) at interior nodes.
  void (*add_scaled_weighted_pair)(double* v, const double* a, const double* b,
                                   const double* wa, const double* wb,
                                   double alpha, int nx, int ny);
};

const Ops& scalar_ops();
bool avx2_compiled();    // this binary contains the AVX2 kernels
bool have_avx2();        // compiled in and supported by this CPU
const Ops& avx2_ops();   // valid only when have_avx2()

// Runtime selection: best available, or forced via MSGMIMC_KERNELS=scalar|avx2.
const Ops& active_ops();

} // namespace msgmimc::kern
