#include "msgmimc/pde.hpp"

#include <cmath>
#include <stdexcept>

namespace msgmimc {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

inline double edge_coeff(double za, double zb, AveragingRule rule) {
  switch (rule) {
    case AveragingRule::geometric:
      return std::exp(0.5 * (za + zb));
    case AveragingRule::arithmetic:
      return 0.5 * (std::exp(za) + std::exp(zb));
    case AveragingRule::harmonic:
      return 2.0 / (std::exp(-za) + std::exp(-zb));
  }
  return 0.0;
}

// Grid index of a dyadic coordinate, or -1 when x is not a node.
int node_index(double x, int cells) {
  const double t = x * cells;
  const double r = std::nearbyint(t);
  if (std::abs(t - r) > 1e-9 || r < 0 || r > cells) return -1;
  return static_cast<int>(r);
}

} // namespace

StencilOp assemble(const FieldRealization& f, AveragingRule rule) {
  const GridLevel lv = f.level;
  StencilOp A(lv);
  const int nx = lv.nx(), ny = lv.ny();
  const double ix2 = 1.0 / (lv.dx() * lv.dx());
  const double iy2 = 1.0 / (lv.dy() * lv.dy());

  // Edge coefficients between neighbouring nodes, shared by both rows.
  std::vector<double> ax(static_cast<std::size_t>(nx - 1) * ny);
  std::vector<double> ay(static_cast<std::size_t>(nx) * (ny - 1));
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i + 1 < nx; ++i)
      ax[static_cast<std::size_t>(j) * (nx - 1) + i] =
          edge_coeff(f.z(i, j), f.z(i + 1, j), rule);
  for (int j = 0; j + 1 < ny; ++j)
    for (int i = 0; i < nx; ++i)
      ay[static_cast<std::size_t>(j) * nx + i] =
          edge_coeff(f.z(i, j), f.z(i, j + 1), rule);

  for (int j = 1; j < ny - 1; ++j) {
    for (int i = 1; i < nx - 1; ++i) {
      const std::size_t k = static_cast<std::size_t>(j) * nx + i;
      const double aw = ax[static_cast<std::size_t>(j) * (nx - 1) + i - 1];
      const double ae = ax[static_cast<std::size_t>(j) * (nx - 1) + i];
      const double as = ay[static_cast<std::size_t>(j - 1) * nx + i];
      const double an = ay[static_cast<std::size_t>(j) * nx + i];
      A.cw[k] = -aw * ix2;
      A.ce[k] = -ae * ix2;
      A.cs[k] = -as * iy2;
      A.cn[k] = -an * iy2;
      A.cc[k] = (aw + ae) * ix2 + (as + an) * iy2;
    }
  }
  return A;
}

void apply(const StencilOp& A, const GridFn& u, GridFn& out) {
  require(A.level == u.level() && A.level == out.level(),
          "apply: level mismatch");
  kern::active_ops().apply_op(out.data(), u.data(), A.view(), A.level.nx(),
                              A.level.ny());
}

GridFn apply(const StencilOp& A, const GridFn& u) {
  GridFn out(A.level);
  apply(A, u, out);
  return out;
}

void residual(const StencilOp& A, const GridFn& u, const GridFn& b,
              GridFn& r) {
  require(A.level == u.level() && A.level == b.level() &&
              A.level == r.level(),
          "residual: level mismatch");
  kern::active_ops().residual(r.data(), u.data(), b.data(), A.view(),
                              A.level.nx(), A.level.ny());
}

GridFn residual(const StencilOp& A, const GridFn& u, const GridFn& b) {
  GridFn r(A.level);
  residual(A, u, b, r);
  return r;
}

std::string QoISpec::name() const {
  switch (kind) {
    case QoIKind::point: return "point";
    case QoIKind::average: return "average";
    case QoIKind::flux: return "flux";
  }
  return "?";
}

QoISpec qoi_from_name(const std::string& name) {
  if (name == "point" || name == "q1") return QoISpec::point_eval();
  if (name == "average" || name == "q2") return QoISpec::subdomain_average();
  if (name == "flux" || name == "q3") return QoISpec::boundary_flux();
  throw std::invalid_argument("unknown QoI '" + name + "'");
}

double qoi_point(const GridFn& u, double px, double py) {
  const int i = node_index(px, 1 << u.level().p);
  const int j = node_index(py, 1 << u.level().q);
  require(i >= 0 && j >= 0, "qoi_point: point is not a grid node");
  return u(i, j);
}

double qoi_average(const GridFn& u, double x0, double x1, double y0,
                   double y1) {
  const int cx = 1 << u.level().p, cy = 1 << u.level().q;
  const int i0 = node_index(x0, cx), i1 = node_index(x1, cx);
  const int j0 = node_index(y0, cy), j1 = node_index(y1, cy);
  require(i0 >= 0 && i1 > i0 && j0 >= 0 && j1 > j0,
          "qoi_average: subdomain corners are not grid nodes");
  double sum = 0.0;
  for (int j = j0; j <= j1; ++j) {
    const double wy = (j == j0 || j == j1) ? 0.5 : 1.0;
    for (int i = i0; i <= i1; ++i) {
      const double wx = (i == i0 || i == i1) ? 0.5 : 1.0;
      sum += wx * wy * u(i, j);
    }
  }
  const double area = (x1 - x0) * (y1 - y0);
  return sum * u.level().dx() * u.level().dy() / area;
}

double qoi_flux(const GridFn& u, const FieldRealization& f) {
  require(u.level() == f.level, "qoi_flux: level mismatch");
  const int nx = u.level().nx(), ny = u.level().ny();
  const double dx = u.level().dx(), dy = u.level().dy();
  double sum = 0.0;
  for (int j = 0; j < ny; ++j) {
    const double wy = (j == 0 || j == ny - 1) ? 0.5 : 1.0;
    const double a = std::exp(f.z(nx - 1, j));
    const double dudx = (u(nx - 1, j) - u(nx - 2, j)) / dx;
    sum += wy * a * dudx;
  }
  return -sum * dy;
}

double eval_qoi(const QoISpec& spec, const GridFn& u,
                const FieldRealization& f) {
  switch (spec.kind) {
    case QoIKind::point: return qoi_point(u, spec.px, spec.py);
    case QoIKind::average:
      return qoi_average(u, spec.x0, spec.x1, spec.y0, spec.y1);
    case QoIKind::flux: return qoi_flux(u, f);
  }
  throw std::invalid_argument("eval_qoi: bad kind");
}

} // namespace msgmimc
