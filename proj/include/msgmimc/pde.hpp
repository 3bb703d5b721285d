#pragma once

#include <string>

#include "msgmimc/field.hpp"
#include "msgmimc/grid.hpp"
#include "msgmimc/kernels.hpp"

namespace msgmimc {

// Variable-coefficient 5-point operator A for -div(a grad u) = h with
// homogeneous Dirichlet data, stored per node (interior entries valid).
// For every interior node c_center > 0, the off-diagonals are <= 0 and
// c_center equals minus their sum; shared edges carry equal coefficients.
struct StencilOp {
  GridLevel level;
  std::vector<double> cc, cw, ce, cs, cn;

  explicit StencilOp(GridLevel lv = GridLevel{})
      : level(lv), cc(lv.nodes(), 0.0), cw(lv.nodes(), 0.0),
        ce(lv.nodes(), 0.0), cs(lv.nodes(), 0.0), cn(lv.nodes(), 0.0) {}

  kern::Stencil5 view() const {
    return {cc.data(), cw.data(), ce.data(), cs.data(), cn.data()};
  }
};

// Direct finite-difference discretisation on the realization's grid. Edge
// coefficients are the geometric mean exp((z_i + z_j)/2) of the adjacent
// nodal log-values (see AveragingRule for the alternatives).
enum class AveragingRule { geometric, arithmetic, harmonic };

StencilOp assemble(const FieldRealization& f,
                   AveragingRule rule = AveragingRule::geometric);

void apply(const StencilOp& A, const GridFn& u, GridFn& out);
GridFn apply(const StencilOp& A, const GridFn& u);

// r = b - A u; boundary entries of r stay zero.
void residual(const StencilOp& A, const GridFn& u, const GridFn& b, GridFn& r);
GridFn residual(const StencilOp& A, const GridFn& u, const GridFn& b);

// Quantities of interest from the paper's experiments.
enum class QoIKind { point, average, flux };

struct QoISpec {
  QoIKind kind = QoIKind::point;
  double px = 0.5, py = 0.5;                    // point evaluation
  double x0 = 0.25, x1 = 0.5, y0 = 0.25, y1 = 0.5; // averaging subdomain
  // flux: rightmost side (x = 1) only

  static QoISpec point_eval() { return {QoIKind::point}; }
  static QoISpec subdomain_average() { return {QoIKind::average}; }
  static QoISpec boundary_flux() { return {QoIKind::flux}; }
  std::string name() const;
};

QoISpec qoi_from_name(const std::string& name);

// u at the node (px, py); the point must lie on the grid.
double qoi_point(const GridFn& u, double px = 0.5, double py = 0.5);

// Composite 2-D trapezoid over the closed subdomain divided by its area;
// the corners must be grid nodes.
double qoi_average(const GridFn& u, double x0 = 0.25, double x1 = 0.5,
                   double y0 = 0.25, double y1 = 0.5);

// -int a((1,y)) du/dx((1,y)) dy with a one-sided first-order derivative and
// the trapezoid rule in y; a at the boundary is exp(z) at boundary nodes.
double qoi_flux(const GridFn& u, const FieldRealization& f);

double eval_qoi(const QoISpec& spec, const GridFn& u,
                const FieldRealization& f);

} // namespace msgmimc
