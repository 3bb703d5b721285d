#include "msgmimc/mimc.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace msgmimc::mimc {

IndexPMF IndexPMF::geometric(double r1, double r2) {
  if (!(r1 > 0.0) || !(r2 > 0.0))
    throw std::invalid_argument("IndexPMF::geometric: rates must be > 0");
  IndexPMF p;
  p.mode_ = Mode::model;
  p.r1_ = r1;
  p.r2_ = r2;
  return p;
}

IndexPMF IndexPMF::empirical(std::vector<double> w, int B1, int B2, double r1,
                             double r2) {
  if (B1 < 0 || B2 < 0 ||
      w.size() != static_cast<std::size_t>(B1 + 1) * (B2 + 1))
    throw std::invalid_argument("IndexPMF::empirical: bad box");
  if (r1 < 0.0 || r2 < 0.0)
    throw std::invalid_argument("IndexPMF::empirical: rates must be >= 0");
  for (double x : w)
    if (x < 0.0) throw std::invalid_argument("IndexPMF::empirical: w >= 0");
  IndexPMF p;
  p.mode_ = Mode::empirical;
  p.r1_ = r1;
  p.r2_ = r2;
  p.B1_ = B1;
  p.B2_ = B2;
  p.w_ = std::move(w);
  p.total_ = p.tail_weight({0, 0});
  if (!(p.total_ > 0.0))
    throw std::invalid_argument("IndexPMF::empirical: zero total mass");
  return p;
}

namespace {
inline double geo_tail(double decay) { // sum_{k>=1} decay^k
  return decay > 0.0 ? decay / (1.0 - decay) : 0.0;
}
} // namespace

// Unnormalised mass of the quadrant {L >= l}. The box part is a direct sum;
// the strips beyond the box boundary are closed-form geometric tails hanging
// off the boundary weights.
double IndexPMF::tail_weight(MultiIndex l) const {
  const double x = r1_ > 0.0 ? std::exp(-r1_) : 0.0;
  const double y = r2_ > 0.0 ? std::exp(-r2_) : 0.0;
  auto wbox = [&](int a, int b) {
    return w_[static_cast<std::size_t>(b) * (B1_ + 1) + a];
  };
  if (l.l1 <= B1_ && l.l2 <= B2_) {
    double s = 0.0;
    for (int b = l.l2; b <= B2_; ++b)
      for (int a = l.l1; a <= B1_; ++a) s += wbox(a, b);
    double east = 0.0;
    for (int b = l.l2; b <= B2_; ++b) east += wbox(B1_, b);
    double north = 0.0;
    for (int a = l.l1; a <= B1_; ++a) north += wbox(a, B2_);
    return s + east * geo_tail(x) + north * geo_tail(y) +
           wbox(B1_, B2_) * geo_tail(x) * geo_tail(y);
  }
  if (l.l1 > B1_ && l.l2 <= B2_) {
    if (x == 0.0) return 0.0;
    const double xk = std::pow(x, l.l1 - B1_) / (1.0 - x);
    double east = 0.0;
    for (int b = l.l2; b <= B2_; ++b) east += wbox(B1_, b);
    return xk * (east + wbox(B1_, B2_) * geo_tail(y));
  }
  if (l.l2 > B2_ && l.l1 <= B1_) {
    if (y == 0.0) return 0.0;
    const double yk = std::pow(y, l.l2 - B2_) / (1.0 - y);
    double north = 0.0;
    for (int a = l.l1; a <= B1_; ++a) north += wbox(a, B2_);
    return yk * (north + wbox(B1_, B2_) * geo_tail(x));
  }
  if (x == 0.0 || y == 0.0) return 0.0;
  return wbox(B1_, B2_) * std::pow(x, l.l1 - B1_) / (1.0 - x) *
         std::pow(y, l.l2 - B2_) / (1.0 - y);
}

double IndexPMF::mass(MultiIndex l) const {
  if (l.l1 < 0 || l.l2 < 0) return 0.0;
  if (mode_ == Mode::model) {
    const double x = std::exp(-r1_), y = std::exp(-r2_);
    return (1.0 - x) * (1.0 - y) * std::exp(-(r1_ * l.l1 + r2_ * l.l2));
  }
  const int a = std::min(l.l1, B1_), b = std::min(l.l2, B2_);
  double m = w_[static_cast<std::size_t>(b) * (B1_ + 1) + a];
  if (l.l1 > B1_) m *= std::exp(-r1_ * (l.l1 - B1_));
  if (l.l2 > B2_) m *= std::exp(-r2_ * (l.l2 - B2_));
  return m / total_;
}

double IndexPMF::tail_prob(MultiIndex l) const {
  if (l.l1 <= 0 && l.l2 <= 0) return 1.0;
  if (mode_ == Mode::model) return std::exp(-(r1_ * l.l1 + r2_ * l.l2));
  return tail_weight(l) / total_;
}

MultiIndex IndexPMF::sample(rng::Stream& stream) const {
  if (mode_ == Mode::model) {
    const double u1 = stream.uniform01();
    const double u2 = stream.uniform01();
    return {static_cast<int>(std::floor(std::log(u1) / -r1_)),
            static_cast<int>(std::floor(std::log(u2) / -r2_))};
  }
  const double x = r1_ > 0.0 ? std::exp(-r1_) : 0.0;
  const double y = r2_ > 0.0 ? std::exp(-r2_) : 0.0;
  auto wbox = [&](int a, int b) {
    return w_[static_cast<std::size_t>(b) * (B1_ + 1) + a];
  };
  auto geometric1 = [&](double decay) { // on {1, 2, ...}
    const double u = stream.uniform01();
    const int k = 1 + static_cast<int>(std::floor(std::log(u) / std::log(decay)));
    return std::min(k, 4096);
  };
  double u = stream.uniform01() * total_;
  for (int b = 0; b <= B2_; ++b)
    for (int a = 0; a <= B1_; ++a) {
      u -= wbox(a, b);
      if (u < 0.0) return {a, b};
    }
  for (int b = 0; b <= B2_; ++b) { // east strips: l1 > B1
    u -= wbox(B1_, b) * geo_tail(x);
    if (u < 0.0) return {B1_ + geometric1(x), b};
  }
  for (int a = 0; a <= B1_; ++a) { // north strips: l2 > B2
    u -= wbox(a, B2_) * geo_tail(y);
    if (u < 0.0) return {a, B2_ + geometric1(y)};
  }
  // corner: both beyond the box
  return {B1_ + geometric1(x), B2_ + geometric1(y)};
}

void IndexStats::record_dq(MultiIndex l, double dq) {
  IndexCell& c = cells_[l];
  c.n += 1;
  const double d = dq - c.mean;
  c.mean += d / static_cast<double>(c.n);
  c.m2 += d * (dq - c.mean);
}

void IndexStats::set_cost_dof(MultiIndex l, double cost) {
  cells_[l].cost_dof = cost;
}

void IndexStats::record_wall(MultiIndex l, double seconds) {
  IndexCell& c = cells_[l];
  c.n_wall += 1;
  c.wall_sum += seconds;
}

namespace {

struct WlsFit {
  bool ok = false;
  double c = 0, s1 = 0, s2 = 0;
  double se1 = 0, se2 = 0;
};

// Count-weighted least squares of y against 1, l1, l2.
WlsFit wls(const std::vector<std::array<double, 4>>& rows) { // l1, l2, y, w
  std::set<int> u1, u2;
  for (const auto& r : rows) {
    u1.insert(static_cast<int>(r[0]));
    u2.insert(static_cast<int>(r[1]));
  }
  WlsFit f;
  if (rows.size() < 3 || u1.size() < 2 || u2.size() < 2) return f;
  double M[3][3] = {};
  double rhs[3] = {};
  for (const auto& r : rows) {
    const double xv[3] = {1.0, r[0], r[1]};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) M[i][j] += r[3] * xv[i] * xv[j];
      rhs[i] += r[3] * xv[i] * r[2];
    }
  }
  // Invert the 3x3 normal matrix by adjugate.
  double inv[3][3];
  const double det = M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1]) -
                     M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0]) +
                     M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0]);
  if (det == 0.0) return f;
  inv[0][0] = (M[1][1] * M[2][2] - M[1][2] * M[2][1]) / det;
  inv[0][1] = (M[0][2] * M[2][1] - M[0][1] * M[2][2]) / det;
  inv[0][2] = (M[0][1] * M[1][2] - M[0][2] * M[1][1]) / det;
  inv[1][0] = (M[1][2] * M[2][0] - M[1][0] * M[2][2]) / det;
  inv[1][1] = (M[0][0] * M[2][2] - M[0][2] * M[2][0]) / det;
  inv[1][2] = (M[0][2] * M[1][0] - M[0][0] * M[1][2]) / det;
  inv[2][0] = (M[1][0] * M[2][1] - M[1][1] * M[2][0]) / det;
  inv[2][1] = (M[0][1] * M[2][0] - M[0][0] * M[2][1]) / det;
  inv[2][2] = (M[0][0] * M[1][1] - M[0][1] * M[1][0]) / det;
  const double beta[3] = {
      inv[0][0] * rhs[0] + inv[0][1] * rhs[1] + inv[0][2] * rhs[2],
      inv[1][0] * rhs[0] + inv[1][1] * rhs[1] + inv[1][2] * rhs[2],
      inv[2][0] * rhs[0] + inv[2][1] * rhs[1] + inv[2][2] * rhs[2]};
  double ssr = 0.0, wsum = 0.0;
  for (const auto& r : rows) {
    const double e = r[2] - (beta[0] + beta[1] * r[0] + beta[2] * r[1]);
    ssr += r[3] * e * e;
    wsum += r[3];
  }
  const double dofree = static_cast<double>(rows.size()) - 3.0;
  const double sigma2 =
      dofree > 0.0 ? ssr / dofree * rows.size() / wsum : 0.0;
  f.ok = true;
  f.c = beta[0];
  f.s1 = beta[1];
  f.s2 = beta[2];
  f.se1 = std::sqrt(std::max(0.0, sigma2 * inv[1][1]));
  f.se2 = std::sqrt(std::max(0.0, sigma2 * inv[2][2]));
  return f;
}

constexpr double kLogFloor = 1e-300;

} // namespace

Rates fit_rates(const IndexStats& stats, long long min_count, bool use_wall) {
  std::vector<std::array<double, 4>> re, rv, rc;
  for (const auto& [l, c] : stats.cells()) {
    const double w = static_cast<double>(c.n);
    if (c.n >= min_count)
      re.push_back({static_cast<double>(l.l1), static_cast<double>(l.l2),
                    std::log2(std::max(std::abs(c.mean), kLogFloor)), w});
    if (c.n >= std::max<long long>(2, min_count))
      rv.push_back({static_cast<double>(l.l1), static_cast<double>(l.l2),
                    std::log2(std::max(c.var(), kLogFloor)), w});
    const double cost =
        use_wall ? (c.n_wall > 0 ? c.wall_sum / c.n_wall : 0.0) : c.cost_dof;
    if (cost > 0.0)
      rc.push_back({static_cast<double>(l.l1), static_cast<double>(l.l2),
                    std::log2(cost), w});
  }
  const WlsFit fe = wls(re), fv = wls(rv), fc = wls(rc);
  Rates out;
  if (!fe.ok || !fv.ok || !fc.ok) return out;
  out.ok = true;
  out.alpha[0] = -fe.s1;
  out.alpha[1] = -fe.s2;
  out.beta[0] = -fv.s1;
  out.beta[1] = -fv.s2;
  out.gamma[0] = fc.s1;
  out.gamma[1] = fc.s2;
  out.se_alpha[0] = fe.se1;
  out.se_alpha[1] = fe.se2;
  out.se_beta[0] = fv.se1;
  out.se_beta[1] = fv.se2;
  out.se_gamma[0] = fc.se1;
  out.se_gamma[1] = fc.se2;
  return out;
}

IndexPMF update_pmf(const IndexPMF& current, const Rates& rates,
                    bool* degenerate) {
  if (degenerate) *degenerate = false;
  if (!rates.ok) return current;
  if (rates.beta[0] <= rates.gamma[0] || rates.beta[1] <= rates.gamma[1]) {
    if (degenerate) *degenerate = true;
    return current;
  }
  const double half_log2 = 0.5 * std::log(2.0);
  return IndexPMF::geometric(half_log2 * (rates.gamma[0] + rates.beta[0]),
                             half_log2 * (rates.gamma[1] + rates.beta[1]));
}

BoxFn delta_tensor(const BoxFn& q) {
  BoxFn d(q.top);
  for (int b = 0; b <= q.top.l2; ++b) {
    for (int a = 0; a <= q.top.l1; ++a) {
      double s = q.at({a, b});
      if (a > 0) s -= q.at({a - 1, b});
      if (b > 0) s -= q.at({a, b - 1});
      if (a > 0 && b > 0) s += q.at({a - 1, b - 1});
      d.at({a, b}) = s;
    }
  }
  return d;
}

void EstimatorAccum::add(double y) {
  n_ += 1;
  const double d = y - mean_;
  mean_ += d / static_cast<double>(n_);
  m2_ += d * (y - mean_);
}

double EstimatorAccum::E() const {
  if (n_ < 1) throw std::logic_error("EstimatorAccum: E needs N >= 1");
  return mean_;
}

double EstimatorAccum::V() const {
  if (n_ < 2) throw std::logic_error("EstimatorAccum: V needs N >= 2");
  return m2_ / (static_cast<double>(n_ - 1) * static_cast<double>(n_));
}

double dof_of(int p, int q) {
  return static_cast<double>((1 << p) - 1) * static_cast<double>((1 << q) - 1);
}

double stencil_cost_dof(MultiIndex l, int p0, int q0) {
  double c = dof_of(p0 + l.l1, q0 + l.l2);
  if (l.l1 > 0) c += dof_of(p0 + l.l1 - 1, q0 + l.l2);
  if (l.l2 > 0) c += dof_of(p0 + l.l1, q0 + l.l2 - 1);
  if (l.l1 > 0 && l.l2 > 0) c += dof_of(p0 + l.l1 - 1, q0 + l.l2 - 1);
  return c;
}

double cost_reduction_factor(std::span<const double> beta,
                             std::span<const double> gamma) {
  if (beta.size() != gamma.size() || beta.empty() || beta.size() > 16)
    throw std::invalid_argument("cost_reduction_factor: bad rate vectors");
  const int d = static_cast<int>(beta.size());
  double sum = 0.0;
  for (unsigned mask = 1; mask < (1u << d); ++mask) {
    double prod = 1.0;
    int bits = 0;
    for (int j = 0; j < d; ++j)
      if (mask & (1u << j)) {
        prod *= std::pow(2.0, -0.5 * (gamma[j] + beta[j]));
        ++bits;
      }
    sum += (bits % 2 == 1 ? 1.0 : -1.0) * prod;
  }
  return 1.0 - sum;
}

double cost_accounting(std::span<const SampleRecord> samples, int p0, int q0,
                       CostMode mode) {
  double total = 0.0;
  for (const auto& s : samples) {
    if (mode == CostMode::recycled) {
      total += stencil_cost_dof(s.L, p0, q0);
    } else {
      for (int b = 0; b <= s.L.l2; ++b)
        for (int a = 0; a <= s.L.l1; ++a)
          total += stencil_cost_dof({a, b}, p0, q0);
    }
  }
  return total;
}

} // namespace msgmimc::mimc
