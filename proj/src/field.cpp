#include "msgmimc/field.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <map>
#include <mutex>
#include <stdexcept>

namespace msgmimc {

void CovarianceSpec::validate() const {
  if (!(nu > 0.0)) throw std::invalid_argument("CovarianceSpec: nu must be > 0");
  if (!(lambda > 0.0))
    throw std::invalid_argument("CovarianceSpec: lambda must be > 0");
  if (!(eta > 0.0 && eta <= 1.0))
    throw std::invalid_argument("CovarianceSpec: eta must be in (0, 1]");
}

void HyperPrior::validate() const {
  if (!(eta_lo > 0.0 && eta_hi <= 1.0 && eta_lo <= eta_hi))
    throw std::invalid_argument("HyperPrior: bad eta range");
  if (!(theta_lo <= theta_hi))
    throw std::invalid_argument("HyperPrior: bad theta range");
  if (!(nu > 0.0 && lambda > 0.0))
    throw std::invalid_argument("HyperPrior: nu and lambda must be > 0");
}

double matern(double rho, double nu) {
  if (!(nu > 0.0)) throw std::invalid_argument("matern: nu must be > 0");
  if (!(rho >= 0.0)) throw std::invalid_argument("matern: rho must be >= 0");
  if (rho == 0.0) return 1.0;
  const double z = 2.0 * std::sqrt(nu) * rho;
  if (nu == 0.5) return std::exp(-z);
  if (nu == 1.5) return (1.0 + z) * std::exp(-z);
  if (nu == 2.5) return (1.0 + z + z * z / 3.0) * std::exp(-z);
  return std::pow(2.0, 1.0 - nu) / std::tgamma(nu) * std::pow(z, nu) *
         std::cyl_bessel_k(nu, z);
}

double aniso_distance(double dx, double dy, const CovarianceSpec& spec) {
  const double c = std::cos(spec.theta), s = std::sin(spec.theta);
  const double rx = c * dx - s * dy;
  const double ry = s * dx + c * dy;
  const double ax = rx / std::sqrt(spec.eta * spec.lambda);
  const double ay = ry / std::sqrt(spec.lambda);
  return std::hypot(ax, ay);
}

int embedding_size(int p0_base, double nu) {
  if (p0_base < 1) throw std::invalid_argument("embedding_size: exponent >= 1");
  return 1 + 2 * static_cast<int>(std::ceil(std::sqrt(nu) * p0_base));
}

namespace {

// One FFTW plan per extended-grid size; FFTW_ESTIMATE keeps planning
// deterministic, FFTW_UNALIGNED lets the plan run on any caller buffers.
class PlanCache {
 public:
  static void forward2d(std::complex<double>* in, std::complex<double>* out,
                        int m1, int m2) {
    static PlanCache cache;
    fftw_plan plan;
    {
      std::lock_guard<std::mutex> lock(cache.mu_);
      auto it = cache.plans_.find({m1, m2});
      if (it == cache.plans_.end()) {
        fftw_complex* a = fftw_alloc_complex(static_cast<std::size_t>(m1) * m2);
        fftw_complex* b = fftw_alloc_complex(static_cast<std::size_t>(m1) * m2);
        // fftw uses row-major with the first dimension slowest; k1 is fastest.
        plan = fftw_plan_dft_2d(m2, m1, a, b, FFTW_FORWARD,
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(a);
        fftw_free(b);
        cache.plans_[{m1, m2}] = plan;
      } else {
        plan = it->second;
      }
    }
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(in),
                     reinterpret_cast<fftw_complex*>(out));
  }

 private:
  std::mutex mu_;
  std::map<std::pair<int, int>, fftw_plan> plans_;
};

inline double wrap_offset(int k, int m, double delta) {
  return (2 * k <= m ? k : k - m) * delta;
}

} // namespace

Spectrum embed_eigenvalues(const CovarianceSpec& spec, GridLevel level,
                           int factor) {
  spec.validate();
  if (factor < 3 || factor % 2 == 0)
    throw std::invalid_argument("embed_eigenvalues: factor must be odd, >= 3");
  Spectrum sp;
  sp.level = level;
  sp.factor = factor;
  sp.m1 = factor * (1 << level.p);
  sp.m2 = factor * (1 << level.q);
  const std::size_t m = static_cast<std::size_t>(sp.m1) * sp.m2;

  std::vector<std::complex<double>> row(m), hat(m);
  for (int k2 = 0; k2 < sp.m2; ++k2) {
    const double ty = wrap_offset(k2, sp.m2, level.dy());
    for (int k1 = 0; k1 < sp.m1; ++k1) {
      const double tx = wrap_offset(k1, sp.m1, level.dx());
      row[static_cast<std::size_t>(k2) * sp.m1 + k1] =
          matern(aniso_distance(tx, ty, spec), spec.nu);
    }
  }
  // A rotated metric is not even per coordinate, so the Nyquist row and
  // column of the even-sized torus break the point symmetry c(-t) = c(t).
  // Averaging each entry with its negated-offset partner restores an exactly
  // real spectrum; physical lags stay below the Nyquist offsets (factor >= 3)
  // and are unaffected.
  for (int k2 = 0; k2 < sp.m2; ++k2) {
    for (int k1 = 0; k1 < sp.m1; ++k1) {
      const std::size_t a = static_cast<std::size_t>(k2) * sp.m1 + k1;
      const std::size_t b =
          static_cast<std::size_t>((sp.m2 - k2) % sp.m2) * sp.m1 +
          (sp.m1 - k1) % sp.m1;
      if (a < b) {
        const double avg = 0.5 * (row[a].real() + row[b].real());
        row[a] = avg;
        row[b] = avg;
      }
    }
  }
  PlanCache::forward2d(row.data(), hat.data(), sp.m1, sp.m2);

  double max_abs = 0.0, max_imag = 0.0, min_real = 0.0;
  for (const auto& h : hat) {
    max_abs = std::max(max_abs, std::abs(h.real()));
    max_imag = std::max(max_imag, std::abs(h.imag()));
    min_real = std::min(min_real, h.real());
  }
  if (max_imag > 1e-10 * max_abs)
    throw EmbeddingError("embedding spectrum has a non-real component");
  const double tol = 1e-12 * max_abs;
  if (min_real < -tol)
    throw EmbeddingError(
        "covariance embedding is not positive semidefinite (most negative "
        "eigenvalue " +
        std::to_string(min_real) + "); increase the padding factor");
  sp.eig.resize(m);
  for (std::size_t k = 0; k < m; ++k)
    sp.eig[k] = hat[k].real() < 0.0 ? 0.0 : hat[k].real();
  return sp;
}

FieldRealization sample_field(const Spectrum& eigs, const CovarianceSpec& spec,
                              GridLevel level, rng::Stream& stream,
                              std::uint64_t sample_id) {
  if (!(eigs.level == level) ||
      eigs.eig.size() != static_cast<std::size_t>(eigs.m1) * eigs.m2)
    throw std::invalid_argument("sample_field: spectrum does not match level");
  const std::size_t m = eigs.eig.size();
  std::vector<std::complex<double>> xi(m), out(m);
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(m));
  for (std::size_t k = 0; k < m; ++k) {
    const double a = stream.normal();
    const double b = stream.normal();
    const double s = std::sqrt(eigs.eig[k]) * inv_sqrt_m;
    xi[k] = {s * a, s * b};
  }
  PlanCache::forward2d(xi.data(), out.data(), eigs.m1, eigs.m2);

  FieldRealization f;
  f.level = level;
  f.hyper = spec;
  f.seed = sample_id;
  f.z = GridFn(level);
  for (int j = 0; j < level.ny(); ++j)
    for (int i = 0; i < level.nx(); ++i)
      f.z(i, j) = out[static_cast<std::size_t>(j) * eigs.m1 + i].real();
  return f;
}

CovarianceSpec draw_hyper(const HyperPrior& prior, rng::Stream& stream) {
  prior.validate();
  CovarianceSpec spec;
  spec.nu = prior.nu;
  spec.lambda = prior.lambda;
  spec.eta = stream.uniform(prior.eta_lo, prior.eta_hi);
  spec.theta = stream.uniform(prior.theta_lo, prior.theta_hi);
  return spec;
}

FieldRealization coarsen_realization(const FieldRealization& f,
                                     GridLevel target) {
  if (target.p > f.level.p || target.q > f.level.q)
    throw std::invalid_argument("coarsen_realization: target finer than source");
  const int sx = 1 << (f.level.p - target.p);
  const int sy = 1 << (f.level.q - target.q);
  FieldRealization out;
  out.level = target;
  out.hyper = f.hyper;
  out.seed = f.seed;
  out.z = GridFn(target);
  for (int j = 0; j < target.ny(); ++j)
    for (int i = 0; i < target.nx(); ++i) out.z(i, j) = f.z(i * sx, j * sy);
  return out;
}

namespace {

bool same_spec(const CovarianceSpec& a, const CovarianceSpec& b) {
  return a.nu == b.nu && a.lambda == b.lambda && a.eta == b.eta &&
         a.theta == b.theta;
}

} // namespace

const Spectrum& FieldSampler::spectrum_for(const CovarianceSpec& spec,
                                           GridLevel level, int factor) {
  for (auto& e : cache_)
    if (same_spec(e.spec, spec) && e.spectrum.level == level &&
        e.spectrum.factor == factor)
      return e.spectrum;
  if (cache_.size() >= 16) cache_.erase(cache_.begin());
  cache_.push_back({spec, embed_eigenvalues(spec, level, factor)});
  return cache_.back().spectrum;
}

FieldRealization FieldSampler::draw(const CovarianceSpec& spec,
                                    GridLevel level, int factor,
                                    rng::Stream& stream,
                                    std::uint64_t sample_id) {
  if (reuse_imaginary_ && have_pending_ && same_spec(pending_spec_, spec) &&
      pending_.level == level) {
    have_pending_ = false;
    FieldRealization f = std::move(pending_);
    f.seed = sample_id;
    return f;
  }
  const Spectrum& sp = spectrum_for(spec, level, factor);
  if (!reuse_imaginary_) return sample_field(sp, spec, level, stream, sample_id);

  // Keep the imaginary copy for the next draw with identical parameters.
  const std::size_t m = sp.eig.size();
  std::vector<std::complex<double>> xi(m), out(m);
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(m));
  for (std::size_t k = 0; k < m; ++k) {
    const double a = stream.normal();
    const double b = stream.normal();
    const double s = std::sqrt(sp.eig[k]) * inv_sqrt_m;
    xi[k] = {s * a, s * b};
  }
  PlanCache::forward2d(xi.data(), out.data(), sp.m1, sp.m2);
  FieldRealization f;
  f.level = level;
  f.hyper = spec;
  f.seed = sample_id;
  f.z = GridFn(level);
  pending_ = f;
  for (int j = 0; j < level.ny(); ++j)
    for (int i = 0; i < level.nx(); ++i) {
      const auto v = out[static_cast<std::size_t>(j) * sp.m1 + i];
      f.z(i, j) = v.real();
      pending_.z(i, j) = v.imag();
    }
  pending_spec_ = spec;
  have_pending_ = true;
  return f;
}

void dump_realization(const FieldRealization& f, const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "w");
  if (!fp) throw std::runtime_error("dump_realization: cannot open " + path);
  std::fprintf(fp, "%d %d %.17g %.17g %llu\n", f.level.p, f.level.q,
               f.hyper.eta, f.hyper.theta,
               static_cast<unsigned long long>(f.seed));
  for (int j = 0; j < f.level.ny(); ++j) {
    for (int i = 0; i < f.level.nx(); ++i)
      std::fprintf(fp, i ? " %.17g" : "%.17g", f.z(i, j));
    std::fprintf(fp, "\n");
  }
  std::fclose(fp);
}

} // namespace msgmimc
