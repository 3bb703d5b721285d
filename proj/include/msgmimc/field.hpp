#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include "msgmimc/grid.hpp"
#include "msgmimc/rng.hpp"

namespace msgmimc {

// Matern covariance model with anisotropic geometry: the distance between
// two points is || sqrt(Lambda) R (x1 - x2) || with
// sqrt(Lambda) = diag(1/sqrt(eta*lambda), 1/sqrt(lambda)) and R the rotation
// by theta.
struct CovarianceSpec {
  double nu = 0.5;      // smoothness, > 0
  double lambda = 0.25; // length scale, > 0
  double eta = 1.0;     // anisotropy ratio, in (0, 1]
  double theta = 0.0;   // rotation angle in radians

  void validate() const;
};

// Uniform priors for the per-sample hyperparameters eta and theta;
// nu and lambda stay fixed. Angles are radians here; the CLI converts.
struct HyperPrior {
  double eta_lo = 1.0 / 16.0;
  double eta_hi = 1.0 / 4.0;
  double theta_lo = -30.0 * M_PI / 180.0;
  double theta_hi = 30.0 * M_PI / 180.0;
  double nu = 0.5;
  double lambda = 0.25;

  void validate() const;
};

// One draw of the Gaussian log-permeability field Z at all nodes of its
// finest grid. The diffusion coefficient is exp(z) pointwise and is never
// stored separately.
struct FieldRealization {
  GridLevel level;
  GridFn z;
  CovarianceSpec hyper;
  std::uint64_t seed = 0; // sample identifier
};

// matern(0, nu) == 1 exactly; throws for nu <= 0.
double matern(double rho, double nu);

double aniso_distance(double dx, double dy, const CovarianceSpec& spec);
inline double aniso_distance(double x1, double y1, double x2, double y2,
                             const CovarianceSpec& spec) {
  return aniso_distance(x1 - x2, y1 - y2, spec);
}

// Enlargement factor 1 + 2 ceil(sqrt(nu) * p0_base) for the periodic
// embedding; always odd and >= 3.
int embedding_size(int p0_base, double nu);

struct EmbeddingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Real nonnegative eigenvalues of the covariance on the extended torus with
// factor * 2^p by factor * 2^q cells. Row-major with k1 (x frequency)
// fastest. Mean of the eigenvalues equals the unit variance.
struct Spectrum {
  GridLevel level;
  int factor = 0;
  int m1 = 0;
  int m2 = 0;
  std::vector<double> eig;
};

// Negative eigenvalues up to 1e-12 of the largest one are clipped to zero;
// anything worse raises EmbeddingError suggesting a larger factor.
Spectrum embed_eigenvalues(const CovarianceSpec& spec, GridLevel level,
                           int factor);

FieldRealization sample_field(const Spectrum& eigs, const CovarianceSpec& spec,
                              GridLevel level, rng::Stream& stream,
                              std::uint64_t sample_id);

CovarianceSpec draw_hyper(const HyperPrior& prior, rng::Stream& stream);

// Nested subsample of z at every 2^(dp)-th / 2^(dq)-th node.
FieldRealization coarsen_realization(const FieldRealization& f,
                                     GridLevel target);

// Convenience wrapper holding a small exact-key spectrum cache (hits only
// when hyperparameters repeat bit for bit, so results never depend on it)
// and, optionally, the unused imaginary field copy of the previous draw.
class FieldSampler {
 public:
  explicit FieldSampler(bool reuse_imaginary = false)
      : reuse_imaginary_(reuse_imaginary) {}

  FieldRealization draw(const CovarianceSpec& spec, GridLevel level, int factor,
                        rng::Stream& stream, std::uint64_t sample_id);

 private:
  struct CacheEntry {
    CovarianceSpec spec;
    Spectrum spectrum;
  };
  std::vector<CacheEntry> cache_;
  bool reuse_imaginary_;
  bool have_pending_ = false;
  CovarianceSpec pending_spec_;
  FieldRealization pending_;

  const Spectrum& spectrum_for(const CovarianceSpec& spec, GridLevel level,
                               int factor);
};

// Flat text dump: header "p q eta theta seed", then ny rows of nx values.
void dump_realization(const FieldRealization& f, const std::string& path);

} // namespace msgmimc
