#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "msgmimc/field.hpp"
#include "msgmimc/rng.hpp"

using namespace msgmimc;

TEST_CASE("matern closed form at nu = 1/2") {
  for (int i = 0; i <= 100; ++i) {
    const double rho = 10.0 * i / 100.0;
    CHECK(matern(rho, 0.5) ==
          doctest::Approx(std::exp(-std::sqrt(2.0) * rho)).epsilon(1e-10));
  }
  CHECK(matern(0.0, 0.5) == 1.0);
  CHECK(matern(0.0, 2.0) == 1.0);
}

TEST_CASE("half-integer forms agree with the general Bessel path") {
  // Evaluate the generic formula directly and compare to the fast paths.
  auto generic = [](double rho, double nu) {
    const double z = 2.0 * std::sqrt(nu) * rho;
    return std::pow(2.0, 1.0 - nu) / std::tgamma(nu) * std::pow(z, nu) *
           std::cyl_bessel_k(nu, z);
  };
  for (double rho : {1e-8, 1e-4, 0.03, 0.5, 1.0, 3.0, 10.0}) {
    CHECK(matern(rho, 0.5) ==
          doctest::Approx(generic(rho, 0.5)).epsilon(1e-10));
    CHECK(matern(rho, 1.5) ==
          doctest::Approx(generic(rho, 1.5)).epsilon(1e-10));
    CHECK(matern(rho, 2.5) ==
          doctest::Approx(generic(rho, 2.5)).epsilon(1e-10));
  }
  // K_{3/2}(z) = sqrt(pi/2z) e^-z (1 + 1/z) gives (1+z)e^-z at rho = 1.
  const double z = 2.0 * std::sqrt(1.5);
  CHECK(matern(1.0, 1.5) ==
        doctest::Approx((1.0 + z) * std::exp(-z)).epsilon(1e-12));
}

TEST_CASE("matern decreases in rho") {
  for (double nu : {0.5, 1.0, 1.5, 2.5, 3.7}) {
    double prev = matern(0.0, nu);
    for (int i = 1; i <= 50; ++i) {
      const double cur = matern(0.2 * i, nu);
      CHECK(cur < prev);
      prev = cur;
    }
  }
  CHECK_THROWS_AS(matern(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("anisotropic distance") {
  CovarianceSpec iso{0.5, 1.0, 1.0, 0.0};
  CHECK(aniso_distance(0.0, 0.0, iso) == 0.0);
  CHECK(aniso_distance(1.0, 0.0, iso) == doctest::Approx(1.0));

  // Rotation equivariance: theta = 90 degrees of (dx, dy) equals theta = 0
  // of (dy, -dx).
  CovarianceSpec rot{0.5, 0.25, 0.2, M_PI / 2.0};
  CovarianceSpec flat{0.5, 0.25, 0.2, 0.0};
  rng::Stream s(9, 9, rng::Lane::generic);
  for (int rep = 0; rep < 20; ++rep) {
    const double dx = s.uniform(-1.0, 1.0), dy = s.uniform(-1.0, 1.0);
    CHECK(aniso_distance(dx, dy, rot) ==
          doctest::Approx(aniso_distance(dy, -dx, flat)).epsilon(1e-12));
  }

  // Translation invariance of the point overload.
  CHECK(aniso_distance(0.3, 0.4, 0.1, 0.2, flat) ==
        doctest::Approx(aniso_distance(0.8, 0.9, 0.6, 0.7, flat)).epsilon(1e-12));
}

TEST_CASE("embedding factor formula") {
  CHECK(embedding_size(4, 0.5) == 7); // 1 + 2 ceil(4/sqrt(2)) = 7
  CHECK(embedding_size(1, 1.0) == 3);
  for (int p = 1; p <= 10; ++p)
    for (double nu : {0.3, 0.5, 1.0, 1.7}) {
      const int f = embedding_size(p, nu);
      CHECK(f >= 3);
      CHECK(f % 2 == 1);
    }
}

TEST_CASE("embedding eigenvalues: trace identity and symmetry") {
  const GridLevel lv{4, 4};
  CovarianceSpec spec{0.5, 0.25, 0.25, 20.0 * M_PI / 180.0};
  const Spectrum sp = embed_eigenvalues(spec, lv, embedding_size(4, spec.nu));
  double sum = 0.0;
  for (double e : sp.eig) {
    CHECK(e >= 0.0);
    sum += e;
  }
  // Mean eigenvalue equals the unit variance c(0) = 1.
  CHECK(sum / static_cast<double>(sp.eig.size()) ==
        doctest::Approx(1.0).epsilon(1e-10));

  // Isotropic spectrum is symmetric under exchanging the frequency axes.
  CovarianceSpec iso{0.5, 0.25, 1.0, 0.0};
  const Spectrum si = embed_eigenvalues(iso, lv, 7);
  REQUIRE(si.m1 == si.m2);
  for (int k2 = 0; k2 < si.m2; ++k2)
    for (int k1 = 0; k1 < si.m1; ++k1)
      CHECK(si.eig[static_cast<std::size_t>(k2) * si.m1 + k1] ==
            doctest::Approx(si.eig[static_cast<std::size_t>(k1) * si.m1 + k2])
                .epsilon(1e-10));
}

TEST_CASE("sampling is deterministic in (seed, hyperparameters)") {
  const GridLevel lv{4, 3};
  CovarianceSpec spec{0.5, 0.25, 0.2, 0.1};
  const Spectrum sp = embed_eigenvalues(spec, lv, embedding_size(4, spec.nu));
  rng::Stream s1(77, 5, rng::Lane::field), s2(77, 5, rng::Lane::field);
  const FieldRealization a = sample_field(sp, spec, lv, s1, 5);
  const FieldRealization b = sample_field(sp, spec, lv, s2, 5);
  for (int j = 0; j < lv.ny(); ++j)
    for (int i = 0; i < lv.nx(); ++i) CHECK(a.z(i, j) == b.z(i, j));
}

TEST_CASE("sampled fields match the covariance model" *
          doctest::timeout(120)) {
  const GridLevel lv{5, 5};
  CovarianceSpec spec{0.5, 0.25, 0.25, 30.0 * M_PI / 180.0};
  const Spectrum sp = embed_eigenvalues(spec, lv, embedding_size(5, spec.nu));
  const int n = 2000;

  const std::pair<int, int> probes[5] = {
      {3, 3}, {16, 16}, {7, 23}, {29, 5}, {16, 30}};
  const std::pair<std::pair<int, int>, std::pair<int, int>> pairs[5] = {
      {{3, 3}, {4, 3}},   {{16, 16}, {16, 18}}, {{8, 8}, {12, 8}},
      {{20, 4}, {22, 7}}, {{5, 25}, {6, 26}}};

  double sum[5] = {}, sq[5] = {};
  double pa[5] = {}, pb[5] = {}, paa[5] = {}, pbb[5] = {}, pab[5] = {};
  for (int k = 0; k < n; ++k) {
    rng::Stream s(123, static_cast<std::uint64_t>(k), rng::Lane::field);
    const FieldRealization f = sample_field(sp, spec, lv, s, k);
    for (int t = 0; t < 5; ++t) {
      const double z = f.z(probes[t].first, probes[t].second);
      sum[t] += z;
      sq[t] += z * z;
      const double za = f.z(pairs[t].first.first, pairs[t].first.second);
      const double zb = f.z(pairs[t].second.first, pairs[t].second.second);
      pa[t] += za;
      pb[t] += zb;
      paa[t] += za * za;
      pbb[t] += zb * zb;
      pab[t] += za * zb;
    }
  }
  for (int t = 0; t < 5; ++t) {
    const double var = sq[t] / n - (sum[t] / n) * (sum[t] / n);
    CHECK(var > 0.9);  // +-3.2 sigma band of the chi^2 sampling noise
    CHECK(var < 1.1);

    const double ma = pa[t] / n, mb = pb[t] / n;
    const double va = paa[t] / n - ma * ma, vb = pbb[t] / n - mb * mb;
    const double cov = pab[t] / n - ma * mb;
    const double corr = cov / std::sqrt(va * vb);
    const auto& [A, B] = pairs[t];
    const double rho = aniso_distance((A.first - B.first) * lv.dx(),
                                      (A.second - B.second) * lv.dy(), spec);
    const double want = matern(rho, spec.nu);
    // 3 standard errors of a correlation estimate
    const double se = (1.0 - want * want) / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(corr - want) < 3.0 * se + 1e-3);
  }
}

TEST_CASE("hyperparameter draws") {
  HyperPrior prior;

  SUBCASE("degenerate prior returns the fixed spec") {
    prior.eta_lo = prior.eta_hi = 0.125;
    prior.theta_lo = prior.theta_hi = 0.25;
    rng::Stream s(3, 1, rng::Lane::hyper);
    const CovarianceSpec spec = draw_hyper(prior, s);
    CHECK(spec.eta == 0.125);
    CHECK(spec.theta == 0.25);
    CHECK(spec.nu == prior.nu);
    CHECK(spec.lambda == prior.lambda);
  }

  SUBCASE("uniform mean and range containment") {
    double sum = 0.0;
    const int n = 10000;
    for (int k = 0; k < n; ++k) {
      rng::Stream s(17, static_cast<std::uint64_t>(k), rng::Lane::hyper);
      const CovarianceSpec spec = draw_hyper(prior, s);
      sum += spec.eta;
      CHECK(spec.theta >= prior.theta_lo);
      CHECK(spec.theta <= prior.theta_hi);
      CHECK(spec.eta >= prior.eta_lo);
      CHECK(spec.eta <= prior.eta_hi);
    }
    const double width = prior.eta_hi - prior.eta_lo;
    const double se = width / std::sqrt(12.0 * n);
    CHECK(std::abs(sum / n - 0.5 * (prior.eta_lo + prior.eta_hi)) < 3.0 * se);
  }
}

TEST_CASE("coarsening is nested and preserves shared nodes") {
  const GridLevel lv{5, 4};
  CovarianceSpec spec{0.5, 0.25, 0.3, 0.0};
  const Spectrum sp = embed_eigenvalues(spec, lv, embedding_size(5, spec.nu));
  rng::Stream s(21, 0, rng::Lane::field);
  const FieldRealization f = sample_field(sp, spec, lv, s, 0);

  const FieldRealization same = coarsen_realization(f, lv);
  for (int j = 0; j < lv.ny(); ++j)
    for (int i = 0; i < lv.nx(); ++i) CHECK(same.z(i, j) == f.z(i, j));

  const FieldRealization two = coarsen_realization(f, GridLevel{3, 2});
  const FieldRealization step =
      coarsen_realization(coarsen_realization(f, GridLevel{4, 3}),
                          GridLevel{3, 2});
  for (int j = 0; j < two.level.ny(); ++j)
    for (int i = 0; i < two.level.nx(); ++i)
      CHECK(two.z(i, j) == step.z(i, j));

  // Corners are nested nodes of every coarsening.
  const FieldRealization c = coarsen_realization(f, GridLevel{1, 1});
  CHECK(c.z(0, 0) == f.z(0, 0));
  CHECK(c.z(2, 0) == f.z(lv.nx() - 1, 0));
  CHECK(c.z(0, 2) == f.z(0, lv.ny() - 1));
  CHECK(c.z(2, 2) == f.z(lv.nx() - 1, lv.ny() - 1));

  CHECK_THROWS_AS(coarsen_realization(c, lv), std::invalid_argument);
}

TEST_CASE("spectrum cache is transparent and the imaginary copy is valid") {
  const GridLevel lv{4, 4};
  CovarianceSpec spec{0.5, 0.25, 0.25, 0.2};
  const int factor = embedding_size(4, spec.nu);

  FieldSampler plain(false);
  rng::Stream s1(5, 0, rng::Lane::field);
  const FieldRealization a = plain.draw(spec, lv, factor, s1, 0);
  const Spectrum sp = embed_eigenvalues(spec, lv, factor);
  rng::Stream s2(5, 0, rng::Lane::field);
  const FieldRealization b = sample_field(sp, spec, lv, s2, 0);
  for (int j = 0; j < lv.ny(); ++j)
    for (int i = 0; i < lv.nx(); ++i) CHECK(a.z(i, j) == b.z(i, j));

  // With reuse enabled, draw 2k fields from k stream positions and check
  // the variance at a probe node still matches.
  FieldSampler reuse(true);
  double sq = 0.0;
  const int n = 1000;
  for (int k = 0; k < n; ++k) {
    rng::Stream s(31, static_cast<std::uint64_t>(k), rng::Lane::field);
    const FieldRealization f1 = reuse.draw(spec, lv, factor, s, 2 * k);
    const FieldRealization f2 = reuse.draw(spec, lv, factor, s, 2 * k + 1);
    sq += f1.z(7, 9) * f1.z(7, 9) + f2.z(7, 9) * f2.z(7, 9);
  }
  CHECK(sq / (2 * n) == doctest::Approx(1.0).epsilon(0.15));
}
