#include "mrt/array.hpp"
#include "mrt/coherence.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace mrt;
using mrt::test::base_scenario;
using mrt::test::rel;

TEST(Coherence, HermitianUnderLagReversal) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int d : {1, 2}) {
    const Scenario s = base_scenario(d);
    const CoherenceParams p = coherence_params(s, s.z);
    for (int i = 0; i < 20; ++i) {
      Vec dx(d), x(d);
      for (int j = 0; j < d; ++j) {
        dx(j) = 2.0 * p.D_z * u(rng);
        x(j) = p.R_z * u(rng);
      }
      const double dt = 2.0 * p.T_z * u(rng);
      const cplx a = coherence_function(s, dt, dx, x, s.z), b = coherence_function(s, -dt, -dx, x, s.z);
      EXPECT_LT(std::abs(a - std::conj(b)), 1e-12 * std::abs(a));
    }
  }
}

TEST(Coherence, ModulusPeaksAtZeroLagWithoutFlow) {
  Scenario s = base_scenario(2);
  s.flow.v_perp.setZero();
  const CoherenceParams p = coherence_params(s, s.z);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const Vec x = vec({p.R_z * u(rng), p.R_z * u(rng)});
    const double c0 = std::abs(coherence_function(s, 0.0, zeros(2), x, s.z));
    const Vec dx = vec({2.0 * p.D_z * u(rng), 2.0 * p.D_z * u(rng)});
    EXPECT_LE(std::abs(coherence_function(s, 2.0 * p.T_z * u(rng), dx, x, s.z)), c0);
  }
  EXPECT_NEAR(std::abs(coherence_function(s, 0.0, zeros(2), zeros(2), s.z)), p.amplitude, 1e-15 * p.amplitude);
}

TEST(Coherence, RangeScalingOfDecoherenceScales) {
  Scenario s = base_scenario();
  const CoherenceParams a = coherence_params(s, s.z), b = coherence_params(s, 2.0 * s.z);
  EXPECT_NEAR(std::log(b.T_z / a.T_z) / std::log(2.0), -0.5, 1e-12);
  EXPECT_NEAR(std::log(b.D_z / a.D_z) / std::log(2.0), -0.5, 1e-12);
  // beam radius grows like z^(3/2) once the source is much wider than D_z
  s.source.ell_s = 100.0 * a.D_z;
  const double r1 = coherence_params(s, s.z).R_z, r2 = coherence_params(s, 2.0 * s.z).R_z;
  EXPECT_NEAR(std::log(r2 / r1) / std::log(2.0), 1.5, 1e-3);
}

TEST(Coherence, FrozenMediumNeverDecorrelatesInTime) {
  Scenario s = base_scenario();
  s.medium.T_corr = std::numeric_limits<double>::infinity();
  const CoherenceParams p = coherence_params(s, s.z);
  EXPECT_TRUE(std::isinf(p.T_z));
  s.flow.v_perp.setZero();
  const cplx a = coherence_function(s, 0.0, zeros(1), zeros(1), s.z);
  EXPECT_NEAR(std::abs(coherence_function(s, 100.0, zeros(1), zeros(1), s.z) / a), 1.0, 1e-14);
}

TEST(Coherence, DriftFactorLimits) {
  Scenario s = base_scenario();
  const double Dz = coherence_params(s, s.z).D_z;
  s.source.ell_s = 1e-4 * Dz;
  EXPECT_NEAR(coherence_params(s, s.z).H_z, 0.5, 1e-6);
  s.source.ell_s = 1e4 * Dz;
  EXPECT_NEAR(coherence_params(s, s.z).H_z, 1.0, 1e-6);
}

TEST(Coherence, QuadratureAgreesAwayFromOrigin) {
  // far lags where |C| is small relative to the peak
  const Scenario s = base_scenario();
  const CoherenceParams p = coherence_params(s, s.z);
  const cplx a = coherence_function(s, 2.5 * p.T_z, vec({-2.0 * p.D_z}), vec({1.2 * p.R_z}), s.z);
  const cplx b = coherence_quadrature(s, 2.5 * p.T_z, vec({-2.0 * p.D_z}), vec({1.2 * p.R_z}), s.z);
  EXPECT_LT(std::abs(a - b), 1e-8 * std::abs(a));
}

TEST(Coherence, FourierTransformMatchesTimeHarmonicWigner) {
  // with a huge aperture the estimate is the plain transform of C
  Scenario s = base_scenario();
  s.flow.v_perp = vec({0.3});
  const CoherenceParams p = coherence_params(s, s.z);
  ArraySpec a = s.array;
  a.kappa = 1e9;
  const ClosedFormCoherence c(s, s.z);
  const double ht = std::min(p.T_z, p.D_z / p.v.norm()) / 6.0;
  const LagTable tab = tabulate_coherence(c, s.array.center, CenteredGrid{128, ht},
                                          CenteredGrid{128, std::min(p.D_z, p.D_2z) / 6.0});
  const SpectralTable w = estimate_wigner_fft(tab, a);
  const double peak = w.max_value();
  double worst = 0.0;
  for (int i = 0; i < w.omega.n; i += 5)
    for (int j = 0; j < w.k.n; j += 5) {
      const double ref = wigner_time_harmonic(s, w.omega.node(i), vec({w.k.node(j)}), s.array.center, s.z);
      worst = std::max(worst, std::abs(w.values[static_cast<std::size_t>(i) * w.k.n + j] - ref) / peak);
    }
  EXPECT_LT(worst, 1e-6);
  EXPECT_GT(peak, 0.0);
}

TEST(Coherence, TimeHarmonicWignerRoutesAgree) {
  for (int d : {1, 2}) {
    const Scenario s = base_scenario(d);
    const CoherenceParams p = coherence_params(s, s.z);
    const Vec x = vec({0.4 * p.R_z, -0.2 * p.R_z}).head(d);
    for (double om : {0.0, 0.5 / p.T_z})
      for (double kk : {0.0, 0.3 / p.D_z}) {
        const Vec k = Vec::Constant(d, kk);
        const double a = wigner_time_harmonic(s, om, k, x, s.z, HarmonicMethod::closed);
        const double b = wigner_time_harmonic(s, om, k, x, s.z, HarmonicMethod::quadrature);
        EXPECT_GE(a, 0.0);
        EXPECT_NEAR(a, b, 1e-8 * a);
      }
  }
}
