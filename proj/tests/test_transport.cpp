#include "mrt/kernels.hpp"
#include "mrt/propagate.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace mrt;
using mrt::test::base_scenario;
using mrt::test::pulse_scenario;
using mrt::test::rel;

TEST(Kernel, VanishesWithoutFluctuations) {
  Scenario s = base_scenario();
  s.medium.sigma_c = 0.0;
  EXPECT_EQ(dcs_paraxial(s.medium, s.wn, 0.1, vec({0.2})), 0.0);
  EXPECT_EQ(total_cross_section_paraxial(s.medium, s.wn), 0.0);
}

TEST(Kernel, GaussianValueAtOrigin) {
  for (int d : {1, 2}) {
    const Scenario s = base_scenario(d);
    const auto& m = s.medium;
    const double expect = std::pow(s.wn.k_o * m.sigma_c, 2) * std::pow(m.ell, d + 1) * m.T_corr / 4.0 *
                          std::pow(kTwoPi, (d + 2) / 2.0);
    EXPECT_NEAR(dcs_paraxial(m, s.wn, 0.0, zeros(d)) / expect, 1.0, 1e-14);
  }
}

TEST(Kernel, CrossSectionScalesWithVariance) {
  Scenario s = base_scenario();
  const double a = total_cross_section_paraxial(s.medium, s.wn);
  s.medium.sigma_c *= 2.0;
  EXPECT_NEAR(total_cross_section_paraxial(s.medium, s.wn) / a, 4.0, 1e-14);
}

TEST(Kernel, CauchyConservesMassInTwoDimensions) {
  Scenario s = base_scenario(2);
  s.medium.model = make_covariance_model("cauchy", 3.0);
  EXPECT_LT(rel(integrated_dcs_paraxial(s.medium, s.wn, 2), total_cross_section_paraxial(s.medium, s.wn)), 1e-8);
}

TEST(Kernel, FullKernelApproachesParaxialForLongCorrelation) {
  // fixed dimensionless lags q = ell dk; the paraxial error shrinks with k_o ell
  Scenario s = base_scenario();
  s.flow.v_perp.setZero();
  double prev = 1.0;
  for (double ell : {5.0, 20.0, 80.0}) {
    s.medium.ell = ell;
    const Vec k = vec({0.5 / ell}), kp = vec({-0.5 / ell});
    const double e = rel(dcs_full(s.medium, s.wn, s.flow, 0.0, 0.0, k, kp), dcs_paraxial(s.medium, s.wn, 0.0, k - kp));
    EXPECT_LT(e, prev);
    prev = e;
  }
  EXPECT_LT(prev, 1e-5);
}

TEST(Decay, PhaseVanishesAtRestAndRealPartIsNegative) {
  Scenario s = base_scenario();
  s.flow.v_perp.setZero();
  const DecayResult D = mean_amplitude_decay(s.medium, s.wn, s.flow, 0.0, vec({3.0}));
  EXPECT_EQ(D.theta, 0.0);
  EXPECT_LT(D.D.real(), 0.0);
  EXPECT_NEAR(D.mean_free_path, -1.0 / D.D.real(), 1e-12 * D.mean_free_path);
}

TEST(Decay, RadiativeTransferIdentity) {
  const Scenario s = base_scenario();
  std::vector<RteProbe> probes(5);
  for (int i = 0; i < 5; ++i) {
    probes[i].k = vec({5.0 * i});
    probes[i].k_p = vec({-3.0 * i});
    probes[i].omega = 0.1 * i;
  }
  EXPECT_TRUE(rte_kernel_identity_check(s.medium, s.wn, s.flow, probes).pass);
}

TEST(ClosedForm, ConservesMassAndStaysNonNegative) {
  for (int d : {1, 2}) {
    Scenario s = pulse_scenario(d == 1 ? 1.0 : 0.5, d);
    // a short pulse keeps the five-dimensional transform small
    if (d == 2) s.source.T_s = 1.0;
    const PropagationResult r = propagate_closed_form(s, 1);
    EXPECT_LT(rel(r.total_mass, initial_mass(s)), 1e-6) << d;
    EXPECT_GE(r.field.min_value(), -1e-9 * r.field.max_value()) << d;
  }
}

TEST(ClosedForm, ShortRangeKeepsInitialSpectrum) {
  // marginal over x at tiny range equals the bin average of the initial density;
  // the x window is wide enough to hold the free drift z k / k_o of every k bin
  Scenario s = pulse_scenario(1e-9);
  s.grids.x = AxisSpec{-1e-3, 1e-3, 12};
  const WignerField f = propagate_closed_form(s, 1).field;
  const auto& ax = f.axes;
  ASSERT_EQ(ax.size(), 3u);
  auto bin_mean = [](const Axis& a, int i, double rate) {
    const double lo = a.lo + i * a.width(), hi = lo + a.width();
    return std::sqrt(kPi) / (2.0 * rate) * (std::erf(rate * hi) - std::erf(rate * lo)) / a.width();
  };
  const double C = initial_wigner(s, 0.0, zeros(1));
  for (int io : {ax[0].n / 2, ax[0].n / 2 + 3})
    for (int ik : {ax[1].n / 2 - 1, ax[1].n / 2 + 2}) {
      double m = 0.0;
      for (int ix = 0; ix < ax[2].n; ++ix) m += f.values[f.flat_index({io, ik, ix})] * ax[2].width();
      const double ref = C * bin_mean(ax[0], io, s.source.T_s) * bin_mean(ax[1], ik, s.source.ell_s);
      EXPECT_NEAR(m / ref, 1.0, 1e-6) << io << " " << ik;
    }
}

TEST(MonteCarlo, JumpCountMatchesOpticalDepth) {
  const Scenario s = pulse_scenario(2.0);
  const PropagationResult r = propagate_monte_carlo(s, 200000, 5, 1);
  EXPECT_NEAR(r.mean_jumps, 2.0, 3.0 * r.jump_stderr);
}

TEST(MonteCarlo, SpreadMatchesExactMoments) {
  const Scenario s = pulse_scenario(2.0);
  const PhaseSpaceGrid g = output_grid(s);
  const SpreadMoments m = spread_moments(s, g.sigma_x);
  const auto ps = simulate_particles(s, 100000, 9);
  double sk = 0, sx = 0, sxk = 0;
  for (const auto& p : ps) {
    sk += p.k(0) * p.k(0);
    sx += p.x(0) * p.x(0);
    sxk += p.x(0) * p.k(0);
  }
  const double n = ps.size();
  // sqrt(2/n) = 0.0045 is the standard error of a Gaussian variance estimate
  EXPECT_NEAR(sk / n / m.var_k, 1.0, 0.02);
  EXPECT_NEAR(sx / n / m.var_x, 1.0, 0.02);
  // positive k carries the particle towards positive x
  EXPECT_GT(sxk / n, 0.0);
}

TEST(MonteCarlo, DeterministicAndThreadInvariant) {
  const Scenario s = pulse_scenario(1.0);
  const PropagationResult a = propagate_monte_carlo(s, 40000, 3, 1);
  const PropagationResult b = propagate_monte_carlo(s, 40000, 3, 3);
  EXPECT_EQ(a.field.values, b.field.values);
  EXPECT_EQ(a.mean_jumps, b.mean_jumps);
  const PropagationResult c = propagate_monte_carlo(s, 40000, 4, 1);
  EXPECT_NE(a.field.values, c.field.values);
}

TEST(Propagation, RejectsFrozenAndHarmonicInputs) {
  Scenario s = base_scenario();
  EXPECT_THROW(propagate_closed_form(s, 1), ConfigError);
  s = pulse_scenario(1.0);
  EXPECT_THROW(propagate_monte_carlo(s, 0, 1, 1), ArgumentError);
}
