#include "mrt/imaging.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace mrt;
using mrt::test::base_scenario;
using mrt::test::rel;
using mrt::test::ScaledCoherence;

namespace {

Scenario with_source_ratio(double ratio, int d = 1) {
  Scenario s = base_scenario(d);
  s.source.ell_s = ratio * coherence_params(s, s.z).D_z;
  return s;
}

}  // namespace

TEST(PeakFit, RecoversGaussianPeakOffGrid) {
  const RegularGrid g1 = RegularGrid::centered(vec({0.0}), 2.0, 21);
  std::vector<double> v1;
  for (const Vec& n : g1.nodes()) v1.push_back(3.0 * std::exp(-0.5 * std::pow((n(0) - 0.137) / 0.6, 2)));
  const PeakFit p1 = quadratic_peak(g1, v1);
  EXPECT_NEAR(p1.location(0), 0.137, 1e-12);
  EXPECT_FALSE(p1.on_edge);

  const RegularGrid g2 = RegularGrid::centered(vec({0.0, 0.0}), 2.0, 21);
  std::vector<double> v2;
  for (const Vec& n : g2.nodes())
    v2.push_back(std::exp(-0.5 * (std::pow((n(0) + 0.31) / 0.5, 2) + std::pow((n(1) - 0.07) / 0.8, 2))));
  const PeakFit p2 = quadratic_peak(g2, v2);
  EXPECT_NEAR(p2.location(0), -0.31, 1e-10);
  EXPECT_NEAR(p2.location(1), 0.07, 1e-10);
}

TEST(PeakFit, GaussianWidthIsExactForGaussians) {
  std::vector<Vec> nodes;
  std::vector<double> vals;
  for (int i = -30; i <= 30; ++i) {
    nodes.push_back(vec({0.1 * i}));
    vals.push_back(std::exp(-0.5 * std::pow(0.1 * i / 0.7, 2)));
  }
  double res = 1.0;
  EXPECT_NEAR(gaussian_width(nodes, vals, vec({0.0}), &res), 0.7, 1e-12);
  EXPECT_LT(res, 1e-12);
}

TEST(DoaModel, BiasIsMonotoneBetweenOneAndThreeHalves) {
  EXPECT_DOUBLE_EQ(doa_bias(0.0), 1.0);
  EXPECT_NEAR(doa_bias(1e12), 1.5, 1e-9);
  double prev = 1.0;
  for (double u = 0.01; u < 1e4; u *= 1.7) {
    const double b = doa_bias(u);
    EXPECT_GT(b, prev);
    EXPECT_LT(b, 1.5);
    prev = b;
  }
}

TEST(DoaModel, WidthBoundedAndDecreasingInAperture) {
  for (double ratio : {1e-3, 0.3, 1.0, 5.0, 1e3}) {
    const Scenario s = with_source_ratio(ratio);
    const CoherenceParams p = coherence_params(s, s.z);
    const double ko = s.wn.k_o, D = p.D_z;
    double prev = std::numeric_limits<double>::infinity();
    for (double kappa = 1.0; kappa < 1e5; kappa *= 2.0) {
      const double th = theta_doa_model(p, kappa);
      EXPECT_GE(th, std::sqrt(1.0 / (4.0 * D * D * ko * ko) + 1.0 / (2.0 * kappa * kappa)) * (1 - 1e-12));
      EXPECT_LE(th, std::sqrt(1.0 / (3.0 * D * D * ko * ko) + 1.0 / (2.0 * kappa * kappa)) * (1 + 1e-12));
      EXPECT_LT(th, prev);
      prev = th;
    }
  }
}

TEST(DoaModel, KneeOfTheApertureCurve) {
  // theta^2 = a + 1/(2 kappa^2): the knee sits where 1/(2 kappa^2) = a, with
  // a = 1/(4 D^2 k^2) for wide sources and 1/(3 D^2 k^2) for narrow ones
  {
    const Scenario s = with_source_ratio(100.0);
    const SaturationReport r = doa_aperture_saturation(s, s.z);
    EXPECT_NEAR(r.kappa_knee / r.kappa_critical, 1.0, 0.01);
  }
  {
    const Scenario s = with_source_ratio(0.01);
    const SaturationReport r = doa_aperture_saturation(s, s.z);
    EXPECT_NEAR(r.kappa_knee / r.kappa_critical, std::sqrt(0.75), 0.01);
  }
}

TEST(DoaImage, CentredArrayLooksStraightAhead) {
  for (int d : {1, 2}) {
    Scenario s = base_scenario(d);
    s.flow.v_perp.setZero();
    const ClosedFormCoherence c(s, s.z);
    const DoaResult r = image_doa(c, s, s.z);
    EXPECT_LT(r.k_peak.norm(), 1e-6 * s.wn.k_o) << d;
    EXPECT_NEAR(r.theta_doa / r.theta_pred, 1.0, 0.02) << d;
  }
}

TEST(DoaImage, NarrowSourcePeakFollowsGeometry) {
  Scenario s = with_source_ratio(0.01);
  const CoherenceParams p = coherence_params(s, s.z);
  s.array.center = vec({0.5 * p.R_z});
  const ClosedFormCoherence c(s, s.z);
  const DoaResult r = image_doa(c, s, s.z);
  EXPECT_NEAR(r.k_peak(0) / (s.wn.k_o * s.array.center(0) / s.z), 1.0, 0.005);
}

TEST(RangeImage, FrozenMediumIsNotIdentifiable) {
  Scenario s = base_scenario();
  s.medium.T_corr = std::numeric_limits<double>::infinity();
  s.flow.v_perp.setZero();
  const ClosedFormCoherence c(s, s.z);
  EXPECT_THROW(image_range(c, s.array.center, medium_constants(s), 0.0, s.source.ell_s, 10.0, 500.0),
               NonIdentifiableError);
}

TEST(RangeImage, StillMediumInvertsInClosedForm) {
  Scenario s = base_scenario();
  s.flow.v_perp.setZero();
  const ClosedFormCoherence c(s, s.z);
  const RangeResult r = image_range(c, s.array.center, medium_constants(s), 0.0, s.source.ell_s, 10.0, 500.0);
  EXPECT_NEAR(r.z_hat / s.z, 1.0, 1e-6);
  EXPECT_NEAR(r.theta_range / c.params().T_z, 1.0, 1e-6);
  EXPECT_THROW(image_range(c, s.array.center, medium_constants(s), 0.0, s.source.ell_s, 100.0, 500.0),
               RangeBoundsError);
}

TEST(RangeImage, FlowingMediumRecoversRange) {
  const Scenario s = base_scenario();
  const ClosedFormCoherence c(s, s.z);
  const RangeResult r = image_range(c, s.array.center, medium_constants(s), s.flow.v_perp.norm(), s.source.ell_s,
                                    s.grids.z_lo, s.grids.z_hi);
  EXPECT_NEAR(r.z_hat / s.z, 1.0, 0.02);
}

TEST(Calibration, RecoversRangeInvariantConstants) {
  const Scenario s = base_scenario();
  const ClosedFormCoherence c(s, s.z);
  const MediumConstants truth = medium_constants(s), est = calibrate_medium(c, s, s.z);
  EXPECT_NEAR(est.D_sqrt_z / truth.D_sqrt_z, 1.0, 1e-3);
  EXPECT_NEAR(est.T_sqrt_z / truth.T_sqrt_z, 1.0, 1e-3);
}

TEST(Velocity, StillMediumGivesZero) {
  Scenario s = base_scenario();
  s.flow.v_perp.setZero();
  const ClosedFormCoherence c(s, s.z);
  const CoherenceParams p = coherence_params(s, s.z);
  std::vector<double> t;
  for (int i = -10; i <= 10; ++i) t.push_back(0.1 * i * p.T_z);
  const VelocityResult r = estimate_velocity(c, s, s.z, t);
  EXPECT_LT(r.v_hat.norm(), 1e-6 * p.D_z / p.T_z);
}

TEST(Velocity, InvariantToAmplitude) {
  const Scenario s = base_scenario();
  const ClosedFormCoherence c(s, s.z);
  const ScaledCoherence c7(c, 7.0);
  const VelocityResult a = estimate_velocity(c, s, s.z), b = estimate_velocity(c7, s, s.z);
  EXPECT_NEAR((a.v_hat - b.v_hat).norm(), 0.0, 1e-10 * a.v_hat.norm());
}

TEST(Velocity, ResolutionIsDecoherenceRatioForWideSourceAndAperture) {
  Scenario s = with_source_ratio(20.0);
  const CoherenceParams p0 = coherence_params(s, s.z);
  // aperture well beyond the diffraction and decoherence lengths
  s.array.kappa = 10.0 * std::max(s.z / s.source.ell_s, s.z / p0.D_z);
  const CoherenceParams p = coherence_params(s, s.z);
  s.flow.v_perp = vec({0.5 * p.D_z / p.T_z});
  const ClosedFormCoherence c(s, s.z);
  const VelocityResult r = estimate_velocity(c, s, s.z);
  EXPECT_FALSE(r.fast_flow);
  EXPECT_NEAR(r.res_v / (p.D_z / p.T_z), 1.0, 0.1);
}

TEST(Localize, EndToEndWithVelocity) {
  Scenario s = with_source_ratio(10.0);
  s.array.kappa = 500.0;
  const CoherenceParams p = coherence_params(s, s.z);
  s.array.center = vec({0.5 * p.R_z});
  const ClosedFormCoherence c(s, s.z);
  LocalizeOptions opt;
  opt.estimate_velocity = true;
  const EstimateReport r = localize_source(c, s, opt);
  EXPECT_NEAR(r.z_hat / s.z, 1.0, 0.02);
  EXPECT_LT(std::abs(r.x_o_hat(0) - s.array.center(0)), r.x_o_resolution);
  EXPECT_LT((r.v_hat - s.flow.v_perp).norm(), r.res_v);
  const auto j = r.to_json();
  EXPECT_TRUE(j.contains("z_hat"));
}

TEST(Localize, FlagsTheCriticalRange) {
  // ell_s = D_z puts the source at z / z* = 1
  Scenario s = with_source_ratio(1.0);
  s.array.kappa = 500.0;
  const ClosedFormCoherence c(s, s.z);
  const EstimateReport r = localize_source(c, s);
  ASSERT_FALSE(r.flags.empty());
  EXPECT_NE(r.flags[0].find("critical"), std::string::npos);
  EXPECT_TRUE(r.diagnostics.contains("x_o_case1"));
  EXPECT_TRUE(r.diagnostics.contains("x_o_case2"));
  EXPECT_NEAR(r.diagnostics["z_over_z_star"].get<double>(), 1.0, 0.05);
}
