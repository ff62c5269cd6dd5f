#pragma once

#include "mrt/array.hpp"
#include "mrt/coherence.hpp"
#include "mrt/kernels.hpp"
#include "mrt/scenario.hpp"

#include <cmath>
#include <string>

namespace mrt::test {

inline const char* kBaseYaml = R"(
dimension: 1
medium: {c0: 1500.0, sigma_c: 0.002, ell: 5.0, T_corr: 2.0}
carrier: {k0: 100.0}
source: {mode: harmonic, ell_s: 1.0, T_s: 20.0, sigma: 1.0}
flow: {v_perp: [0.5]}
array: {center: [0.0], kappa: 50.0}
range: {z: 60.0}
grids: {z_bracket: [10.0, 500.0]}
solver: {seed: 7}
)";

// Harmonic source, moderate scattering, 1 or 2 transverse dimensions.
inline Scenario base_scenario(int d = 1) {
  Scenario s = parse_scenario(kBaseYaml, "test");
  if (d == 2) {
    s.d = 2;
    s.flow.v_perp = vec({0.5, -0.2});
    s.array.center = zeros(2);
  }
  return s;
}

inline Scenario pulse_scenario(double sigma_z, int d = 1) {
  Scenario s = base_scenario(d);
  s.source.harmonic = false;
  s.source.sigma_s = 1.0;
  s.z = sigma_z / total_cross_section_paraxial(s.medium, s.wn);
  return s;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// Provider that multiplies another one by a constant.
class ScaledCoherence final : public CoherenceProvider {
 public:
  ScaledCoherence(const CoherenceProvider& c, double f) : c_(c), f_(f) {}
  int dim() const override { return c_.dim(); }
  double k_o() const override { return c_.k_o(); }
  cplx value(double dt, const Vec& dx, const Vec& x) const override { return f_ * c_.value(dt, dx, x); }
  Eigen::MatrixXd envelope_precision() const override { return c_.envelope_precision(); }

 private:
  const CoherenceProvider& c_;
  double f_;
};

}  // namespace mrt::test
