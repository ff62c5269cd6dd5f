#pragma once

#include "mrt/scenario.hpp"

#include <string>
#include <vector>

namespace mrt {

// Closed-form coefficients of the strongly scattering time-harmonic regime
// at range z. Aperture-dependent entries (A_z, m_z, n_z, s_z, q_z) use the
// scenario's array radius.
struct CoherenceParams {
  double z = 0.0;
  double k_o = 0.0;
  double T_z = 0.0;    // decoherence time
  double D_z = 0.0;    // decoherence length
  double R_z = 0.0;    // beam radius
  double D_1z = 0.0;   // speckle scales
  double D_2z = 0.0;
  double H_z = 0.0;    // drift factor
  double z_star = 0.0; // diffraction / scattering crossover range
  double A_z = 0.0;    // effective aperture
  double m_z = 0.0;
  double n_z = 0.0;
  double s_z = 0.0;
  double q_z = 0.0;
  double u = 0.0;        // ell_s^2 / D_z^2
  double amplitude = 0.0; // C(0, 0, 0, z)
  // phi = x . (phase_dx dx - phase_dt v dt)
  double phase_dx = 0.0;
  double phase_dt = 0.0;
  Vec v;
};

CoherenceParams coherence_params(const Scenario& s, double z);

// Sigma_par z; the time-harmonic formulas assume this is large.
double strong_scattering_ratio(const Scenario& s, double z);
std::vector<std::string> coherence_warnings(const Scenario& s, double z);

enum class HarmonicMethod { closed, quadrature };

// Time-harmonic Wigner transform with the quadratic (Taylor) exponent.
double wigner_time_harmonic(const Scenario& s, double omega, const Vec& k, const Vec& x, double z,
                            HarmonicMethod method = HarmonicMethod::closed);

// Coherence function from the printed closed form.
cplx coherence_function(const Scenario& s, double dt, const Vec& dx, const Vec& x, double z);
cplx coherence_function(const CoherenceParams& p, int d, double dt, const Vec& dx, const Vec& x);

// Same quantity by Gauss-Hermite quadrature over q of the quadratic-exponent
// integral, bypassing every closed-form coefficient.
cplx coherence_quadrature(const Scenario& s, double dt, const Vec& dx, const Vec& x, double z,
                          int order = 40);

}  // namespace mrt
