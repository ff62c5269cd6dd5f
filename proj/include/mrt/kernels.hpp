#pragma once

#include "mrt/medium.hpp"
#include "mrt/scenario.hpp"

#include <vector>

namespace mrt {

// Paraxial differential scattering cross-section (rate density of the jump
// (omega, k) -> (omega + omega', k + k')).
double dcs_paraxial(const MediumStats& stats, const Wavenumbers& wn, double omega, const Vec& k);

// Total paraxial cross-section sigma_c^2 ell k_o^2 R(0,0) / 4.
double total_cross_section_paraxial(const MediumStats& stats, const Wavenumbers& wn);
inline double scattering_mean_free_path(double Sigma_par) { return 2.0 / Sigma_par; }

// Full-regime kernel with all three spectral terms.
double dcs_full(const MediumStats& stats, const Wavenumbers& wn, const FlowVelocity& flow,
                double omega, double omega_p, const Vec& k, const Vec& k_p);

struct DecayResult {
  double theta = 0.0;
  cplx D;
  double mean_free_path = 0.0;  // -1 / Re D
  cplx exponent() const { return cplx(0.0, theta) + D; }
};

// Phase and decay rate of the coherent mode amplitude at (omega, k).
DecayResult mean_amplitude_decay(const MediumStats& stats, const Wavenumbers& wn,
                                 const FlowVelocity& flow, double omega, const Vec& k,
                                 double tol = 1e-6);

// Numerical integral of dcs_full over (omega', k') with the (2 pi)^(d+1)
// measure. Independent of mean_amplitude_decay (goes through the spectrum).
double integrated_dcs(const MediumStats& stats, const Wavenumbers& wn, const FlowVelocity& flow,
                      double omega, const Vec& k, double tol = 1e-9);

// Numerical integral of dcs_paraxial over R^(d+1) with the (2 pi)^(d+1) measure.
double integrated_dcs_paraxial(const MediumStats& stats, const Wavenumbers& wn, int d);

// Frequency (or wavenumber) beyond which the spectrum has fallen below
// rel * peak along one axis.
double spectral_cutoff(const CovarianceModel& model, int n, bool frequency_axis, double rel = 1e-16);

struct RteProbe {
  double omega = 0.0;
  double omega_p = 0.0;
  Vec k;
  Vec k_p;
};

struct RteReport {
  std::size_t probes = 0;
  double jacobian = 0.0;   // worst relative deviation of the delta-function Jacobian
  double gain = 0.0;       // worst deviation of the gain-term prefactor chain
  double loss = 0.0;       // worst deviation of the loss-term prefactor chain
  double streaming = 0.0;  // worst deviation of the streaming-term reduction
  bool pass = false;
};

RteReport rte_kernel_identity_check(const MediumStats& stats, const Wavenumbers& wn,
                                    const FlowVelocity& flow, const std::vector<RteProbe>& probes,
                                    double tol = 1e-12);

}  // namespace mrt
