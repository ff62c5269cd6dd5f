#pragma once

#include "mrt/kernels.hpp"
#include "mrt/scenario.hpp"
#include "mrt/wigner_field.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace mrt {

// Output histogram shared by both paraxial solvers.
struct PhaseSpaceGrid {
  Axis omega;
  std::vector<Axis> k;
  std::vector<Axis> x;
  double sigma_x = 0.0;  // width of the regularized initial delta in x
};

// Per-component variances of (omega, k, x) at range z, exact for the
// paraxial jump process.
struct SpreadMoments {
  double var_omega = 0.0;
  double var_k = 0.0;
  double var_x = 0.0;
};

SpreadMoments spread_moments(const Scenario& s, double sigma_x);
PhaseSpaceGrid output_grid(const Scenario& s);

// Pulse initial condition W_0(omega, k) without the delta in x, and its
// total phase-space mass.
double initial_wigner(const Scenario& s, double omega, const Vec& k);
double initial_mass(const Scenario& s);

struct PropagationResult {
  WignerField field;
  double total_mass = 0.0;         // mass carried by the computational domain
  double boundary_fraction = 0.0;  // closed form: mass share on the FFT-box boundary
  double min_relative = 0.0;       // closed form: min W / max W on the fine grid
  std::vector<int> fft_shape;
  double mean_jumps = 0.0;         // Monte Carlo: mean number of jumps per particle
  double jump_stderr = 0.0;
  std::uint64_t outside = 0;       // Monte Carlo: particles outside the histogram
  std::vector<std::string> warnings;
};

// Fourier-domain solution along characteristics, inverted by FFT and
// averaged onto output_grid(s).
PropagationResult propagate_closed_form(const Scenario& s, int threads = 0);

// Jump-process simulation binned on output_grid(s). Particles are processed
// in fixed blocks with one random stream per block, so the result does not
// depend on the number of workers.
PropagationResult propagate_monte_carlo(const Scenario& s, std::uint64_t n_particles,
                                        std::uint64_t seed, int threads = 0);

struct Particle {
  double omega = 0.0;
  Vec k;
  Vec x;
  int jumps = 0;
};

// Raw particle states at range s.z for the first n particles of a run.
std::vector<Particle> simulate_particles(const Scenario& s, std::uint64_t n, std::uint64_t seed);

// Draws (omega', k') from the normalized paraxial kernel.
class JumpSampler {
 public:
  JumpSampler(const MediumStats& stats, int d);
  void draw(std::mt19937_64& rng, double& omega_p, Vec& k_p) const;
  double acceptance() const { return acceptance_; }

 private:
  const MediumStats* stats_;
  int d_;
  bool gaussian_;
  double sd_omega_, sd_k_;  // envelope standard deviations (physical units)
  double box_omega_, box_k_;
  double bound_ = 1.0;
  double acceptance_ = 1.0;
};

int resolve_threads(int threads);

}  // namespace mrt
