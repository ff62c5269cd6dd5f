#pragma once

#include "mrt/medium.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mrt {

struct Wavenumbers {
  double k_o = 1.0;

  Wavenumbers() = default;
  explicit Wavenumbers(double k) : k_o(k) {}
  // Range wavenumber sqrt(k_o^2 - |k|^2); throws DomainError when evanescent.
  double beta(const Vec& k) const;
  double lambda_o() const { return kTwoPi / k_o; }
  double omega_o(double c_o) const { return c_o * k_o; }
};

struct FlowVelocity {
  Vec v_perp = Vec::Zero(1);
  double v_z = 0.0;
};

struct SourceSpec {
  double ell_s = 1.0;
  bool harmonic = false;
  double T_s = 1.0;      // pulse duration, or averaging window in harmonic mode
  double sigma_s = 1.0;  // pulse amplitude
  double sigma = 1.0;    // harmonic amplitude, sigma_s = sigma / sqrt(T_s)
};

struct ArraySpec {
  Vec center = Vec::Zero(1);
  double kappa = 1.0;
};

// Uniform histogram axis [lo, hi) with `bins` cells; bins == 0 means automatic.
struct AxisSpec {
  double lo = 0.0;
  double hi = 0.0;
  int bins = 0;
};

struct GridSpec {
  AxisSpec omega;
  AxisSpec k;
  AxisSpec x;
  std::vector<double> t;  // time lags for velocity imaging
  double z_lo = 0.0;      // range-search bracket
  double z_hi = 0.0;
};

struct SolverOptions {
  std::string method = "closed";
  std::uint64_t particles = 100000;
  std::uint64_t seed = 1;
  int threads = 0;
  double tolerance = 1e-6;
  int hermite_order = 40;
};

struct Scenario {
  int d = 1;
  MediumStats medium;
  Wavenumbers wn;
  SourceSpec source;
  FlowVelocity flow;
  ArraySpec array;
  double z = 1.0;
  GridSpec grids;
  SolverOptions solver;

  void validate() const;
};

struct RegimeDiagnostics {
  double epsilon = 0.0;     // lambda_o / L
  double gamma = 0.0;       // lambda_o / ell
  double gamma_s = 0.0;     // lambda_o / ell_s
  double eta = 0.0;         // T / T_L
  double eta_s = 0.0;       // T_s / T_L
  double T_L = 0.0;         // L / c_o
  double strong_scattering = 0.0;  // Sigma_par L
  double range_over_mfp = 0.0;     // L / S_par
  double stability = 0.0;          // T / T_s
  double mach = 0.0;               // |v| / c_o
  std::vector<std::string> warnings;
};

RegimeDiagnostics regime_diagnostics(const Scenario& s);

// Parses the YAML scenario file; errors carry line numbers and field paths.
Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& text, const std::string& origin = "<string>");

}  // namespace mrt
