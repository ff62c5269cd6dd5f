#include "mrt/verify.hpp"

#include "mrt/array.hpp"
#include "mrt/coherence.hpp"
#include "mrt/imaging.hpp"
#include "mrt/kernels.hpp"
#include "mrt/propagate.hpp"

#include <chrono>
#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

namespace mrt {

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

CheckResult timed(const std::string& name, double tol, const std::function<double(std::string&)>& body) {
  CheckResult r;
  r.name = name;
  r.tolerance = tol;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    r.error = body(r.detail);
    r.pass = r.error <= tol;
  } catch (const std::exception& e) {
    r.pass = false;
    r.error = INFINITY;
    r.detail = e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

Scenario pulse_copy(const Scenario& s) {
  Scenario p = s;
  if (p.source.harmonic) {
    p.source.harmonic = false;
    p.source.sigma_s = p.source.sigma / std::sqrt(p.source.T_s);
  }
  return p;
}

Scenario harmonic_copy(const Scenario& s) {
  Scenario h = s;
  h.source.harmonic = true;
  return h;
}

}  // namespace

std::vector<CheckResult> run_oracle_suite(const Scenario& s, int threads) {
  std::vector<CheckResult> out;
  const int d = s.d;
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const bool dynamic = s.medium.sigma_c > 0.0 && !s.medium.frozen();

  if (dynamic) {
    out.push_back(timed("kernel_conservation", 1e-8, [&](std::string& det) {
      const double a = integrated_dcs_paraxial(s.medium, s.wn, d);
      const double b = total_cross_section_paraxial(s.medium, s.wn);
      det = "integral " + std::to_string(a) + " vs Sigma_par " + std::to_string(b);
      return rel(a, b);
    }));
    out.push_back(timed("decay_kernel_duality", 1e-4, [&](std::string& det) {
      double worst = 0.0;
      for (int i = 0; i < 3; ++i) {
        Vec k(d);
        for (int j = 0; j < d; ++j) k(j) = 0.3 * s.wn.k_o * uni(rng) / std::sqrt(double(d));
        const double w = 0.1 * s.wn.omega_o(s.medium.c_o) * uni(rng);
        const DecayResult D = mean_amplitude_decay(s.medium, s.wn, s.flow, w, k);
        worst = std::max(worst, rel(-2.0 * D.D.real(), integrated_dcs(s.medium, s.wn, s.flow, w, k)));
      }
      det = "3 random (omega, k)";
      return worst;
    }));
    out.push_back(timed("rte_identity", 1e-12, [&](std::string& det) {
      std::vector<RteProbe> probes;
      for (int i = 0; i < 100; ++i) {
        RteProbe p;
        p.k.resize(d);
        p.k_p.resize(d);
        for (int j = 0; j < d; ++j) {
          p.k(j) = 0.4 * s.wn.k_o * uni(rng) / std::sqrt(double(d));
          p.k_p(j) = 0.4 * s.wn.k_o * uni(rng) / std::sqrt(double(d));
        }
        p.omega = uni(rng) / s.medium.T_corr;
        p.omega_p = uni(rng) / s.medium.T_corr;
        probes.push_back(p);
      }
      const RteReport r = rte_kernel_identity_check(s.medium, s.wn, s.flow, probes);
      det = "100 probes";
      return std::max({r.jacobian, r.gain, r.loss, r.streaming});
    }));

    const Scenario p = pulse_copy(s);
    if (d == 1) {
      out.push_back(timed("energy_conservation", 1e-6, [&](std::string& det) {
        double worst = 0.0;
        for (double f : {0.0, 0.5, 1.0}) {
          Scenario q = p;
          q.z = f * p.z;
          const PropagationResult r = propagate_closed_form(q, threads);
          worst = std::max(worst, rel(r.total_mass, initial_mass(q)));
        }
        det = "z in {0, z/2, z}";
        return worst;
      }));
      out.push_back(timed("mc_vs_closed_form", 0.05, [&](std::string& det) {
        const PropagationResult cf = propagate_closed_form(p, threads);
        const PropagationResult mc = propagate_monte_carlo(p, 1000000, s.solver.seed, threads);
        const double vol = cf.field.cell_volume();
        double l1 = 0.0, mass = 0.0;
        std::size_t ok = 0;
        for (std::size_t i = 0; i < cf.field.values.size(); ++i) {
          l1 += std::abs(cf.field.values[i] - mc.field.values[i]) * vol;
          mass += cf.field.values[i] * vol;
          // binomial sd of the bin count expected under the closed form
          const double pr = std::clamp(cf.field.values[i] * vol / mc.total_mass, 0.0, 1.0);
          const double sd = std::max(mc.total_mass * std::sqrt(1e6 * pr * (1.0 - pr)) / (1e6 * vol),
                                     mc.field.errors[i]);
          if (std::abs(cf.field.values[i] - mc.field.values[i]) <= 3.0 * sd + 1e-12 * cf.field.max_value()) ++ok;
        }
        const double frac = double(ok) / cf.field.values.size();
        det = "L1/mass = " + std::to_string(l1 / mass) + ", bins within 3 sd = " + std::to_string(frac);
        return frac >= 0.99 ? l1 / mass : INFINITY;
      }));
    }

    const Scenario h = harmonic_copy(s);
    out.push_back(timed("coherence_dual_route", 1e-8, [&](std::string& det) {
      const CoherenceParams cp = coherence_params(h, h.z);
      double worst = 0.0;
      for (int i = 0; i < 5; ++i) {
        Vec dx(d), x(d), k(d);
        for (int j = 0; j < d; ++j) {
          dx(j) = cp.D_z * uni(rng);
          x(j) = cp.R_z * uni(rng);
          k(j) = uni(rng) / cp.D_z;
        }
        const double dt = std::isfinite(cp.T_z) ? cp.T_z * uni(rng) : 0.0;
        worst = std::max(worst, std::abs(coherence_function(h, dt, dx, x, h.z) -
                                         coherence_quadrature(h, dt, dx, x, h.z)) /
                                    std::abs(coherence_function(h, dt, dx, x, h.z)));
        const double w = std::isfinite(cp.T_z) ? uni(rng) / cp.T_z : 0.0;
        worst = std::max(worst, rel(wigner_time_harmonic(h, w, k, x, h.z, HarmonicMethod::quadrature),
                                    wigner_time_harmonic(h, w, k, x, h.z, HarmonicMethod::closed)));
      }
      det = "5 random points, closed vs Gauss-Hermite";
      return worst;
    }));
    out.push_back(timed("estimated_wigner_dual_route", 1e-6, [&](std::string& det) {
      const ClosedFormCoherence c(h, h.z);
      const CoherenceParams& cp = c.params();
      double worst = 0.0;
      for (int i = 0; i < 3; ++i) {
        Vec k(d);
        for (int j = 0; j < d; ++j) k(j) = uni(rng) / cp.D_z;
        const double w = std::isfinite(cp.T_z) ? 0.5 * uni(rng) / cp.T_z : 0.0;
        const Vec x = h.array.center;
        worst = std::max(worst, rel(estimate_wigner(c, h.array, w, k, x),
                                    estimate_wigner_smoothing(h, h.array, w, k, x, h.z)));
      }
      det = "Fourier route vs taper smoothing, 3 points";
      return worst;
    }));
    out.push_back(timed("doa_image_exactness", 1e-6, [&](std::string& det) {
      const ClosedFormCoherence c(h, h.z);
      const DoaResult r = image_doa(c, h, h.z);
      const double imax = rel(r.k_peak.norm(), r.k_pred.norm() > 0 ? r.k_pred.norm() : 1.0);
      det = "peak " + std::to_string(r.k_peak(0)) + " vs " + std::to_string(r.k_pred(0)) +
            ", width " + std::to_string(r.theta_doa) + " vs " + std::to_string(r.theta_pred);
      return std::max(r.k_pred.norm() > 0 ? imax : r.k_peak.norm(), rel(r.theta_doa, r.theta_pred));
    }));
    out.push_back(timed("range_width_v0", 1e-6, [&](std::string& det) {
      Scenario h0 = h;
      h0.flow.v_perp.setZero();
      const ClosedFormCoherence c(h0, h0.z);
      const RangeResult r = image_range(c, h0.array.center, medium_constants(h0), 0.0,
                                        h0.source.ell_s, 0.0, 0.0);
      det = "theta_range " + std::to_string(r.theta_range) + " vs T_z " + std::to_string(c.params().T_z);
      return std::max(rel(r.theta_range, c.params().T_z), rel(r.z_hat, h0.z));
    }));
  }
  return out;
}

nlohmann::json to_json(const std::vector<CheckResult>& checks) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& c : checks)
    j.push_back({{"name", c.name}, {"pass", c.pass}, {"error", std::isfinite(c.error) ? c.error : -1.0},
                 {"tolerance", c.tolerance}, {"seconds", c.seconds}, {"detail", c.detail}});
  return j;
}

}  // namespace mrt
