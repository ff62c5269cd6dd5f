// Acceptance criteria, one per ctest entry: acceptance --criterion N.
#include "mrt/array.hpp"
#include "mrt/coherence.hpp"
#include "mrt/imaging.hpp"
#include "mrt/kernels.hpp"
#include "mrt/propagate.hpp"
#include "mrt/scenario.hpp"
#include "mrt/speckle.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

using namespace mrt;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

const char* kBase = R"(
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

Scenario base(int d = 1) {
  Scenario s = parse_scenario(kBase, "acceptance");
  if (d == 2) {
    s.d = 2;
    s.flow.v_perp = vec({0.5, -0.2});
    s.array.center = zeros(2);
  }
  return s;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Outcome kernel_conservation() {
  double worst = 0.0;
  for (int d : {1, 2})
    for (const char* model : {"gaussian", "cauchy"}) {
      if (d == 2 && std::string(model) == "cauchy") continue;  // Bessel-heavy; covered by the unit tests
      Scenario s = base(d);
      s.medium.model = make_covariance_model(model, 3.0);
      worst = std::max(worst, rel(integrated_dcs_paraxial(s.medium, s.wn, d),
                                  total_cross_section_paraxial(s.medium, s.wn)));
    }
  return {worst <= 1e-8, "max relative error " + fmt("%.3e", worst) + " (tol 1e-8, d = 1, 2)"};
}

Outcome decay_duality() {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int d : {1, 2}) {
    const Scenario s = base(d);
    for (int i = 0; i < 10; ++i) {
      Vec k(d);
      for (int j = 0; j < d; ++j) k(j) = 0.3 * s.wn.k_o * u(rng) / std::sqrt(double(d));
      const double w = 0.1 * s.wn.omega_o(s.medium.c_o) * u(rng);
      const DecayResult D = mean_amplitude_decay(s.medium, s.wn, s.flow, w, k);
      worst = std::max(worst, rel(-2.0 * D.D.real(), integrated_dcs(s.medium, s.wn, s.flow, w, k)));
    }
  }
  return {worst <= 1e-4, "max relative error " + fmt("%.3e", worst) + " over 10 k per dimension (tol 1e-4)"};
}

Scenario pulse(double sigma_z) {
  Scenario s = base(1);
  s.source.harmonic = false;
  s.source.sigma_s = 1.0;
  s.z = sigma_z / total_cross_section_paraxial(s.medium, s.wn);
  return s;
}

Outcome mc_vs_closed() {
  const Scenario s = pulse(3.0);
  const PropagationResult cf = propagate_closed_form(s, 0);
  const PropagationResult mc = propagate_monte_carlo(s, 1000000, 11, 0);
  const double vol = cf.field.cell_volume(), N = 1e6;
  double l1 = 0.0, mass = 0.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < cf.field.values.size(); ++i) {
    const double a = cf.field.values[i], b = mc.field.values[i];
    l1 += std::abs(a - b) * vol;
    mass += a * vol;
    const double p = std::clamp(a * vol / mc.total_mass, 0.0, 1.0);
    const double sd = std::max(mc.total_mass * std::sqrt(N * p * (1.0 - p)) / (N * vol), mc.field.errors[i]);
    if (std::abs(a - b) <= 3.0 * sd) ++ok;
  }
  const double frac = double(ok) / cf.field.values.size();
  return {l1 / mass <= 0.05 && frac >= 0.99,
          "L1/mass " + fmt("%.4f", l1 / mass) + " (tol 0.05), bins within 3 sd " + fmt("%.4f", frac) +
              " (need 0.99), " + std::to_string(cf.field.values.size()) + " bins"};
}

Outcome energy() {
  double worst = 0.0;
  for (double f : {0.0, 1.0, 2.0, 3.0, 4.0, 5.0}) {
    const Scenario s = pulse(f);
    worst = std::max(worst, rel(propagate_closed_form(s, 0).total_mass, initial_mass(s)));
  }
  return {worst <= 1e-6, "max relative mass drift " + fmt("%.3e", worst) + " over Sigma z in 0..5 (tol 1e-6)"};
}

Outcome coherence_dual() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int d : {1, 2}) {
    const Scenario s = base(d);
    const CoherenceParams p = coherence_params(s, s.z);
    for (int i = 0; i < 20; ++i) {
      Vec dx(d), x(d);
      for (int j = 0; j < d; ++j) {
        dx(j) = 1.5 * p.D_z * u(rng);
        x(j) = 1.5 * p.R_z * u(rng);
      }
      const double dt = 1.5 * p.T_z * u(rng);
      const cplx a = coherence_function(s, dt, dx, x, s.z);
      worst = std::max(worst, std::abs(a - coherence_quadrature(s, dt, dx, x, s.z)) / std::abs(a));
    }
  }
  return {worst <= 1e-8, "max relative error " + fmt("%.3e", worst) + " at 20 points per dimension (tol 1e-8)"};
}

// Scenario with ell_s = ratio * D_z at the base range.
Scenario with_source_ratio(double ratio) {
  Scenario s = base(1);
  s.source.ell_s = ratio * coherence_params(s, s.z).D_z;
  return s;
}

Outcome asymptotics() {
  double worst = 0.0;
  std::string det;
  {
    const Scenario s = with_source_ratio(1e-2);
    const CoherenceParams p = coherence_params(s, s.z);
    const double e = rel(p.R_z, s.z / (std::sqrt(2.0) * s.source.ell_s * s.wn.k_o));
    worst = std::max(worst, e);
    det += "small source: R_z " + fmt("%.2e", e);
  }
  {
    const Scenario s = with_source_ratio(1e2);
    const CoherenceParams p = coherence_params(s, s.z);
    const TaylorCoeffs tc = taylor_coeffs(s.medium, s.wn.k_o);
    const double r = rel(p.R_z, std::sqrt(tc.vartheta / 3.0) * std::pow(s.z, 1.5) / (s.wn.k_o * s.medium.ell));
    const double a = rel(p.D_1z, std::sqrt(2.0) * s.source.ell_s);
    const double b = rel(p.D_2z, 2.0 * p.D_z);
    const double c = std::abs(p.H_z - 1.0);
    worst = std::max({worst, r, a, b, c});
    det += "; large source: R_z " + fmt("%.2e", r) + ", D_1z " + fmt("%.2e", a) + ", D_2z " + fmt("%.2e", b) +
           ", H_z " + fmt("%.2e", c);
  }
  return {worst <= 0.01, det + " (tol 0.01)"};
}

Outcome doa_bias_check() {
  bool ok = true;
  std::string det;
  for (double ratio : {1e2, 1e-2}) {
    Scenario s = with_source_ratio(ratio);
    s.array.kappa = 500.0;
    const CoherenceParams p = coherence_params(s, s.z);
    const double asym = ratio > 1.0 ? 1.5 : 1.0;
    s.array.center = vec({std::min(2.0 * p.R_z, 0.15 * s.z / asym)});
    const QuadratureCoherence fwd(s, s.z);
    const DoaResult r = image_doa(fwd, s, s.z);
    const double k_expect = asym * s.wn.k_o * s.array.center(0) / s.z;
    const double ep = std::abs(r.k_peak(0) - k_expect) / std::abs(r.k_peak(0));
    const double ew = rel(r.theta_doa, theta_doa_model(p, s.array.kappa));
    ok = ok && ep <= 0.005 && ew <= 0.02;
    det += std::string(det.empty() ? "" : "; ") + (ratio > 1.0 ? "ell_s >> D_z" : "ell_s << D_z") +
           ": peak error " + fmt("%.2e", ep) + ", width error " + fmt("%.2e", ew);
  }
  return {ok, det + " (tol 0.005, 0.02)"};
}

Outcome saturation() {
  bool ok = true;
  std::string det;
  for (double ratio : {1e2, 1e-2}) {
    const Scenario s = with_source_ratio(ratio);
    const SaturationReport r = doa_aperture_saturation(s, s.z);
    ok = ok && r.improvement_beyond < 0.01;
    det += std::string(det.empty() ? "" : "; ") + "ell_s/D_z = " + fmt("%g", ratio) + ": theta(kappa_c)/theta(inf) - 1 = " +
           fmt("%.4f", 1.0 / (1.0 - r.improvement_beyond) - 1.0) + ", 1 - theta(inf)/theta(kappa_c) = " +
           fmt("%.4f", r.improvement_beyond);
  }
  return {ok, det + " (tol 0.01)"};
}

Outcome range_recovery() {
  const Scenario s = base(1);
  const QuadratureCoherence fwd(s, s.z);
  const RangeResult r = image_range(fwd, s.array.center, medium_constants(s), s.flow.v_perp.norm(),
                                    s.source.ell_s, s.grids.z_lo, s.grids.z_hi);
  const double ez = rel(r.z_hat, s.z);
  Scenario s0 = s;
  s0.flow.v_perp.setZero();
  const ClosedFormCoherence c0(s0, s0.z);
  const RangeResult r0 = image_range(c0, s0.array.center, medium_constants(s0), 0.0, s0.source.ell_s, 0.0, 0.0);
  const double et = rel(r0.theta_range, c0.params().T_z);
  return {ez <= 0.02 && et <= 1e-6,
          "z error " + fmt("%.2e", ez) + " (tol 0.02), v = 0 width vs T_z " + fmt("%.2e", et) + " (tol 1e-6)"};
}

Outcome velocity_recovery() {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Scenario b = base(1);
  const TaylorCoeffs tc = taylor_coeffs(b.medium, b.wn.k_o);
  int hits = 0, sz_ok = 0;
  const int n = 100;
  for (int i = 0; i < n; ++i) {
    Scenario s = b;
    // paraxial scaling: z / (k_o D_z^2) of order one
    const double ratio = 0.5 + 1.5 * u(rng);
    s.z = std::sqrt(ratio * s.wn.k_o * s.medium.ell * s.medium.ell / tc.vartheta);
    s.medium.T_corr = 1.0 + 3.0 * u(rng);
    CoherenceParams p = coherence_params(s, s.z);
    s.source.ell_s = (10.0 + 20.0 * u(rng)) * p.D_z;
    const double la1 = std::max(s.z / (s.wn.k_o * s.source.ell_s), s.z / (s.wn.k_o * p.D_z));
    s.array.kappa = 10.0 * la1 * s.wn.k_o;
    p = coherence_params(s, s.z);
    const double res = p.D_z / p.T_z;
    s.flow.v_perp = vec({(4.0 * u(rng) - 2.0) * res});
    s.array.center = vec({(u(rng) - 0.5) * p.A_z});
    p = coherence_params(s, s.z);
    const ClosedFormCoherence fwd(s, s.z);
    VelocityOptions opt;
    opt.assume_unit_sz = true;
    const VelocityResult r = estimate_velocity(fwd, s, s.z, {}, opt);
    if (std::abs(p.s_z - 1.0) < 0.05) ++sz_ok;
    if ((r.v_hat - s.flow.v_perp).norm() <= res) ++hits;
  }
  return {sz_ok == n && hits >= 95,
          std::to_string(hits) + "/100 within D_z/T_z (need 95), " + std::to_string(sz_ok) +
              "/100 with |s_z - 1| < 0.05"};
}

Outcome speckle_stability() {
  Scenario s = base(1);
  const CoherenceParams p = coherence_params(s, s.z);
  const double ko = s.wn.k_o;
  SpectralTable ref;
  ref.d = 1;
  ref.k_o = ko;
  ref.x = s.array.center;
  ref.omega = CenteredGrid{32, 12.0 / (32 * p.T_z)};
  // one mode per array resolution cell
  ref.k = CenteredGrid{64, ko / s.array.kappa};
  ref.values.resize(ref.size());
  std::size_t f = 0;
  for (int i = 0; i < ref.omega.n; ++i)
    for (int j = 0; j < ref.k.n; ++j)
      ref.values[f++] = wigner_time_harmonic(s, ref.omega.node(i), vec({ref.k.node(j)}), ref.x, s.z);
  const WignerField field = spectral_field(ref);
  const int nr = 200;
  std::string det;
  bool ok = true;
  for (double T_ratio : {4.0, 16.0, 64.0}) {
    const SpeckleEnsemble e = synthesize_speckle(field, T_ratio, nr, 99, 0);
    std::vector<double> sum(ref.size(), 0.0), sum2(ref.size(), 0.0);
    for (int r = 0; r < nr; ++r) {
      const SpectralTable t = spectral_table(e.realization(r), ref);
      const SpectralTable w = estimate_wigner_fft(coherence_from_spectrum(t), s.array, false);
      for (std::size_t i = 0; i < w.size(); ++i) {
        sum[i] += w.values[i];
        sum2[i] += w.values[i] * w.values[i];
      }
    }
    const double peak = *std::max_element(sum.begin(), sum.end()) / nr;
    double acc = 0.0;
    int cnt = 0;
    for (std::size_t i = 0; i < sum.size(); ++i) {
      const double m = sum[i] / nr;
      if (m < 0.5 * peak) continue;
      acc += std::sqrt(std::max(sum2[i] / nr - m * m, 0.0)) / m;
      ++cnt;
    }
    const double rs = acc / cnt;
    const double ratio = rs / std::sqrt(1.0 / T_ratio);
    ok = ok && ratio >= 0.5 && ratio <= 2.0;
    det += std::string(det.empty() ? "" : "; ") + "T_s/T = " + fmt("%g", T_ratio) + ": rel std " + fmt("%.4f", rs) +
           ", / sqrt(T/T_s) = " + fmt("%.3f", ratio);
  }
  return {ok, det + " (band [0.5, 2])"};
}

Outcome rte() {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int d : {1, 2}) {
    const Scenario s = base(d);
    std::vector<RteProbe> probes;
    for (int i = 0; i < 100; ++i) {
      RteProbe p;
      p.k.resize(d);
      p.k_p.resize(d);
      for (int j = 0; j < d; ++j) {
        p.k(j) = 0.4 * s.wn.k_o * u(rng) / std::sqrt(double(d));
        p.k_p(j) = 0.4 * s.wn.k_o * u(rng) / std::sqrt(double(d));
      }
      p.omega = u(rng) / s.medium.T_corr;
      p.omega_p = u(rng) / s.medium.T_corr;
      probes.push_back(p);
    }
    const RteReport r = rte_kernel_identity_check(s.medium, s.wn, s.flow, probes);
    worst = std::max({worst, r.jacobian, r.gain, r.loss, r.streaming});
  }
  return {worst <= 1e-12, "max relative error " + fmt("%.3e", worst) + " at 100 probes per dimension (tol 1e-12)"};
}

struct Criterion {
  const char* name;
  double budget_s;  // 0: no time limit
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "Run a single criterion (1-12)")->check(CLI::Range(0, 12));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all{
      {"kernel-conservation identity", 1.0, kernel_conservation},
      {"decay-kernel duality", 30.0, decay_duality},
      {"Monte Carlo vs closed-form propagator", 60.0, mc_vs_closed},
      {"energy conservation", 0.0, energy},
      {"coherence dual route", 10.0, coherence_dual},
      {"asymptotic coefficients", 0.0, asymptotics},
      {"DoA bias", 0.0, doa_bias_check},
      {"aperture saturation", 0.0, saturation},
      {"range recovery", 0.0, range_recovery},
      {"velocity recovery", 120.0, velocity_recovery},
      {"statistical stability", 0.0, speckle_stability},
      {"radiative-transfer identity", 0.0, rte},
  };
  int failures = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (only != 0 && only != static_cast<int>(i + 1)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = all[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = all[i].budget_s <= 0.0 || sec < all[i].budget_s;
    const bool pass = o.pass && in_time;
    std::printf("%s criterion %zu: %s: %s [%.2f s%s]\n", pass ? "PASS" : "FAIL", i + 1, all[i].name,
                o.detail.c_str(), sec,
                all[i].budget_s > 0.0 ? (", budget " + fmt("%g", all[i].budget_s) + " s").c_str() : "");
    if (!pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
