#include "mrt/array.hpp"
#include "mrt/coherence.hpp"
#include "mrt/imaging.hpp"
#include "mrt/kernels.hpp"
#include "mrt/propagate.hpp"
#include "mrt/scenario.hpp"
#include "mrt/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mrt;

namespace {

struct Run {
  std::string scenario_path = MRT_DEFAULT_SCENARIO;
  std::string out_dir = "mrt_out";
  int threads = 0;
  std::vector<std::string> argv;
  json outputs = json::array();
  json extra = json::object();
  Scenario s;
  std::string scenario_text;

  void load() {
    std::ifstream in(scenario_path, std::ios::binary);
    if (!in) throw ConfigError(scenario_path + ": cannot open scenario file");
    std::stringstream ss;
    ss << in.rdbuf();
    scenario_text = ss.str();
    s = parse_scenario(scenario_text, scenario_path);
    if (threads > 0) s.solver.threads = threads;
    fs::create_directories(out_dir);
  }

  std::string path(const std::string& name) const { return (fs::path(out_dir) / name).string(); }

  void record(const std::string& name) {
    std::ifstream in(path(name), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string b = ss.str();
    outputs.push_back({{"file", name}, {"fnv1a64", hex64(fnv1a64(b.data(), b.size()))}, {"bytes", b.size()}});
  }

  void write_json(const std::string& name, const json& j) {
    std::ofstream(path(name)) << j.dump(2) << "\n";
    record(name);
  }

  void manifest(const std::string& command) {
    const RegimeDiagnostics r = regime_diagnostics(s);
    json m;
    m["command"] = command;
    m["argv"] = argv;
    m["scenario"] = scenario_path;
    m["config_fnv1a64"] = hex64(fnv1a64(scenario_text.data(), scenario_text.size()));
    m["seed"] = s.solver.seed;
    m["threads"] = resolve_threads(s.solver.threads);
    m["regime"] = {{"epsilon", r.epsilon}, {"gamma", r.gamma}, {"gamma_s", r.gamma_s}, {"eta", r.eta},
                   {"eta_s", r.eta_s}, {"T_L", r.T_L}, {"strong_scattering", r.strong_scattering},
                   {"range_over_mfp", r.range_over_mfp}, {"stability", r.stability}, {"mach", r.mach}};
    m["warnings"] = r.warnings;
    m["outputs"] = outputs;
    m["results"] = extra;
    std::ofstream(path("manifest.json")) << m.dump(2) << "\n";
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  }
};

std::ofstream open_csv(const std::string& p) {
  std::ofstream f(p);
  f << std::setprecision(17);
  return f;
}

std::vector<double> to_std(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

std::unique_ptr<CoherenceProvider> forward_model(const Scenario& s, const std::string& kind) {
  if (kind == "quadrature") return std::make_unique<QuadratureCoherence>(s, s.z, s.solver.hermite_order);
  return std::make_unique<ClosedFormCoherence>(s, s.z);
}

void cmd_kernels(Run& run, int n) {
  const Scenario& s = run.s;
  const int d = s.d;
  const double Sigma = total_cross_section_paraxial(s.medium, s.wn);
  {
    auto f = open_csv(run.path("kernel_paraxial.csv"));
    f << "omega_p[rad/s],k_p[rad/m],Q_par[m^" << d << "/s]\n";
    const double W = 4.0 / s.medium.T_corr, K = 4.0 / s.medium.ell;
    Vec k = Vec::Zero(d);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double w = -W + 2.0 * W * i / (n - 1);
        k(0) = -K + 2.0 * K * j / (n - 1);
        f << w << "," << k(0) << "," << dcs_paraxial(s.medium, s.wn, w, k) << "\n";
      }
  }
  run.record("kernel_paraxial.csv");
  {
    auto f = open_csv(run.path("decay.csv"));
    f << "k[rad/m],theta[1/m],ReD[1/m],ImD[1/m],mean_free_path[m]\n";
    Vec k = Vec::Zero(d);
    for (int j = 0; j < n; ++j) {
      k(0) = -0.5 * s.wn.k_o + s.wn.k_o * j / (n - 1);
      const DecayResult D = mean_amplitude_decay(s.medium, s.wn, s.flow, 0.0, k);
      f << k(0) << "," << D.theta << "," << D.D.real() << "," << D.D.imag() << "," << D.mean_free_path << "\n";
    }
  }
  run.record("decay.csv");
  const TaylorCoeffs tc = taylor_coeffs(s.medium, s.wn.k_o);
  run.extra = {{"Sigma_par", Sigma}, {"S_par", scattering_mean_free_path(Sigma)}, {"R00", tc.R00},
               {"alpha_o", tc.alpha_o}, {"vartheta_o", tc.vartheta_o}, {"alpha", tc.alpha},
               {"vartheta", tc.vartheta}};
  run.write_json("kernels.json", run.extra);
}

void cmd_propagate(Run& run, bool mc, std::uint64_t particles, std::uint64_t seed, bool seed_set) {
  Scenario& s = run.s;
  if (seed_set) s.solver.seed = seed;
  const bool use_mc = mc || s.solver.method == "mc";
  if (particles == 0) particles = s.solver.particles;
  const PropagationResult r = use_mc ? propagate_monte_carlo(s, particles, s.solver.seed, s.solver.threads)
                                     : propagate_closed_form(s, s.solver.threads);
  r.field.save(run.path("wigner.mrtw"));
  run.record("wigner.mrtw");
  if (s.d == 1) {
    r.field.write_csv(run.path("wigner.csv"));
    run.record("wigner.csv");
  }
  run.extra = {{"solver", use_mc ? "monte_carlo" : "closed_form"}, {"total_mass", r.total_mass},
               {"initial_mass", initial_mass(s)}, {"histogram_mass", r.field.total_mass()},
               {"boundary_fraction", r.boundary_fraction}, {"fft_shape", r.fft_shape},
               {"mean_jumps", r.mean_jumps}, {"outside", r.outside}, {"warnings", r.warnings}};
  if (use_mc) run.extra["particles"] = particles;
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
}

void cmd_coherence(Run& run, int nt, int nx) {
  const Scenario& s = run.s;
  const CoherenceParams p = coherence_params(s, s.z);
  auto f = open_csv(run.path("coherence.csv"));
  f << "dt[s],dx[m],re_C,im_C,abs_C\n";
  const double tmax = std::isfinite(p.T_z) ? 3.0 * p.T_z : 3.0 * s.medium.T_corr;
  const double xmax = 3.0 * std::min(p.D_1z, p.D_2z / std::max(p.H_z, 1e-12));
  Vec dx = Vec::Zero(s.d);
  const Vec x = s.array.center;
  for (int i = 0; i < nt; ++i)
    for (int j = 0; j < nx; ++j) {
      const double dt = -tmax + 2.0 * tmax * i / (nt - 1);
      dx(0) = -xmax + 2.0 * xmax * j / (nx - 1);
      const cplx c = coherence_function(p, s.d, dt, dx, x);
      f << dt << "," << dx(0) << "," << c.real() << "," << c.imag() << "," << std::abs(c) << "\n";
    }
  f.close();
  run.record("coherence.csv");
  run.extra = {{"T_z", p.T_z}, {"D_z", p.D_z}, {"R_z", p.R_z}, {"D_1z", p.D_1z}, {"D_2z", p.D_2z},
               {"H_z", p.H_z}, {"z_star", p.z_star}, {"A_z", p.A_z}, {"m_z", p.m_z}, {"n_z", p.n_z},
               {"s_z", p.s_z}, {"q_z", p.q_z}, {"warnings", coherence_warnings(s, s.z)}};
  run.write_json("coherence_params.json", run.extra);
}

void cmd_image_doa(Run& run, const std::string& fwd) {
  const Scenario& s = run.s;
  const auto c = forward_model(s, fwd);
  const DoaResult r = image_doa(*c, s, s.z);
  auto f = open_csv(run.path("doa_image.csv"));
  f << (s.d == 1 ? "k[rad/m]" : "k1[rad/m],k2[rad/m]") << ",O_DoA\n";
  for (std::size_t i = 0; i < r.image.size(); ++i) {
    const Vec k = r.grid.node(i);
    for (int j = 0; j < s.d; ++j) f << k(j) << ",";
    f << r.image[i] << "\n";
  }
  f.close();
  run.record("doa_image.csv");
  run.extra = {{"k_peak", to_std(r.k_peak)}, {"theta_doa", r.theta_doa}, {"k_pred", to_std(r.k_pred)},
               {"theta_pred", r.theta_pred}, {"fit_residual", r.fit_residual}};
  const SaturationReport sat = doa_aperture_saturation(s, s.z);
  run.extra["kappa_critical"] = sat.kappa_critical;
  run.write_json("doa.json", run.extra);
}

void cmd_image_range(Run& run, const std::string& fwd) {
  const Scenario& s = run.s;
  const auto c = forward_model(s, fwd);
  const RangeResult r = image_range(*c, s.array.center, medium_constants(s), s.flow.v_perp.norm(),
                                    s.source.ell_s, s.grids.z_lo, s.grids.z_hi, s.grids.t);
  auto f = open_csv(run.path("range_image.csv"));
  f << "t[s],abs_O_range\n";
  for (std::size_t i = 0; i < r.t.size(); ++i) f << r.t[i] << "," << r.image[i] << "\n";
  f.close();
  run.record("range_image.csv");
  run.extra = {{"z_hat", r.z_hat}, {"z_true", s.z}, {"theta_range", r.theta_range},
               {"theta_pred", r.theta_pred}, {"fit_residual", r.fit_residual}};
  run.write_json("range.json", run.extra);
}

void cmd_velocity(Run& run, const std::string& fwd, bool unit_sz) {
  const Scenario& s = run.s;
  const auto c = forward_model(s, fwd);
  VelocityOptions opt;
  opt.assume_unit_sz = unit_sz;
  opt.order = s.solver.hermite_order;
  const VelocityResult r = estimate_velocity(*c, s, s.z, s.grids.t, opt);
  auto f = open_csv(run.path("velocity_track.csv"));
  f << "t[s]," << (s.d == 1 ? "y_max[m]" : "y1_max[m],y2_max[m]") << ",weight\n";
  for (std::size_t i = 0; i < r.t.size(); ++i) {
    f << r.t[i] << ",";
    for (int j = 0; j < s.d; ++j) f << r.y_max[i](j) << ",";
    f << r.weights[i] << "\n";
  }
  f.close();
  run.record("velocity_track.csv");
  run.extra = {{"v_hat", to_std(r.v_hat)}, {"v_true", to_std(s.flow.v_perp)}, {"s_z_used", r.s_z},
               {"s_z_model", r.s_z_model}, {"res_v", r.res_v}, {"fast_flow", r.fast_flow}};
  run.write_json("velocity.json", run.extra);
}

void cmd_localize(Run& run, const std::string& fwd, bool with_velocity) {
  const Scenario& s = run.s;
  const auto c = forward_model(s, fwd);
  LocalizeOptions opt;
  opt.estimate_velocity = with_velocity;
  const EstimateReport r = localize_source(*c, s, opt);
  run.extra = r.to_json();
  run.extra["truth"] = {{"z", s.z}, {"x_o", to_std(s.array.center)}, {"v_o", to_std(s.flow.v_perp)}};
  run.write_json("estimate.json", run.extra);
}

int cmd_verify(Run& run) {
  const auto checks = run_oracle_suite(run.s, run.s.solver.threads);
  bool ok = true;
  for (const auto& c : checks) {
    std::cout << (c.pass ? "PASS " : "FAIL ") << std::left << std::setw(30) << c.name << " err="
              << std::scientific << std::setprecision(3) << c.error << " tol=" << c.tolerance
              << std::fixed << std::setprecision(2) << " (" << c.seconds << " s) " << c.detail << "\n";
    ok = ok && c.pass;
  }
  run.extra = {{"checks", to_json(checks)}, {"all_pass", ok}};
  run.write_json("verify.json", run.extra);
  return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  Run run;
  run.argv.assign(argv, argv + argc);
  CLI::App app{"Transport, coherence and imaging in moving random media"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("-s,--scenario", run.scenario_path, "Scenario YAML file")->capture_default_str();
  app.add_option("-o,--out", run.out_dir, "Output directory")->capture_default_str();
  app.add_option("-j,--threads", run.threads, "Worker threads (0 = hardware)");

  int n_kernel = 41;
  auto* kern = app.add_subcommand("kernels", "Scattering kernel, cross-section and mean-amplitude decay");
  kern->add_option("--points", n_kernel, "Samples per axis")->check(CLI::Range(2, 4001));

  bool mc = false;
  std::uint64_t particles = 0, seed = 0;
  auto* prop = app.add_subcommand("propagate", "Paraxial Wigner transform at range z");
  prop->add_flag("--mc", mc, "Monte Carlo instead of the closed form");
  prop->add_option("--particles", particles, "Monte Carlo particle count");
  auto* seed_opt = prop->add_option("--seed", seed, "Monte Carlo seed");

  int nt = 41, nx = 41;
  auto* coh = app.add_subcommand("coherence", "Coherence function on a (dt, dx) grid");
  coh->add_option("--nt", nt)->check(CLI::Range(2, 10001));
  coh->add_option("--nx", nx)->check(CLI::Range(2, 10001));

  std::string fwd = "closed";
  bool unit_sz = false, with_v = false;
  auto fwd_opt = [&](CLI::App* a) {
    a->add_option("--forward", fwd, "Synthetic data model")->check(CLI::IsMember({"closed", "quadrature"}));
  };
  auto* doa = app.add_subcommand("image-doa", "Direction of arrival from the array data");
  fwd_opt(doa);
  auto* rng = app.add_subcommand("image-range", "Range from the temporal decorrelation");
  fwd_opt(rng);
  auto* vel = app.add_subcommand("estimate-velocity", "Cross-range flow velocity");
  fwd_opt(vel);
  vel->add_flag("--unit-sz", unit_sz, "Assume s_z = 1 (large aperture)");
  auto* loc = app.add_subcommand("localize", "Range, direction and cross-range position of the source");
  fwd_opt(loc);
  loc->add_flag("--velocity", with_v, "Also estimate the flow velocity");
  auto* ver = app.add_subcommand("verify", "Run the oracle cross-check suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    run.load();
    int rc = 0;
    std::string name;
    if (*kern) name = "kernels", cmd_kernels(run, n_kernel);
    else if (*prop) name = "propagate", cmd_propagate(run, mc, particles, seed, seed_opt->count() > 0);
    else if (*coh) name = "coherence", cmd_coherence(run, nt, nx);
    else if (*doa) name = "image-doa", cmd_image_doa(run, fwd);
    else if (*rng) name = "image-range", cmd_image_range(run, fwd);
    else if (*vel) name = "estimate-velocity", cmd_velocity(run, fwd, unit_sz);
    else if (*loc) name = "localize", cmd_localize(run, fwd, with_v);
    else if (*ver) name = "verify", rc = cmd_verify(run);
    run.manifest(name);
    std::cout << run.extra.dump(2) << "\n";
    return rc;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NonIdentifiableError& e) {
    std::cerr << "not identifiable: " << e.what() << "\n";
    return 4;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
