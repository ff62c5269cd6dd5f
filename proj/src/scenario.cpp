#include "mrt/scenario.hpp"

#include "mrt/kernels.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace mrt {

namespace {

// Field-aware reader: every error names the file, line and dotted key path.
class Reader {
 public:
  Reader(YAML::Node node, std::string path, const std::string& origin)
      : node_(std::move(node)), path_(std::move(path)), origin_(origin) {}

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    const YAML::Node n = key.empty() ? node_ : node_[key];
    const YAML::Mark m = n ? n.Mark() : node_.Mark();
    std::ostringstream os;
    os << origin_;
    if (m.line >= 0) os << ":" << m.line + 1 << ":" << m.column + 1;
    os << ": " << full(key) << ": " << msg;
    throw ConfigError(os.str());
  }

  bool has(const std::string& key) const { return node_[key] && !node_[key].IsNull(); }

  Reader child(const std::string& key) const {
    if (has(key) && !node_[key].IsMap()) fail(key, "expected a mapping");
    return Reader(has(key) ? node_[key] : YAML::Node(YAML::NodeType::Map), full(key), origin_);
  }

  double num(const std::string& key, double def, bool required = false) const {
    if (!has(key)) {
      if (required) fail("", "missing required key '" + key + "'");
      return def;
    }
    const YAML::Node n = node_[key];
    if (!n.IsScalar()) fail(key, "expected a number");
    const std::string s = n.Scalar();
    if (s == ".inf" || s == "inf" || s == "+inf" || s == ".Inf") return INFINITY;
    try {
      return n.as<double>();
    } catch (const YAML::Exception&) {
      fail(key, "expected a number, got '" + s + "'");
    }
  }

  std::uint64_t count(const std::string& key, std::uint64_t def) const {
    if (!has(key)) return def;
    try {
      return node_[key].as<std::uint64_t>();
    } catch (const YAML::Exception&) {
      fail(key, "expected a non-negative integer");
    }
  }

  std::string str(const std::string& key, const std::string& def) const {
    if (!has(key)) return def;
    if (!node_[key].IsScalar()) fail(key, "expected a string");
    return node_[key].Scalar();
  }

  std::vector<double> list(const std::string& key) const {
    if (!has(key)) return {};
    const YAML::Node n = node_[key];
    if (n.IsScalar()) return {num(key, 0.0)};
    if (!n.IsSequence()) fail(key, "expected a number or a list of numbers");
    std::vector<double> out;
    for (const auto& e : n) {
      try {
        out.push_back(e.as<double>());
      } catch (const YAML::Exception&) {
        fail(key, "list entries must be numbers");
      }
    }
    return out;
  }

  Vec vec_of(const std::string& key, int d) const {
    const auto v = list(key);
    if (v.empty()) return Vec::Zero(d);
    if (static_cast<int>(v.size()) != d)
      fail(key, "expected " + std::to_string(d) + " components, got " + std::to_string(v.size()));
    Vec out(d);
    for (int i = 0; i < d; ++i) out(i) = v[i];
    return out;
  }

  void only(std::initializer_list<const char*> keys) const {
    const std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& kv : node_) {
      const std::string k = kv.first.as<std::string>();
      if (!ok.count(k)) fail(k, "unknown key");
    }
  }

  const YAML::Node& node() const { return node_; }

 private:
  std::string full(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  YAML::Node node_;
  std::string path_;
  const std::string& origin_;
};

AxisSpec read_axis(const Reader& r) {
  r.only({"lo", "hi", "bins"});
  AxisSpec a;
  a.lo = r.num("lo", 0.0);
  a.hi = r.num("hi", 0.0);
  a.bins = static_cast<int>(r.count("bins", 0));
  if (a.bins > 0 && !(a.hi > a.lo)) r.fail("hi", "must exceed lo");
  return a;
}

}  // namespace

void Scenario::validate() const {
  if (d != 1 && d != 2) throw ConfigError("dimension must be 1 or 2");
  medium.validate();
  if (!(wn.k_o > 0.0) || !std::isfinite(wn.k_o)) throw ConfigError("carrier wavenumber must be positive");
  if (!(source.ell_s > 0.0)) throw ConfigError("source.ell_s must be positive");
  if (!(source.T_s > 0.0)) throw ConfigError("source.T_s must be positive");
  if (!(array.kappa > 0.0)) throw ConfigError("array.kappa must be positive");
  if (flow.v_perp.size() != d) throw ConfigError("flow.v_perp must have d components");
  if (array.center.size() != d) throw ConfigError("array.center must have d components");
  if (!(z >= 0.0) || !std::isfinite(z)) throw ConfigError("range.z must be non-negative and finite");
  if (const auto* c = dynamic_cast<const CauchyCovariance*>(medium.model.get()))
    if (!(c->nu() > 0.5 * (d + 1))) throw ConfigError("medium.cov_nu must exceed (d+1)/2");
}

Scenario parse_scenario(const std::string& text, const std::string& origin) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    std::ostringstream os;
    os << origin << ":" << e.mark.line + 1 << ":" << e.mark.column + 1 << ": malformed YAML: " << e.msg;
    throw ConfigError(os.str());
  }
  if (!root.IsMap()) throw ConfigError(origin + ": top level must be a mapping");
  const Reader top(root, "", origin);
  top.only({"dimension", "medium", "carrier", "source", "flow", "array", "range", "grids", "solver"});

  Scenario s;
  s.d = static_cast<int>(top.count("dimension", 1));
  if (s.d != 1 && s.d != 2) top.fail("dimension", "must be 1 or 2");

  const Reader m = top.child("medium");
  m.only({"c0", "rho0", "sigma_c", "sigma_rho", "sigma_v", "ell", "T_corr", "cov_model", "cov_nu", "rho_c_corr"});
  s.medium.c_o = m.num("c0", 343.0);
  s.medium.rho_o = m.num("rho0", 1.2);
  s.medium.sigma_c = m.num("sigma_c", 0.0, true);
  s.medium.sigma_rho = m.num("sigma_rho", 0.0);
  s.medium.sigma_v = m.num("sigma_v", 0.0);
  s.medium.ell = m.num("ell", 1.0, true);
  s.medium.T_corr = m.num("T_corr", 1.0, true);
  s.medium.rho_c_corr = m.num("rho_c_corr", 0.0);
  try {
    s.medium.model = make_covariance_model(m.str("cov_model", "gaussian"), m.num("cov_nu", 3.0));
  } catch (const ConfigError& e) {
    m.fail("cov_model", e.what());
  }
  try {
    s.medium.validate();
  } catch (const ConfigError& e) {
    m.fail("", e.what());
  }

  const Reader c = top.child("carrier");
  c.only({"k0", "frequency"});
  if (c.has("k0") == c.has("frequency")) c.fail("", "give exactly one of 'k0' [rad/m] or 'frequency' [Hz]");
  s.wn.k_o = c.has("k0") ? c.num("k0", 0.0) : kTwoPi * c.num("frequency", 0.0) / s.medium.c_o;
  if (!(s.wn.k_o > 0.0)) c.fail(c.has("k0") ? "k0" : "frequency", "must be positive");

  const Reader src = top.child("source");
  src.only({"mode", "ell_s", "T_s", "sigma_s", "sigma"});
  const std::string mode = src.str("mode", "pulse");
  if (mode != "pulse" && mode != "harmonic") src.fail("mode", "must be 'pulse' or 'harmonic'");
  s.source.harmonic = mode == "harmonic";
  s.source.ell_s = src.num("ell_s", 1.0, true);
  s.source.T_s = src.num("T_s", 1.0);
  s.source.sigma = src.num("sigma", 1.0);
  s.source.sigma_s = src.has("sigma_s") ? src.num("sigma_s", 1.0)
                                        : (s.source.harmonic ? s.source.sigma / std::sqrt(s.source.T_s) : 1.0);
  if (!(s.source.ell_s > 0.0)) src.fail("ell_s", "must be positive");
  if (!(s.source.T_s > 0.0)) src.fail("T_s", "must be positive");

  const Reader f = top.child("flow");
  f.only({"v_perp", "v_z"});
  s.flow.v_perp = f.vec_of("v_perp", s.d);
  s.flow.v_z = f.num("v_z", 0.0);

  const Reader a = top.child("array");
  a.only({"center", "kappa"});
  s.array.center = a.vec_of("center", s.d);
  s.array.kappa = a.num("kappa", 1.0);
  if (!(s.array.kappa > 0.0)) a.fail("kappa", "must be positive");

  const Reader r = top.child("range");
  r.only({"z"});
  s.z = r.num("z", 0.0, true);
  if (!(s.z >= 0.0) || !std::isfinite(s.z)) r.fail("z", "must be non-negative and finite");

  const Reader g = top.child("grids");
  g.only({"omega", "k", "x", "t", "z_bracket"});
  if (g.has("omega")) s.grids.omega = read_axis(g.child("omega"));
  if (g.has("k")) s.grids.k = read_axis(g.child("k"));
  if (g.has("x")) s.grids.x = read_axis(g.child("x"));
  if (g.has("t")) {
    if (g.node()["t"].IsMap()) {
      const Reader t = g.child("t");
      t.only({"lo", "hi", "n"});
      const double lo = t.num("lo", 0.0, true), hi = t.num("hi", 0.0, true);
      const int n = static_cast<int>(t.count("n", 21));
      if (n < 3 || !(hi > lo)) t.fail("", "need hi > lo and n >= 3");
      for (int i = 0; i < n; ++i) s.grids.t.push_back(lo + (hi - lo) * i / (n - 1));
    } else {
      s.grids.t = g.list("t");
    }
  }
  if (g.has("z_bracket")) {
    const auto zb = g.list("z_bracket");
    if (zb.size() != 2 || !(zb[0] > 0.0) || !(zb[1] > zb[0])) g.fail("z_bracket", "expected [z_lo, z_hi] with 0 < z_lo < z_hi");
    s.grids.z_lo = zb[0];
    s.grids.z_hi = zb[1];
  }

  const Reader sv = top.child("solver");
  sv.only({"method", "particles", "seed", "threads", "tolerance", "hermite_order"});
  s.solver.method = sv.str("method", "closed");
  if (s.solver.method != "closed" && s.solver.method != "mc") sv.fail("method", "must be 'closed' or 'mc'");
  s.solver.particles = sv.count("particles", 100000);
  s.solver.seed = sv.count("seed", 1);
  s.solver.threads = static_cast<int>(sv.count("threads", 0));
  s.solver.tolerance = sv.num("tolerance", 1e-6);
  s.solver.hermite_order = static_cast<int>(sv.count("hermite_order", 40));
  if (s.solver.hermite_order < 4 || s.solver.hermite_order > 200) sv.fail("hermite_order", "must lie in [4, 200]");

  try {
    s.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open scenario file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path);
}

RegimeDiagnostics regime_diagnostics(const Scenario& s) {
  RegimeDiagnostics r;
  const double L = s.z;
  const double lam = s.wn.lambda_o();
  r.epsilon = L > 0.0 ? lam / L : INFINITY;
  r.gamma = lam / s.medium.ell;
  r.gamma_s = lam / s.source.ell_s;
  r.T_L = L / s.medium.c_o;
  r.eta = r.T_L > 0.0 ? s.medium.T_corr / r.T_L : INFINITY;
  r.eta_s = r.T_L > 0.0 ? s.source.T_s / r.T_L : INFINITY;
  const double Sigma = s.medium.sigma_c > 0.0 ? total_cross_section_paraxial(s.medium, s.wn) : 0.0;
  r.strong_scattering = Sigma * L;
  r.range_over_mfp = Sigma > 0.0 ? L / scattering_mean_free_path(Sigma) : 0.0;
  r.stability = s.medium.T_corr / s.source.T_s;
  r.mach = std::hypot(s.flow.v_perp.norm(), s.flow.v_z) / s.medium.c_o;
  if (r.gamma >= 0.3)
    r.warnings.push_back("gamma = lambda_o / ell = " + std::to_string(r.gamma) + " is not small (paraxial scaling)");
  if (r.stability >= 0.3)
    r.warnings.push_back("T / T_s = " + std::to_string(r.stability) + " is not small (statistical stability)");
  return r;
}

}  // namespace mrt
