#include "mrt/imaging.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mrt {

namespace {

double median(std::vector<double> v) {
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

std::vector<double> to_std(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

// Expands outward from 0 until f drops below `drop` of f(0); returns the
// first abscissa past the drop or throws when it never decays.
double decay_extent(const std::function<double(double)>& f, double start, double drop) {
  const double f0 = f(0.0);
  if (!(f0 > 0.0)) throw NoDetectionError("image vanishes at the origin");
  double t = start;
  for (int i = 0; i < 200; ++i, t *= 1.5)
    if (f(t) < drop * f0) return t;
  throw NonIdentifiableError("image does not decay; the width cannot be measured");
}


// DoA image on the FFT grid of the tapered lags, restricted to |k_i| <= H.
// The lag spacing resolves the whole window, so the scan cannot alias.
std::vector<double> doa_scan_fft(const CoherenceProvider& c, const ArraySpec& a, double H, RegularGrid& grid) {
  const int d = c.dim();
  const double ko = c.k_o();
  const double p = ko * ko / (2.0 * a.kappa * a.kappa);
  Eigen::MatrixXd W = c.envelope_precision().block(1, 1, d, d);
  W.diagonal().array() += p;
  const double lam = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(W).eigenvalues().minCoeff();
  const double h = kPi / (1.25 * H);
  const double reach = 8.0 / std::sqrt(lam);
  const int cap = d == 1 ? (1 << 16) : 1024;
  int n = std::max(64, 2 * fft_size(static_cast<int>(std::ceil(reach / h))));
  if (n > cap) throw NumericalError("DoA scan needs more than " + std::to_string(cap) + " lags per axis");
  n = 4 * ((n + 3) / 4);  // (-1)^(n/2) = 1 in the centring trick
  const std::size_t total = d == 1 ? n : static_cast<std::size_t>(n) * n;
  std::vector<cplx> data(total);
  const Vec xo = a.center.head(d);
  Vec l(d);
  for (std::size_t f = 0; f < total; ++f) {
    int parity = 0;
    for (int i = 0, rest = static_cast<int>(f); i < d; ++i) {
      const int j = d == 1 ? rest : (i == 0 ? rest / n : rest % n);
      l(i) = (j - n / 2) * h;
      parity += j;
    }
    const cplx v = c.value(0.0, l, xo) * std::exp(-0.5 * p * l.squaredNorm());
    data[f] = parity % 2 == 0 ? v : -v;
  }
  std::vector<int> dims(d, n);
  fft_forward_inplace(data, dims);
  const double dk = kTwoPi / (n * h);
  const int m0 = n / 2 - static_cast<int>(std::floor(H / dk)), m1 = n / 2 + static_cast<int>(std::floor(H / dk));
  grid.d = d;
  grid.h = dk;
  grid.n = m1 - m0 + 1;
  grid.lo = Vec::Constant(d, (m0 - n / 2) * dk);
  std::vector<double> out(grid.size());
  const double scale = std::pow(h, d);
  for (std::size_t g = 0; g < out.size(); ++g) {
    std::size_t f = 0;
    int parity = 0;
    if (d == 1) {
      f = m0 + g;
      parity = static_cast<int>(f);
    } else {
      const int i0 = m0 + static_cast<int>(g) / grid.n, i1 = m0 + static_cast<int>(g) % grid.n;
      f = static_cast<std::size_t>(i0) * n + i1;
      parity = i0 + i1;
    }
    out[g] = (parity % 2 == 0 ? 1.0 : -1.0) * data[f].real() * scale;
  }
  return out;
}

}  // namespace

MediumConstants medium_constants(const Scenario& s) {
  const TaylorCoeffs tc = taylor_coeffs(s.medium, s.wn.k_o);
  MediumConstants c;
  c.T_sqrt_z = s.medium.frozen() || tc.alpha <= 0.0 ? INFINITY : s.medium.T_corr / std::sqrt(tc.alpha);
  c.D_sqrt_z = tc.vartheta <= 0.0 ? INFINITY : s.medium.ell / std::sqrt(tc.vartheta);
  return c;
}

double doa_bias(double u) { return (1.0 + u) / (1.0 + 2.0 * u / 3.0); }

double theta_doa_model(const CoherenceParams& p, double kappa) {
  const double u = p.u;
  return std::sqrt(1.0 / (3.0 * p.D_z * p.D_z * p.k_o * p.k_o) * (1.0 + u / 2.0) / (1.0 + 2.0 * u / 3.0) +
                   1.0 / (2.0 * kappa * kappa));
}

double theta_range_model(const MediumConstants& c, double v_mag, double ell_s, double z) {
  const double Tz = c.T_sqrt_z / std::sqrt(z), Dz = c.D_sqrt_z / std::sqrt(z);
  const double u = ell_s * ell_s / (Dz * Dz);
  return Tz / std::sqrt(1.0 + v_mag * v_mag * Tz * Tz / (Dz * Dz) * (1.0 + u / 6.0) / (1.0 + 2.0 * u / 3.0));
}

std::size_t RegularGrid::size() const { return static_cast<std::size_t>(std::pow(n, d)); }

Vec RegularGrid::node(std::size_t flat) const {
  Vec v(d);
  for (int i = d - 1; i >= 0; --i) {
    v(i) = lo(i) + static_cast<double>(flat % n) * h;
    flat /= n;
  }
  return v;
}

std::vector<Vec> RegularGrid::nodes() const {
  std::vector<Vec> out;
  out.reserve(size());
  for (std::size_t f = 0; f < size(); ++f) out.push_back(node(f));
  return out;
}

RegularGrid RegularGrid::centered(const Vec& center, double half_width, int n) {
  RegularGrid g;
  g.d = static_cast<int>(center.size());
  g.n = n;
  g.h = 2.0 * half_width / (n - 1);
  g.lo = center.array() - half_width;
  return g;
}

PeakFit quadratic_peak(const RegularGrid& g, const std::vector<double>& values) {
  PeakFit pk;
  pk.argmax = static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
  auto lg = [&](std::size_t f) { return std::log(std::max(values[f], 1e-300)); };
  std::vector<int> idx(g.d);
  std::size_t r = pk.argmax;
  for (int i = g.d - 1; i >= 0; --i) {
    idx[i] = static_cast<int>(r % g.n);
    r /= g.n;
    if (idx[i] == 0 || idx[i] == g.n - 1) pk.on_edge = true;
  }
  pk.location = g.node(pk.argmax);
  pk.value = values[pk.argmax];
  if (pk.on_edge || g.n < 3) return pk;
  auto flat = [&](int a, int b) {
    return g.d == 1 ? static_cast<std::size_t>(a) : static_cast<std::size_t>(a) * g.n + b;
  };
  if (g.d == 1) {
    const double ym = lg(idx[0] - 1), y0 = lg(idx[0]), yp = lg(idx[0] + 1);
    const double den = ym - 2.0 * y0 + yp;
    if (den >= 0.0) return pk;
    const double delta = 0.5 * (ym - yp) / den;
    pk.location(0) += delta * g.h;
    pk.value = std::exp(y0 - 0.25 * (ym - yp) * delta);
    return pk;
  }
  Eigen::MatrixXd A(9, 6);
  Eigen::VectorXd y(9);
  int row = 0;
  for (int a = -1; a <= 1; ++a)
    for (int b = -1; b <= 1; ++b, ++row) {
      A.row(row) << 1.0, a, b, a * a, a * b, b * b;
      y(row) = lg(flat(idx[0] + a, idx[1] + b));
    }
  const Eigen::VectorXd c = A.colPivHouseholderQr().solve(y);
  Eigen::Matrix2d H;
  H << 2.0 * c(3), c(4), c(4), 2.0 * c(5);
  if (H.determinant() <= 0.0 || H(0, 0) >= 0.0) return pk;
  const Eigen::Vector2d s = H.partialPivLu().solve(-Eigen::Vector2d(c(1), c(2)));
  if (s.cwiseAbs().maxCoeff() > 1.0) return pk;
  pk.location(0) += s(0) * g.h;
  pk.location(1) += s(1) * g.h;
  pk.value = std::exp(c(0) + c(1) * s(0) + c(2) * s(1) + c(3) * s(0) * s(0) + c(4) * s(0) * s(1) +
                      c(5) * s(1) * s(1));
  return pk;
}

double gaussian_width(const std::vector<Vec>& nodes, const std::vector<double>& values, const Vec& center,
                      double* residual) {
  const double vmax = *std::max_element(values.begin(), values.end());
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (values[i] >= 0.1 * vmax) {
      xs.push_back((nodes[i] - center).squaredNorm());
      ys.push_back(std::log(values[i]));
    }
  if (xs.size() < 3) throw NumericalError("too few points above the fit band to measure a width");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  if (!(slope < 0.0)) throw NumericalError("image does not decay away from the peak");
  if (residual) {
    double ss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double e = ys[i] - (my + slope * (xs[i] - mx));
      ss += e * e;
    }
    *residual = std::sqrt(ss / n);
  }
  return std::sqrt(-0.5 / slope);
}

DoaResult image_doa(const CoherenceProvider& c, const Scenario& s, double z_assumed, const DoaOptions& opt) {
  const int d = c.dim();
  const double ko = c.k_o();
  const CoherenceParams p = coherence_params(s, z_assumed);
  DoaResult r;
  r.theta_pred = theta_doa_model(p, s.array.kappa);
  r.k_pred = ko * s.array.center.head(d) / z_assumed * doa_bias(p.u);
  const double sigma = r.theta_pred * ko;

  // coarse FFT scan over the search window, then a fine grid around the argmax
  const double H = opt.k_half_width > 0.0 ? opt.k_half_width : 0.3 * ko;
  RegularGrid coarse;
  const std::vector<double> cimg = doa_scan_fft(c, s.array, H, coarse);
  const double cmax = *std::max_element(cimg.begin(), cimg.end());
  if (!(cmax > 3.0 * std::max(median(cimg), 0.0))) throw NoDetectionError("DoA image has no peak above 3x its floor");
  PeakFit pk = quadratic_peak(coarse, cimg);
  if (pk.on_edge) throw NoDetectionError("DoA peak lies on the edge of the search window");

  Vec center = coarse.node(pk.argmax);
  for (int attempt = 0; attempt < 4; ++attempt) {
    r.grid = RegularGrid::centered(center, 3.0 * sigma, 31);
    r.image = doa_image(c, s.array, r.grid.nodes(), opt.order);
    pk = quadratic_peak(r.grid, r.image);
    if (!pk.on_edge) break;
    center = r.grid.node(pk.argmax);
  }
  if (pk.on_edge) throw NoDetectionError("DoA peak could not be bracketed");
  r.k_peak = pk.location;
  r.theta_doa = gaussian_width(r.grid.nodes(), r.image, r.k_peak, &r.fit_residual) / ko;
  return r;
}

SaturationReport doa_aperture_saturation(const Scenario& s, double z) {
  const CoherenceParams p = coherence_params(s, z);
  SaturationReport r;
  r.kappa_critical = std::sqrt(2.0) * p.D_z * p.k_o;
  auto theta = [&](double kappa) { return theta_doa_model(p, kappa); };
  // numeric knee: where the log-log slope crosses -1/2
  auto slope = [&](double lk) {
    const double h = 1e-4;
    return (std::log(theta(std::exp(lk + h))) - std::log(theta(std::exp(lk - h)))) / (2.0 * h) + 0.5;
  };
  const double lc = std::log(r.kappa_critical);
  r.kappa_knee = std::exp(bisect(slope, lc - 10.0, lc + 10.0, 1e-12));
  r.improvement_beyond = 1.0 - theta(1e6 * r.kappa_critical) / theta(r.kappa_critical);
  return r;
}

RangeResult image_range(const CoherenceProvider& c, const Vec& x_o, const MediumConstants& mc, double v_mag,
                        double ell_s, double z_lo, double z_hi, std::vector<double> t_grid) {
  if (!std::isfinite(mc.T_sqrt_z))
    throw NonIdentifiableError("frozen medium: the wave has no temporal decorrelation and the range is not identifiable");
  RangeResult r;
  if (t_grid.empty()) {
    auto f = [&](double t) { return range_image(c, x_o, {t})[0]; };
    const double scale = z_hi > 0.0 ? mc.T_sqrt_z / std::sqrt(z_hi) : mc.T_sqrt_z;
    const double t_end = decay_extent(f, 1e-2 * scale, 0.02);
    for (int i = -20; i <= 20; ++i) t_grid.push_back(t_end * i / 20.0);
  }
  r.t = t_grid;
  r.image = range_image(c, x_o, t_grid);
  std::vector<Vec> nodes;
  for (double t : t_grid) nodes.push_back(vec({t}));
  r.theta_range = gaussian_width(nodes, r.image, vec({0.0}), &r.fit_residual);

  if (v_mag == 0.0) {
    r.z_hat = std::pow(mc.T_sqrt_z / r.theta_range, 2);
    if ((z_lo > 0.0 && r.z_hat < z_lo) || (z_hi > 0.0 && r.z_hat > z_hi))
      throw RangeBoundsError("range estimate " + std::to_string(r.z_hat) + " lies outside the search bracket");
  } else {
    if (!(z_lo > 0.0 && z_hi > z_lo)) throw ArgumentError("range search needs 0 < z_lo < z_hi");
    auto g = [&](double z) { return theta_range_model(mc, v_mag, ell_s, z) - r.theta_range; };
    r.z_hat = bisect(g, z_lo, z_hi, 1e-10);
  }
  r.theta_pred = theta_range_model(mc, v_mag, ell_s, r.z_hat);
  return r;
}

VelocityResult estimate_velocity(const CoherenceProvider& c, const Scenario& s, double z,
                                 std::vector<double> t_grid, const VelocityOptions& opt) {
  const int d = c.dim();
  const CoherenceParams p = coherence_params(s, z);
  const double sigma_y = p.m_z * p.A_z;
  VelocityResult r;
  r.s_z_model = p.s_z;
  r.s_z = opt.assume_unit_sz ? 1.0 : p.s_z;
  if (t_grid.empty()) {
    double t_max = p.T_z;
    const double vp = s.flow.v_perp.head(d).norm();
    if (vp > 0.0) t_max = std::min(t_max, p.n_z * p.A_z / vp);
    if (!std::isfinite(t_max)) throw ArgumentError("velocity imaging needs an explicit time grid here");
    for (int i = -10; i <= 10; ++i) t_grid.push_back(t_max * i / 10.0);
  }
  std::vector<double> order_t = t_grid;
  std::sort(order_t.begin(), order_t.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });

  Vec slope = Vec::Zero(d);
  std::vector<double> ts, ws;
  std::vector<Vec> ys;
  for (double t : order_t) {
    Vec center = slope * t;
    PeakFit pk;
    RegularGrid g;
    std::vector<double> img;
    for (int attempt = 0; attempt < 6; ++attempt) {
      g = RegularGrid::centered(center, 3.0 * sigma_y, 31);
      img = velocity_image(c, s.array, t, g.nodes(), opt.order);
      pk = quadratic_peak(g, img);
      if (!pk.on_edge) break;
      center = g.node(pk.argmax);
    }
    if (pk.on_edge || !(pk.value > 0.0)) continue;
    ts.push_back(t);
    ys.push_back(pk.location);
    ws.push_back(pk.value);
    // running slope through the origin steers the next window
    double stt = 0.0;
    Vec sty = Vec::Zero(d);
    for (std::size_t i = 0; i < ts.size(); ++i) {
      stt += ws[i] * ts[i] * ts[i];
      sty += ws[i] * ts[i] * ys[i];
    }
    if (stt > 0.0) slope = sty / stt;
  }
  const double wmax = ws.empty() ? 0.0 : *std::max_element(ws.begin(), ws.end());
  std::size_t usable = 0;
  for (double w : ws)
    if (w > 1e-3 * wmax) ++usable;
  if (usable <= 2) throw NumericalError("velocity regression is degenerate (too few usable time slices)");

  double sw = 0.0, st = 0.0;
  Vec sy = Vec::Zero(d);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    sw += ws[i];
    st += ws[i] * ts[i];
    sy += ws[i] * ys[i];
  }
  const double tbar = st / sw;
  const Vec ybar = sy / sw;
  double stt = 0.0;
  Vec sty = Vec::Zero(d);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    stt += ws[i] * (ts[i] - tbar) * (ts[i] - tbar);
    sty += ws[i] * (ts[i] - tbar) * (ys[i] - ybar);
  }
  if (!(stt > 0.0)) throw NumericalError("velocity regression is degenerate (no spread in t)");
  r.v_hat = sty / stt / r.s_z;
  r.t = ts;
  r.y_max = ys;
  r.weights = ws;
  const double v = r.v_hat.norm();
  r.fast_flow = v > p.n_z * p.A_z / p.T_z;
  r.res_v = r.fast_flow ? p.m_z * p.A_z / (r.s_z * p.n_z * p.A_z / v) : p.m_z * p.A_z / (r.s_z * p.T_z);
  return r;
}

nlohmann::json EstimateReport::to_json() const {
  nlohmann::json j;
  j["k_peak"] = to_std(k_peak);
  j["theta_doa"] = theta_doa;
  j["z_hat"] = z_hat;
  j["theta_range"] = theta_range;
  j["x_o_hat"] = to_std(x_o_hat);
  j["x_o_resolution"] = x_o_resolution;
  if (v_hat.size() > 0) {
    j["v_hat"] = to_std(v_hat);
    j["s_z_used"] = s_z_used;
    j["res_v"] = res_v;
  }
  j["flags"] = flags;
  j["diagnostics"] = diagnostics;
  return j;
}

EstimateReport localize_source(const CoherenceProvider& c, const Scenario& priors, const LocalizeOptions& opt) {
  const int d = c.dim();
  const double ko = c.k_o();
  const MediumConstants mc = opt.use_constants ? opt.constants : medium_constants(priors);
  const double vmag = priors.flow.v_perp.head(d).norm();
  const double ls = priors.source.ell_s;
  EstimateReport rep;

  const RangeResult rr = image_range(c, priors.array.center, mc, vmag, ls, priors.grids.z_lo,
                                     priors.grids.z_hi, priors.grids.t);
  rep.z_hat = rr.z_hat;
  rep.theta_range = rr.theta_range;

  const DoaResult dr = image_doa(c, priors, rep.z_hat);
  rep.k_peak = dr.k_peak;
  rep.theta_doa = dr.theta_doa;

  const double Dz = mc.D_sqrt_z / std::sqrt(rep.z_hat);
  const double u = ls * ls / (Dz * Dz);
  const double bias = doa_bias(u);
  rep.x_o_hat = rep.z_hat * rep.k_peak / (ko * bias);
  rep.x_o_resolution = rep.z_hat * rep.theta_doa / bias;
  const double z_star = mc.D_sqrt_z * mc.D_sqrt_z / (ls * ls);
  const double ratio = rep.z_hat / z_star;
  rep.diagnostics["z_over_z_star"] = ratio;
  rep.diagnostics["bias"] = bias;
  rep.diagnostics["range_fit_residual"] = rr.fit_residual;
  rep.diagnostics["doa_fit_residual"] = dr.fit_residual;
  rep.diagnostics["theta_range_model"] = rr.theta_pred;
  rep.diagnostics["theta_doa_model"] = dr.theta_pred;
  if (ratio >= 0.1 && ratio <= 10.0) {
    rep.flags.push_back("range near the critical distance: straight-characteristic cases do not apply");
    rep.diagnostics["x_o_case1"] = to_std(rep.z_hat * rep.k_peak / ko);
    rep.diagnostics["x_o_case2"] = to_std(rep.z_hat * rep.k_peak / (1.5 * ko));
    rep.diagnostics["x_o_exact"] = to_std(rep.x_o_hat);
  }
  if (opt.estimate_velocity) {
    Scenario at = priors;
    at.z = rep.z_hat;
    const VelocityResult vr = estimate_velocity(c, at, rep.z_hat, opt.t_grid);
    rep.v_hat = vr.v_hat;
    rep.s_z_used = vr.s_z;
    rep.res_v = vr.res_v;
    if (vr.fast_flow) rep.flags.push_back("fast cross-range flow: velocity resolution degraded");
  }
  return rep;
}

MediumConstants calibrate_medium(const CoherenceProvider& c, const Scenario& known, double z_known) {
  const int d = c.dim();
  const Vec xo = known.array.center.head(d);
  const double ls = known.source.ell_s;
  const double vmag = known.flow.v_perp.head(d).norm();

  // lateral width of |C(0, dx e_1, x_o)|
  auto fx = [&](double a) {
    Vec dx = Vec::Zero(d);
    dx(0) = a;
    return std::abs(c.value(0.0, dx, xo));
  };
  const double x_end = decay_extent(fx, 1e-3 * ls, 0.02);
  std::vector<Vec> xn;
  std::vector<double> xv;
  for (int i = -20; i <= 20; ++i) {
    xn.push_back(vec({x_end * i / 20.0}));
    xv.push_back(fx(x_end * i / 20.0));
  }
  const double w = gaussian_width(xn, xv, vec({0.0}));
  // 1/w^2 = 1/D_1z^2 + H_z^2 / D_2z^2 increases as D_z shrinks
  auto lateral = [&](double logDz) {
    const double Dz = std::exp(logDz), u = ls * ls / (Dz * Dz);
    const double D1 = 2.0 * Dz * std::sqrt(3.0 * (1.0 + u / 6.0));
    const double D2 = Dz * std::sqrt((1.0 + 2.0 * u / 3.0) / (1.0 + u / 6.0));
    const double H = 1.0 - 1.0 / (2.0 * (1.0 + u / 6.0));
    return 1.0 / (D1 * D1) + H * H / (D2 * D2) - 1.0 / (w * w);
  };
  const double Dz = std::exp(bisect(lateral, std::log(ls) - 30.0, std::log(ls) + 30.0, 1e-12));

  auto ft = [&](double t) { return std::abs(c.value(t, Vec::Zero(d), xo)); };
  const double t_end = decay_extent(ft, 1e-6, 0.02);
  std::vector<Vec> tn;
  std::vector<double> tv;
  for (int i = -20; i <= 20; ++i) {
    tn.push_back(vec({t_end * i / 20.0}));
    tv.push_back(ft(t_end * i / 20.0));
  }
  const double th = gaussian_width(tn, tv, vec({0.0}));
  const double u = ls * ls / (Dz * Dz);
  const double inv = 1.0 / (th * th) - vmag * vmag / (Dz * Dz) * (1.0 + u / 6.0) / (1.0 + 2.0 * u / 3.0);
  if (!(inv > 0.0)) throw NumericalError("temporal width is inconsistent with the known flow speed");
  MediumConstants mc;
  mc.T_sqrt_z = std::sqrt(z_known / inv);
  mc.D_sqrt_z = Dz * std::sqrt(z_known);
  return mc;
}

}  // namespace mrt
