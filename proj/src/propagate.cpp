#include "mrt/propagate.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace mrt {

namespace {

void require_pulse(const Scenario& s) {
  if (s.source.harmonic) throw ConfigError("paraxial propagation needs a pulse source");
  if (s.medium.frozen()) throw ConfigError("paraxial propagation needs a finite correlation time");
  s.validate();
}

double pulse_constant(const Scenario& s) {
  const auto& src = s.source;
  return src.sigma_s * src.sigma_s * src.T_s * src.T_s * std::pow(src.ell_s, 2 * s.d) *
         std::pow(kTwoPi, s.d) / (4.0 * s.wn.k_o * std::sqrt(kPi));
}

int even_fft_size(int n) { return 2 * fft_size((n + 1) / 2); }

// Range-marginal covariance tabulated on (tau, |r|^2) for models without a
// closed form; 4-point Lagrange interpolation, even reflection in tau.
class MarginalTable {
 public:
  explicit MarginalTable(const CovarianceModel& m) {
    const Vec zero1 = Vec::Zero(1);
    R00_ = m.marginal(0.0, zero1);
    tau_max_ = 0.5;
    while (m.marginal(tau_max_, zero1) > 1e-13 * R00_ && tau_max_ < 1e3) tau_max_ += 0.5;
    double rho = 0.5;
    while (true) {
      Vec r(1);
      r(0) = rho;
      if (m.marginal(0.0, r) <= 1e-13 * R00_ || rho > 1e5) break;
      rho *= 1.25;
    }
    const double u_max = rho * rho;
    s_max_ = u_max / (1.0 + u_max);
    nt_ = 513;
    ns_ = 1025;
    dt_ = tau_max_ / (nt_ - 1);
    ds_ = s_max_ / (ns_ - 1);
    data_.resize(static_cast<std::size_t>(nt_) * ns_);
    for (int i = 0; i < nt_; ++i)
      for (int j = 0; j < ns_; ++j) {
        const double s = j * ds_;
        Vec r(1);
        r(0) = std::sqrt(s / (1.0 - s));
        data_[static_cast<std::size_t>(i) * ns_ + j] = m.marginal(i * dt_, r);
      }
  }

  double R00() const { return R00_; }

  double operator()(double tau, double rho2) const {
    tau = std::abs(tau);
    if (tau >= tau_max_) return 0.0;
    const double s = rho2 / (1.0 + rho2);
    if (s >= s_max_) return 0.0;
    const double ft = tau / dt_, fs = s / ds_;
    const int it = std::clamp(static_cast<int>(ft) - 1, -1, nt_ - 4);
    const int is = std::clamp(static_cast<int>(fs) - 1, 0, ns_ - 4);
    double wt[4], ws[4];
    lagrange(ft - it, wt);
    lagrange(fs - is, ws);
    double v = 0.0;
    for (int a = 0; a < 4; ++a) {
      const int ti = std::abs(it + a);  // reflection through tau = 0
      double row = 0.0;
      for (int b = 0; b < 4; ++b) row += ws[b] * data_[static_cast<std::size_t>(ti) * ns_ + is + b];
      v += wt[a] * row;
    }
    return v;
  }

 private:
  // Lagrange weights on nodes 0..3 at position p.
  static void lagrange(double p, double w[4]) {
    w[0] = -(p - 1) * (p - 2) * (p - 3) / 6.0;
    w[1] = p * (p - 2) * (p - 3) / 2.0;
    w[2] = -p * (p - 1) * (p - 3) / 2.0;
    w[3] = p * (p - 1) * (p - 2) / 6.0;
  }

  double R00_ = 0.0, tau_max_ = 0.0, s_max_ = 0.0, dt_ = 0.0, ds_ = 0.0;
  int nt_ = 0, ns_ = 0;
  std::vector<double> data_;
};

// Exponent of the characteristic solution,
//   (sigma_c^2 ell k_o^2 / 4) int_0^z [R(t/T, r(z')) - R(0,0)] dz'
// with r(z') = (y - q (z - z') / k_o - v t) / ell.
class CharacteristicExponent {
 public:
  explicit CharacteristicExponent(const Scenario& s)
      : z_(s.z), T_(s.medium.T_corr), ell_(s.medium.ell), ko_(s.wn.k_o), v_(s.flow.v_perp) {
    pre_ = s.medium.sigma_c * s.medium.sigma_c * ell_ * ko_ * ko_ / 4.0;
    gaussian_ = dynamic_cast<const GaussianCovariance*>(s.medium.model.get()) != nullptr;
    if (!gaussian_ && pre_ > 0.0 && z_ > 0.0) table_ = std::make_unique<MarginalTable>(*s.medium.model);
  }

  double operator()(double t, const Vec& y, const Vec& q) const {
    if (pre_ == 0.0 || z_ == 0.0) return 0.0;
    const double tau = t / T_;
    const Vec A = (y - q * z_ / ko_ - v_ * t) / ell_;
    const Vec B = q / (ko_ * ell_);
    if (gaussian_) {
      const double b = B.norm();
      double I;
      if (b * z_ < 1e-6) {
        I = z_ * std::exp(-0.5 * (A + 0.5 * z_ * B).squaredNorm());
      } else {
        const double c = A.dot(B) / b;
        const double perp2 = std::max(A.squaredNorm() - c * c, 0.0);
        I = std::exp(-0.5 * perp2) / b * std::sqrt(kPi / 2.0) *
            erf_diff(c / std::sqrt(2.0), (c + b * z_) / std::sqrt(2.0));
      }
      return pre_ * std::sqrt(kTwoPi) * (std::exp(-0.5 * tau * tau) * I - z_);
    }
    const auto& tab = *table_;
    auto f = [&](double zp) { return tab(tau, (A + B * zp).squaredNorm()) - tab.R00(); };
    return pre_ * boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, 0.0, z_, 10, 1e-10);
  }

 private:
  double z_, T_, ell_, ko_;
  Vec v_;
  double pre_;
  bool gaussian_;
  std::unique_ptr<MarginalTable> table_;
};

// Transform axis whose nodes shift + (i - n/2) h include every output bin
// centre: bin b sits on node first + b m.
struct BinAxis {
  int n = 0;
  double h = 0.0;
  double shift = 0.0;
  double w = 0.0;  // output bin width
  int m = 1;       // nodes per bin
  int first = 0;
  double node(int i) const { return shift + (i - n / 2) * h; }
};

BinAxis make_bin_axis(const Axis& out, double reach, double conj_max) {
  BinAxis a;
  a.w = out.width();
  a.m = std::max(1, static_cast<int>(std::ceil(a.w * conj_max / kPi - 1e-9)));
  a.h = a.w / a.m;
  const double c0 = out.center(0);
  a.shift = c0 - a.h * std::round(c0 / a.h);
  const double half = std::max({std::abs(out.lo), std::abs(out.hi), reach}) + 2.0 * a.h;
  a.n = even_fft_size(static_cast<int>(std::ceil(2.0 * half / a.h)) + 2);
  a.first = static_cast<int>(std::lround((c0 - a.shift) / a.h)) + a.n / 2;
  return a;
}

template <class F>
void parallel_for(std::size_t n, int threads, F&& body) {
  threads = std::max(1, std::min<int>(threads, static_cast<int>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    body(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] { body(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

WignerField empty_field(const Scenario& s, const PhaseSpaceGrid& g) {
  WignerField f;
  f.d = s.d;
  f.z = s.z;
  f.axes.push_back(g.omega);
  for (const auto& a : g.k) f.axes.push_back(a);
  for (const auto& a : g.x) f.axes.push_back(a);
  f.values.assign(f.cells(), 0.0);
  f.metadata["sigma_x"] = g.sigma_x;
  f.metadata["source"] = {{"ell_s", s.source.ell_s}, {"T_s", s.source.T_s}, {"sigma_s", s.source.sigma_s}};
  return f;
}

}  // namespace

int resolve_threads(int threads) {
  if (threads > 0) return threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

SpreadMoments spread_moments(const Scenario& s, double sigma_x) {
  SpreadMoments m;
  const auto& src = s.source;
  const double ko = s.wn.k_o;
  double var_kp = 0.0, var_wp = 0.0, Sigma = 0.0;
  if (s.medium.sigma_c > 0.0) {
    const TaylorCoeffs tc = taylor_coeffs(s.medium, ko);
    Sigma = total_cross_section_paraxial(s.medium, s.wn);
    var_kp = tc.vartheta_o / (tc.R00 * s.medium.ell * s.medium.ell);
    var_wp = tc.alpha_o / (tc.R00 * s.medium.T_corr * s.medium.T_corr) +
             s.flow.v_perp.squaredNorm() * var_kp;
  }
  const double z = s.z;
  m.var_k = 1.0 / (2.0 * src.ell_s * src.ell_s) + Sigma * z * var_kp;
  m.var_omega = 1.0 / (2.0 * src.T_s * src.T_s) + Sigma * z * var_wp;
  m.var_x = sigma_x * sigma_x + z * z / (2.0 * src.ell_s * src.ell_s * ko * ko) +
            Sigma * var_kp * z * z * z / (3.0 * ko * ko);
  return m;
}

PhaseSpaceGrid output_grid(const Scenario& s) {
  PhaseSpaceGrid g;
  const int nb = s.d == 1 ? 12 : 10;
  const double c = s.d == 1 ? 4.0 : 3.5;
  const auto& gs = s.grids;
  if (gs.x.bins > 0) {
    g.sigma_x = (gs.x.hi - gs.x.lo) / gs.x.bins;
  } else {
    // Bin width equal to the regularization width with the histogram
    // spanning +-c standard deviations of the regularized spread.
    const double s0 = std::sqrt(spread_moments(s, 0.0).var_x);
    g.sigma_x = 2.0 * c * s0 / std::sqrt(nb * nb - 4.0 * c * c);
  }
  const SpreadMoments m = spread_moments(s, g.sigma_x);
  auto make = [&](const AxisSpec& spec, double var, const char* name, const char* unit) {
    Axis a;
    a.name = name;
    a.unit = unit;
    if (spec.bins > 0) {
      a.lo = spec.lo;
      a.hi = spec.hi;
      a.n = spec.bins;
    } else {
      const double h = c * std::sqrt(var);
      a.lo = -h;
      a.hi = h;
      a.n = nb;
    }
    return a;
  };
  g.omega = make(gs.omega, m.var_omega, "omega", "rad/s");
  for (int i = 0; i < s.d; ++i) {
    const std::string sfx = s.d == 1 ? "" : std::to_string(i + 1);
    Axis k = make(gs.k, m.var_k, "k", "rad/m");
    k.name += sfx;
    g.k.push_back(k);
    Axis x;
    if (gs.x.bins > 0) {
      x = make(gs.x, m.var_x, "x", "m");
    } else {
      x.name = "x";
      x.unit = "m";
      x.lo = -0.5 * nb * g.sigma_x;
      x.hi = 0.5 * nb * g.sigma_x;
      x.n = nb;
    }
    x.name += sfx;
    g.x.push_back(x);
  }
  return g;
}

double initial_wigner(const Scenario& s, double omega, const Vec& k) {
  const auto& src = s.source;
  return pulse_constant(s) * std::exp(-src.T_s * src.T_s * omega * omega) *
         std::exp(-src.ell_s * src.ell_s * k.squaredNorm());
}

double initial_mass(const Scenario& s) {
  const auto& src = s.source;
  return pulse_constant(s) * std::sqrt(kPi) / src.T_s * std::pow(std::sqrt(kPi) / src.ell_s, s.d);
}

PropagationResult propagate_closed_form(const Scenario& s, int threads) {
  require_pulse(s);
  threads = resolve_threads(threads);
  const int d = s.d;
  const auto& src = s.source;
  const double ko = s.wn.k_o;
  const PhaseSpaceGrid g = output_grid(s);
  const SpreadMoments m = spread_moments(s, g.sigma_x);
  PropagationResult res;

  // The transform of the solution is a product of Gaussians in (t, y', q)
  // times exp(exponent) <= 1, with y' = y - q z / k_o the lag seen along the
  // free characteristic. Conjugate boxes are set by the tail level of those
  // Gaussians; direct boxes by the spread moments. d = 2 trades tail level
  // for a grid that fits in memory; total mass does not depend on either.
  const double tail = d == 1 ? 1e-16 : 1e-8;
  const double conj = std::sqrt(2.0 * std::log(1.0 / tail));
  const double direct = d == 1 ? 6.5 : 5.0;
  const double t_max = std::sqrt(2.0) * src.T_s * conj;
  const double y_max = std::sqrt(2.0) * src.ell_s * conj;
  const double q_max = conj / g.sigma_x;
  std::vector<BinAxis> fa;
  fa.push_back(make_bin_axis(g.omega, direct * std::sqrt(m.var_omega), t_max));
  for (int i = 0; i < d; ++i) fa.push_back(make_bin_axis(g.k[i], direct * std::sqrt(m.var_k), y_max));
  for (int i = 0; i < d; ++i) fa.push_back(make_bin_axis(g.x[i], direct * std::sqrt(m.var_x), q_max));
  std::vector<int> dims;
  std::size_t total = 1;
  for (const auto& a : fa) {
    dims.push_back(a.n);
    total *= static_cast<std::size_t>(a.n);
    res.fft_shape.push_back(a.n);
  }
  if (total > (std::size_t{1} << 26))
    throw NumericalError("closed-form grid needs " + std::to_string(total) +
                         " cells; coarsen the output grid or use the Monte Carlo solver");

  std::vector<double> dual(fa.size());
  for (std::size_t i = 0; i < fa.size(); ++i) dual[i] = kTwoPi / (fa[i].n * fa[i].h);

  if (s.medium.sigma_c > 0.0 && s.z > 0.0) {
    const TaylorCoeffs tc = taylor_coeffs(s.medium, ko);
    const double Tz = s.medium.T_corr / std::sqrt(tc.alpha * s.z);
    const double Dz = s.medium.ell / std::sqrt(tc.vartheta * s.z);
    if (dual[0] > Tz / 3.0) res.warnings.push_back("time lag spacing does not resolve the decoherence time");
    if (dual[1] > Dz / 3.0) res.warnings.push_back("lateral lag spacing does not resolve the decoherence length");
  }

  const CharacteristicExponent expo(s);
  const double C0 = pulse_constant(s);
  const double pre = C0 / kTwoPi * std::sqrt(kPi) / src.T_s * std::pow(std::sqrt(kPi) / src.ell_s / kTwoPi, d);
  const double shear = s.z / ko;
  auto sinc = [](double a) { return std::abs(a) < 1e-8 ? 1.0 - a * a / 6.0 : std::sin(a) / a; };
  auto conj_node = [&](int a, int j) { return (j - fa[a].n / 2) * dual[a]; };

  // Everything but the exponent factorizes over t and over the (y'_i, q_i)
  // pairs. Bin averages are box filters, i.e. sinc factors on the conjugate
  // side; the shift phases put bin centres on transform nodes. The sign
  // (-1)^j centres each transform.
  std::vector<cplx> f_t(fa[0].n);
  for (int j = 0; j < fa[0].n; ++j) {
    const double t = conj_node(0, j);
    f_t[j] = ((j % 2 == 0) ? pre : -pre) * std::exp(-t * t / (4.0 * src.T_s * src.T_s)) *
             sinc(0.5 * fa[0].w * t) * std::exp(cplx(0.0, t * fa[0].shift));
  }
  std::vector<std::vector<cplx>> f_yq(d), twiddle(d);
  for (int i = 0; i < d; ++i) {
    const BinAxis &ak = fa[1 + i], &ax = fa[1 + d + i];
    f_yq[i].resize(static_cast<std::size_t>(ak.n) * ax.n);
    twiddle[i].resize(static_cast<std::size_t>(ak.n) * ax.n);
    for (int j = 0; j < ak.n; ++j)
      for (int l = 0; l < ax.n; ++l) {
        // reversed y so that a single +i transform serves every axis
        const double cy = conj_node(1 + i, j), yp = -cy, q = conj_node(1 + d + i, l);
        const double sgn = ((j + l) % 2 == 0) ? 1.0 : -1.0;
        f_yq[i][static_cast<std::size_t>(j) * ax.n + l] =
            sgn * std::exp(-yp * yp / (4.0 * src.ell_s * src.ell_s) - 0.5 * g.sigma_x * g.sigma_x * q * q) *
            sinc(0.5 * ak.w * (yp + q * shear)) * sinc(0.5 * ax.w * q) *
            std::exp(cplx(0.0, cy * ak.shift + q * ax.shift));
        twiddle[i][static_cast<std::size_t>(j) * ax.n + l] = std::exp(cplx(0.0, -shear * ak.node(j) * q));
      }
  }
  auto next = [&](std::vector<int>& idx) {
    for (int a = static_cast<int>(fa.size()) - 1; a >= 0; --a) {
      if (++idx[a] < fa[a].n) return;
      idx[a] = 0;
    }
  };
  auto unflatten = [&](std::size_t f, std::vector<int>& idx) {
    for (int a = static_cast<int>(fa.size()) - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(f % fa[a].n);
      f /= fa[a].n;
    }
  };
  auto pair_index = [&](const std::vector<int>& idx, int i) {
    return static_cast<std::size_t>(idx[1 + i]) * fa[1 + d + i].n + idx[1 + d + i];
  };

  std::vector<cplx> data(total);
  parallel_for(total, threads, [&](std::size_t lo, std::size_t hi) {
    std::vector<int> idx(fa.size());
    unflatten(lo, idx);
    Vec y(d), q(d);
    for (std::size_t f = lo; f < hi; ++f, next(idx)) {
      cplx val = f_t[idx[0]];
      for (int i = 0; i < d; ++i) val *= f_yq[i][pair_index(idx, i)];
      if (std::abs(val) < 1e-300) {
        data[f] = 0.0;
        continue;
      }
      for (int i = 0; i < d; ++i) {
        q(i) = conj_node(1 + d + i, idx[1 + d + i]);
        y(i) = -conj_node(1 + i, idx[1 + i]) + q(i) * shear;
      }
      data[f] = val * std::exp(expo(conj_node(0, idx[0]), y, q));
    }
  });

  // (t, y') -> (omega, k), undo the shear, then q -> x.
  std::vector<int> first_axes, last_axes;
  for (int a = 0; a <= d; ++a) first_axes.push_back(a);
  for (int a = 1 + d; a <= 2 * d; ++a) last_axes.push_back(a);
  fft_backward_axes(data, dims, first_axes);
  if (shear != 0.0) {
    parallel_for(total, threads, [&](std::size_t lo, std::size_t hi) {
      std::vector<int> idx(fa.size());
      unflatten(lo, idx);
      for (std::size_t f = lo; f < hi; ++f, next(idx))
        for (int i = 0; i < d; ++i) data[f] *= twiddle[i][pair_index(idx, i)];
    });
  }
  fft_backward_axes(data, dims, last_axes);

  double scale = 1.0;
  for (double h : dual) scale *= h;
  scale /= std::pow(kTwoPi, d);
  int half_sum = 0;
  for (const auto& a : fa) half_sum += a.n / 2;
  double mass = 0.0, wmax = 0.0, wmin = 0.0, boundary = 0.0, absum = 0.0;
  {
    std::vector<int> idx(fa.size(), 0);
    for (std::size_t f = 0; f < total; ++f, next(idx)) {
      int parity = half_sum;
      bool edge = false;
      for (std::size_t a = 0; a < fa.size(); ++a) {
        parity += idx[a];
        edge = edge || idx[a] == 0 || idx[a] == fa[a].n - 1;
      }
      const double v = ((parity % 2 == 0) ? 1.0 : -1.0) * data[f].real() * scale;
      data[f] = v;
      mass += v;
      absum += std::abs(v);
      if (edge) boundary += std::abs(v);
      wmax = std::max(wmax, v);
      wmin = std::min(wmin, v);
    }
  }
  double cell = 1.0;
  for (const auto& a : fa) cell *= a.h;
  res.total_mass = mass * cell;
  res.boundary_fraction = absum > 0.0 ? boundary / absum : 0.0;
  res.min_relative = wmax > 0.0 ? wmin / wmax : 0.0;
  if (res.boundary_fraction > 1e-3)
    throw NumericalError("closed-form solution aliases: boundary mass fraction " +
                         std::to_string(res.boundary_fraction));

  res.field = empty_field(s, g);
  const std::vector<int> shape = res.field.shape();
  std::vector<int> out(shape.size());
  for (std::size_t b = 0; b < res.field.values.size(); ++b) {
    std::size_t r = b, f = 0, stride = 1;
    for (int a = static_cast<int>(shape.size()) - 1; a >= 0; --a) {
      out[a] = static_cast<int>(r % shape[a]);
      r /= shape[a];
    }
    for (int a = static_cast<int>(fa.size()) - 1; a >= 0; --a) {
      f += static_cast<std::size_t>(fa[a].first + out[a] * fa[a].m) * stride;
      stride *= fa[a].n;
    }
    res.field.values[b] = data[f].real();
  }
  res.field.metadata["solver"] = "closed_form";
  res.field.metadata["fft_shape"] = res.fft_shape;
  return res;
}

JumpSampler::JumpSampler(const MediumStats& stats, int d) : stats_(&stats), d_(d) {
  gaussian_ = dynamic_cast<const GaussianCovariance*>(stats.model.get()) != nullptr;
  const double T = stats.T_corr, l = stats.ell;
  if (gaussian_) {
    sd_omega_ = 1.0 / T;
    sd_k_ = 1.0 / l;
    return;
  }
  // Envelope: Gaussian with the kernel's second moments, widened by 1.5,
  // on the box where the kernel exceeds 1e-12 of its peak.
  const TaylorCoeffs tc = taylor_coeffs(stats, 1.0);
  sd_omega_ = 1.5 * std::sqrt(tc.alpha_o / tc.R00) / T;
  sd_k_ = 1.5 * std::sqrt(tc.vartheta_o / tc.R00) / l;
  box_omega_ = spectral_cutoff(*stats.model, d + 1, true, 1e-12) / T;
  box_k_ = spectral_cutoff(*stats.model, d + 1, false, 1e-12) / l;
  const int n = 41;
  double worst = 0.0;
  Vec q = Vec::Zero(d + 1);
  std::vector<int> idx(d + 1, 0);
  while (true) {
    const double om = box_omega_ * (2.0 * idx[0] / (n - 1) - 1.0);
    double env = std::exp(-0.5 * om * om / (sd_omega_ * sd_omega_));
    for (int i = 0; i < d; ++i) {
      const double k = box_k_ * (2.0 * idx[1 + i] / (n - 1) - 1.0);
      q(i) = l * k;
      env *= std::exp(-0.5 * k * k / (sd_k_ * sd_k_));
    }
    worst = std::max(worst, stats.model->spectral_density(T * om, q) / env);
    int k = 0;
    while (k <= d && ++idx[k] == n) idx[k++] = 0;
    if (k > d) break;
  }
  bound_ = 1.1 * worst;
  // kernel mass over envelope mass, ignoring the box truncation
  const double kernel = std::pow(kTwoPi, d + 1) * tc.R00 / (T * std::pow(l, d));
  const double env = std::pow(kTwoPi, 0.5 * (d + 1)) * sd_omega_ * std::pow(sd_k_, d);
  acceptance_ = kernel / (bound_ * env);
}

void JumpSampler::draw(std::mt19937_64& rng, double& omega_p, Vec& k_p) const {
  std::normal_distribution<double> nrm;
  k_p.resize(d_);
  if (gaussian_) {
    omega_p = sd_omega_ * nrm(rng);
    for (int i = 0; i < d_; ++i) k_p(i) = sd_k_ * nrm(rng);
    return;
  }
  std::uniform_real_distribution<double> uni;
  const double T = stats_->T_corr, l = stats_->ell;
  Vec q = Vec::Zero(d_ + 1);
  while (true) {
    omega_p = sd_omega_ * nrm(rng);
    if (std::abs(omega_p) > box_omega_) continue;
    double env = std::exp(-0.5 * omega_p * omega_p / (sd_omega_ * sd_omega_));
    bool inside = true;
    for (int i = 0; i < d_; ++i) {
      k_p(i) = sd_k_ * nrm(rng);
      inside = inside && std::abs(k_p(i)) <= box_k_;
      q(i) = l * k_p(i);
      env *= std::exp(-0.5 * k_p(i) * k_p(i) / (sd_k_ * sd_k_));
    }
    if (!inside) continue;
    if (uni(rng) * bound_ * env <= stats_->model->spectral_density(T * omega_p, q)) return;
  }
}

namespace {

constexpr std::uint64_t kBlock = 1 << 14;

struct Walker {
  const Scenario& s;
  double Sigma;
  double sigma_x;
  JumpSampler sampler;

  Walker(const Scenario& sc, double sx)
      : s(sc), Sigma(total_cross_section_paraxial(sc.medium, sc.wn)), sigma_x(sx),
        sampler(sc.medium, sc.d) {}

  Particle run(std::mt19937_64& rng) const {
    std::normal_distribution<double> nrm;
    std::exponential_distribution<double> expo(Sigma > 0.0 ? Sigma : 1.0);
    const int d = s.d;
    const double ko = s.wn.k_o;
    Particle p;
    p.omega = nrm(rng) / (std::sqrt(2.0) * s.source.T_s);
    p.k.resize(d);
    p.x.resize(d);
    for (int i = 0; i < d; ++i) p.k(i) = nrm(rng) / (std::sqrt(2.0) * s.source.ell_s);
    for (int i = 0; i < d; ++i) p.x(i) = sigma_x * nrm(rng);
    double zc = 0.0;
    double wp;
    Vec kp(d);
    while (true) {
      const double step = Sigma > 0.0 ? expo(rng) : INFINITY;
      if (zc + step >= s.z) {
        p.x += p.k / ko * (s.z - zc);
        break;
      }
      p.x += p.k / ko * step;
      zc += step;
      sampler.draw(rng, wp, kp);
      p.omega += wp + kp.dot(s.flow.v_perp);
      p.k += kp;
      ++p.jumps;
    }
    return p;
  }
};

}  // namespace

std::vector<Particle> simulate_particles(const Scenario& s, std::uint64_t n, std::uint64_t seed) {
  require_pulse(s);
  const PhaseSpaceGrid g = output_grid(s);
  const Walker w(s, g.sigma_x);
  std::vector<Particle> out;
  out.reserve(n);
  for (std::uint64_t b = 0; b * kBlock < n; ++b) {
    auto rng = substream(seed, b);
    for (std::uint64_t i = b * kBlock; i < std::min(n, (b + 1) * kBlock); ++i) out.push_back(w.run(rng));
  }
  return out;
}

PropagationResult propagate_monte_carlo(const Scenario& s, std::uint64_t n_particles,
                                        std::uint64_t seed, int threads) {
  if (n_particles == 0) throw ArgumentError("n_particles must be at least 1");
  require_pulse(s);
  threads = resolve_threads(threads);
  const PhaseSpaceGrid g = output_grid(s);
  const Walker walker(s, g.sigma_x);
  PropagationResult res;
  res.field = empty_field(s, g);
  const std::size_t ncell = res.field.cells();
  const std::uint64_t nblocks = (n_particles + kBlock - 1) / kBlock;
  const int d = s.d;

  struct Tally {
    std::vector<std::uint64_t> counts;
    std::uint64_t jumps = 0, jumps2 = 0, outside = 0;
  };
  std::vector<Tally> tallies(threads);
  std::atomic<std::uint64_t> next{0};
  auto work = [&](int tid) {
    Tally& tl = tallies[tid];
    tl.counts.assign(ncell, 0);
    std::vector<int> idx(2 * d + 1);
    while (true) {
      const std::uint64_t b = next.fetch_add(1);
      if (b >= nblocks) break;
      auto rng = substream(seed, b);
      const std::uint64_t end = std::min(n_particles, (b + 1) * kBlock);
      for (std::uint64_t i = b * kBlock; i < end; ++i) {
        const Particle p = walker.run(rng);
        tl.jumps += p.jumps;
        tl.jumps2 += static_cast<std::uint64_t>(p.jumps) * p.jumps;
        idx[0] = g.omega.locate(p.omega);
        bool in = idx[0] >= 0;
        for (int j = 0; j < d && in; ++j) {
          idx[1 + j] = g.k[j].locate(p.k(j));
          idx[1 + d + j] = g.x[j].locate(p.x(j));
          in = idx[1 + j] >= 0 && idx[1 + d + j] >= 0;
        }
        if (in) ++tl.counts[res.field.flat_index(idx)];
        else ++tl.outside;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(work, t);
  work(0);
  for (auto& th : pool) th.join();

  std::vector<std::uint64_t> counts(ncell, 0);
  std::uint64_t jumps = 0, jumps2 = 0;
  for (const auto& tl : tallies) {
    for (std::size_t i = 0; i < ncell; ++i) counts[i] += tl.counts[i];
    jumps += tl.jumps;
    jumps2 += tl.jumps2;
    res.outside += tl.outside;
  }
  const double N = static_cast<double>(n_particles);
  const double M = initial_mass(s);
  const double vol = res.field.cell_volume();
  res.field.errors.assign(ncell, 0.0);
  for (std::size_t i = 0; i < ncell; ++i) {
    const double c = static_cast<double>(counts[i]);
    res.field.values[i] = M * c / (N * vol);
    res.field.errors[i] = M * std::sqrt(c * (1.0 - c / N)) / (N * vol);
  }
  res.total_mass = M;
  res.mean_jumps = static_cast<double>(jumps) / N;
  const double var = static_cast<double>(jumps2) / N - res.mean_jumps * res.mean_jumps;
  res.jump_stderr = std::sqrt(std::max(var, 0.0) / N);
  res.field.metadata["solver"] = "monte_carlo";
  res.field.metadata["particles"] = n_particles;
  res.field.metadata["seed"] = seed;
  return res;
}

}  // namespace mrt
