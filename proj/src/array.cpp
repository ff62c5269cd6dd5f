#include "mrt/array.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <functional>

namespace mrt {

namespace {

double taper_precision(const ArraySpec& a, double k_o) {
  // exp(-k_o^2 |dx|^2 / (4 kappa^2)) = exp(-p |dx|^2 / 2)
  return k_o * k_o / (2.0 * a.kappa * a.kappa);
}

void require_aperture(const ArraySpec& a) {
  if (!(a.kappa > 0.0)) throw ArgumentError("array kappa must be positive");
}

// Visits every multi-index of a (d+1)-dimensional grid with n points per axis.
template <class F>
void for_each_index(int dims, int n, F&& f) {
  std::vector<int> idx(dims, 0);
  std::size_t flat = 0;
  while (true) {
    f(idx, flat++);
    int k = dims - 1;
    while (k >= 0 && ++idx[k] == n) idx[k--] = 0;
    if (k < 0) break;
  }
}

}  // namespace

ClosedFormCoherence::ClosedFormCoherence(const Scenario& s, double z)
    : p_(coherence_params(s, z)), d_(s.d) {}

cplx ClosedFormCoherence::value(double dt, const Vec& dx, const Vec& x) const {
  return coherence_function(p_, d_, dt, dx, x);
}

Eigen::MatrixXd ClosedFormCoherence::envelope_precision() const {
  const int d = d_;
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(2 * d + 1, 2 * d + 1);
  const double iT2 = 1.0 / (p_.T_z * p_.T_z), iD1 = 1.0 / (p_.D_1z * p_.D_1z),
               iD2 = 1.0 / (p_.D_2z * p_.D_2z), iR = 1.0 / (p_.R_z * p_.R_z);
  P(0, 0) = iT2 + p_.v.head(d).squaredNorm() * iD2;
  for (int i = 0; i < d; ++i) {
    P(1 + i, 1 + i) = iD1 + p_.H_z * p_.H_z * iD2;
    P(0, 1 + i) = P(1 + i, 0) = -p_.H_z * p_.v(i) * iD2;
    P(1 + d + i, 1 + d + i) = iR;
  }
  return P;
}

QuadratureCoherence::QuadratureCoherence(const Scenario& s, double z, int order)
    : s_(s), z_(z), order_(order), envelope_(s, z) {}

cplx QuadratureCoherence::value(double dt, const Vec& dx, const Vec& x) const {
  return coherence_quadrature(s_, dt, dx, x, z_, order_);
}

std::size_t LagTable::size() const {
  return static_cast<std::size_t>(t.n) * static_cast<std::size_t>(std::pow(dx.n, d));
}

std::size_t SpectralTable::size() const {
  return static_cast<std::size_t>(omega.n) * static_cast<std::size_t>(std::pow(k.n, d));
}

double SpectralTable::max_value() const { return *std::max_element(values.begin(), values.end()); }

LagTable tabulate_coherence(const CoherenceProvider& c, const Vec& x, CenteredGrid t, CenteredGrid dx) {
  LagTable tab;
  tab.d = c.dim();
  tab.k_o = c.k_o();
  tab.x = x;
  tab.t = t;
  tab.dx = dx;
  tab.values.resize(tab.size());
  const int d = tab.d;
  Vec lag(d);
  std::size_t f = 0;
  for (int j = 0; j < t.n; ++j)
    for_each_index(d, dx.n, [&](const std::vector<int>& idx, std::size_t) {
      for (int i = 0; i < d; ++i) lag(i) = dx.node(idx[i]);
      tab.values[f++] = c.value(t.node(j), lag, x);
    });
  return tab;
}

cplx TabulatedCoherence::value(double dt, const Vec& dx, const Vec&) const {
  const auto& T = table_;
  const int d = T.d;
  auto frac = [](const CenteredGrid& g, double v, int& i0, double& w) {
    const double f = v / g.h + g.n / 2;
    i0 = static_cast<int>(std::floor(f));
    w = f - i0;
    if (i0 == g.n - 1 && w < 1e-12) {  // last node
      --i0;
      w = 1.0;
    }
    return i0 >= 0 && i0 + 1 < g.n;
  };
  int it;
  double wt;
  if (!frac(T.t, dt, it, wt)) return 0.0;
  std::vector<int> ix(d);
  std::vector<double> wx(d);
  for (int i = 0; i < d; ++i)
    if (!frac(T.dx, dx(i), ix[i], wx[i])) return 0.0;
  cplx sum = 0.0;
  for (int corner = 0; corner < (1 << (d + 1)); ++corner) {
    double w = (corner & 1) ? wt : 1.0 - wt;
    std::size_t flat = static_cast<std::size_t>(it + (corner & 1));
    for (int i = 0; i < d; ++i) {
      const int bit = (corner >> (i + 1)) & 1;
      w *= bit ? wx[i] : 1.0 - wx[i];
      flat = flat * T.dx.n + ix[i] + bit;
    }
    sum += w * T.values[flat];
  }
  return sum;
}

Eigen::MatrixXd TabulatedCoherence::envelope_precision() const {
  throw NumericalError("tabulated coherence has no Gaussian envelope; use the FFT route");
}

double estimate_wigner(const CoherenceProvider& c, const ArraySpec& a, double omega, const Vec& k,
                       const Vec& x, int order) {
  require_aperture(a);
  const int d = c.dim(), m = d + 1;
  const double ko = c.k_o();
  const Eigen::MatrixXd P = c.envelope_precision();
  const Eigen::MatrixXd Pll = P.topLeftCorner(m, m);
  const Eigen::VectorXd b = -P.block(0, m, m, d) * x.head(d);
  Eigen::MatrixXd W = Pll;
  for (int i = 0; i < d; ++i) W(1 + i, 1 + i) += taper_precision(a, ko);
  Vec dx(d);
  auto f = [&](const Eigen::VectorXd& l) {
    for (int i = 0; i < d; ++i) dx(i) = l(1 + i);
    const double phase = omega * l(0) - k.head(d).dot(dx);
    const double undo = 0.5 * l.dot(Pll * l) - b.dot(l);
    return c.value(l(0), dx, x) * std::exp(cplx(undo, phase));
  };
  const double pre = std::exp(-ko * ko * (x.head(d) - a.center.head(d)).squaredNorm() / (a.kappa * a.kappa));
  return pre * gaussian_weighted_integral(W, b, f, order).real();
}

SpectralTable estimate_wigner_fft(const LagTable& c, const ArraySpec& a, bool check_truncation) {
  require_aperture(a);
  const int d = c.d;
  const std::size_t total = c.size();
  const double p = taper_precision(a, c.k_o);
  std::vector<int> dims{c.t.n};
  for (int i = 0; i < d; ++i) dims.push_back(c.dx.n);

  std::vector<cplx> data(total);
  double cmax = 0.0, edge = 0.0;
  std::size_t f = 0;
  for (int j = 0; j < c.t.n; ++j)
    for_each_index(d, c.dx.n, [&](const std::vector<int>& idx, std::size_t) {
      // dx axes are reversed so that one +i transform serves every axis
      std::size_t src = static_cast<std::size_t>(j);
      double r2 = 0.0;
      int parity = j;
      bool boundary = j == 0 || j == c.t.n - 1;
      for (int i = 0; i < d; ++i) {
        const int rev = (c.dx.n - idx[i]) % c.dx.n;
        src = src * c.dx.n + rev;
        r2 += c.dx.node(idx[i]) * c.dx.node(idx[i]);
        parity += idx[i];
        boundary = boundary || idx[i] == 0 || idx[i] == c.dx.n - 1;
      }
      const cplx v = c.values[src] * std::exp(-0.5 * p * r2);
      cmax = std::max(cmax, std::abs(v));
      if (boundary) edge = std::max(edge, std::abs(v));
      data[f++] = (parity % 2 == 0) ? v : -v;
    });
  if (check_truncation && edge > 1e-6 * cmax)
    throw NumericalError("lag box truncates the coherence (edge/peak = " + std::to_string(edge / cmax) + ")");

  fft_backward_inplace(data, dims);

  SpectralTable out;
  out.d = d;
  out.k_o = c.k_o;
  out.x = c.x;
  out.omega = c.t.dual();
  out.k = c.dx.dual();
  out.values.resize(total);
  const double pre = std::exp(-c.k_o * c.k_o * (c.x.head(d) - a.center.head(d)).squaredNorm() /
                              (a.kappa * a.kappa));
  const double scale = pre * c.t.h * std::pow(c.dx.h, d);
  int half = c.t.n / 2 + d * (c.dx.n / 2);
  f = 0;
  for (int j = 0; j < c.t.n; ++j)
    for_each_index(d, c.dx.n, [&](const std::vector<int>& idx, std::size_t) {
      int parity = half + j;
      for (int i = 0; i < d; ++i) parity += idx[i];
      out.values[f] = ((parity % 2 == 0) ? 1.0 : -1.0) * data[f].real() * scale;
      ++f;
    });
  return out;
}

double estimate_wigner_smoothing(const Scenario& s, const ArraySpec& a, double omega, const Vec& k,
                                 const Vec& x, double z, double tol) {
  require_aperture(a);
  using boost::math::quadrature::gauss_kronrod;
  const int d = s.d;
  const double ko = s.wn.k_o;
  const double g = a.kappa * a.kappa / (ko * ko);
  // W is narrow in K next to the kernel, so Hermite nodes scaled to the
  // kernel converge slowly; GK adapts to both widths.
  Vec kk = k.head(d);
  std::function<double(int)> integrate = [&](int axis) -> double {
    if (axis == d) return wigner_time_harmonic(s, omega, kk, x, z, HarmonicMethod::closed);
    auto f = [&](double K) {
      kk(axis) = k(axis) + K;
      return std::exp(-g * K * K) * integrate(axis + 1);
    };
    const double half = 12.0 / std::sqrt(g);
    return gauss_kronrod<double, 61>::integrate(f, -half, half, 12, tol);
  };
  const double pre = std::pow(g / kPi, 0.5 * d) *
                     std::exp(-ko * ko * (x.head(d) - a.center.head(d)).squaredNorm() / (a.kappa * a.kappa));
  return pre * integrate(0);
}

LagTable coherence_from_spectrum(const SpectralTable& w) {
  const int d = w.d;
  LagTable out;
  out.d = d;
  out.k_o = w.k_o;
  out.x = w.x;
  out.t = w.omega.dual();
  out.dx = w.k.dual();
  const std::size_t total = w.size();
  std::vector<int> dims{w.omega.n};
  for (int i = 0; i < d; ++i) dims.push_back(w.k.n);
  std::vector<cplx> data(total);
  std::size_t f = 0;
  const std::size_t kcells = total / w.omega.n;
  for (int a = 0; a < w.omega.n; ++a) {
    const int rev = (w.omega.n - a) % w.omega.n;  // exp(-i omega t) via reversed omega
    for_each_index(d, w.k.n, [&](const std::vector<int>& idx, std::size_t kf) {
      int parity = a;
      for (int i = 0; i < d; ++i) parity += idx[i];
      const double v = w.values[static_cast<std::size_t>(rev) * kcells + kf];
      data[f++] = (parity % 2 == 0) ? v : -v;
    });
  }
  fft_backward_inplace(data, dims);
  const double scale = w.omega.h * std::pow(w.k.h, d) / std::pow(kTwoPi, d + 1);
  const int half = w.omega.n / 2 + d * (w.k.n / 2);
  out.values.resize(total);
  f = 0;
  for (int j = 0; j < out.t.n; ++j)
    for_each_index(d, out.dx.n, [&](const std::vector<int>& idx, std::size_t) {
      int parity = half + j;
      for (int i = 0; i < d; ++i) parity += idx[i];
      out.values[f] = ((parity % 2 == 0) ? 1.0 : -1.0) * data[f] * scale;
      ++f;
    });
  return out;
}

std::vector<double> doa_image(const CoherenceProvider& c, const ArraySpec& a,
                              const std::vector<Vec>& k_nodes, int order) {
  require_aperture(a);
  const int d = c.dim();
  const double ko = c.k_o();
  const Eigen::MatrixXd P = c.envelope_precision();
  const Eigen::MatrixXd Pdd = P.block(1, 1, d, d);
  const Vec xo = a.center.head(d);
  const Eigen::VectorXd b = -P.block(1, 1 + d, d, d) * xo;
  Eigen::MatrixXd W = Pdd;
  for (int i = 0; i < d; ++i) W(i, i) += taper_precision(a, ko);
  std::vector<double> out;
  out.reserve(k_nodes.size());
  Vec dx(d);
  for (const Vec& k : k_nodes) {
    auto f = [&](const Eigen::VectorXd& l) {
      for (int i = 0; i < d; ++i) dx(i) = l(i);
      const double undo = 0.5 * l.dot(Pdd * l) - b.dot(l);
      return c.value(0.0, dx, xo) * std::exp(cplx(undo, -k.head(d).dot(dx)));
    };
    out.push_back(gaussian_weighted_integral(W, b, f, order).real());
  }
  return out;
}

std::vector<double> range_image(const CoherenceProvider& c, const Vec& x_o,
                                const std::vector<double>& t_nodes) {
  const Vec zero = Vec::Zero(c.dim());
  std::vector<double> out;
  out.reserve(t_nodes.size());
  for (double t : t_nodes) out.push_back(std::abs(c.value(t, zero, x_o.head(c.dim()))));
  return out;
}

std::vector<double> velocity_image(const CoherenceProvider& c, const ArraySpec& a, double t,
                                   const std::vector<Vec>& y_nodes, int order) {
  require_aperture(a);
  const int d = c.dim(), m = d + 1;
  const double ko = c.k_o();
  const double g = 2.0 * ko * ko / (a.kappa * a.kappa);  // exp(-k_o^2 |x - x_o|^2 / kappa^2)
  const Eigen::MatrixXd P = c.envelope_precision();
  const Eigen::MatrixXd Pxx = P.bottomRightCorner(d, d);
  const Eigen::MatrixXd Pxl = P.block(m, 0, d, m);
  const Vec xo = a.center.head(d);
  Eigen::MatrixXd W = Pxx + g * Eigen::MatrixXd::Identity(d, d);
  std::vector<double> out;
  out.reserve(y_nodes.size());
  Eigen::VectorXd l(m);
  Vec xv(d);
  l(0) = t;
  for (const Vec& y : y_nodes) {
    for (int i = 0; i < d; ++i) l(1 + i) = y(i);
    const Eigen::VectorXd b_env = -Pxl * l;
    const Eigen::VectorXd b = b_env + g * Eigen::VectorXd(xo);
    auto f = [&](const Eigen::VectorXd& x) {
      for (int i = 0; i < d; ++i) xv(i) = x(i);
      const double undo = 0.5 * x.dot(Pxx * x) - b_env.dot(x);
      return c.value(t, y.head(d), xv) * std::exp(undo);
    };
    const double pre = std::exp(-ko * ko * y.head(d).squaredNorm() / (4.0 * a.kappa * a.kappa) -
                                0.5 * g * xo.squaredNorm());
    out.push_back(pre * std::abs(gaussian_weighted_integral(W, b, f, order)));
  }
  return out;
}

}  // namespace mrt
