#include "mrt/medium.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include <cmath>

namespace mrt {

namespace {

// Composite rule on s in [0, 1) mapped to r = s/(1-s) in [0, inf).
const QuadratureRule& half_line_rule() {
  static const QuadratureRule rule = [] {
    QuadratureRule base = composite_legendre(0.0, 1.0, 24, 16);
    QuadratureRule r;
    for (std::size_t i = 0; i < base.nodes.size(); ++i) {
      const double s = base.nodes[i];
      r.nodes.push_back(s / (1.0 - s));
      r.weights.push_back(base.weights[i] / ((1.0 - s) * (1.0 - s)));
    }
    return r;
  }();
  return rule;
}

double fd4(const std::function<double(double)>& f, double h) {
  return (-f(2 * h) + 16 * f(h) - 30 * f(0.0) + 16 * f(-h) - f(-2 * h)) / (12 * h * h);
}

}  // namespace

double central_second_derivative(const std::function<double(double)>& f, double h) {
  return fd4(f, h);
}

double CovarianceModel::laplacian(double tau, const Vec& r) const {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    sum += fd4(
        [&](double t) {
          Vec x = r;
          x(i) += t;
          return value(tau, x);
        },
        1e-3);
  }
  return sum;
}

double CovarianceModel::bilaplacian(double tau, const Vec& r) const {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    sum += fd4(
        [&](double t) {
          Vec x = r;
          x(i) += t;
          return laplacian(tau, x);
        },
        2e-2);
  }
  return sum;
}

double CovarianceModel::marginal(double tau, const Vec& r_perp) const {
  const auto& rule = half_line_rule();
  Vec r(r_perp.size() + 1);
  r.head(r_perp.size()) = r_perp;
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    r(r_perp.size()) = rule.nodes[i];
    sum += rule.weights[i] * value(tau, r);
  }
  return 2.0 * sum;
}

cplx CovarianceModel::half_space_transform(const Vec& p, SpatialWeight w) const {
  // Isotropy lets the transverse wavevector be rotated onto the first axis;
  // the remaining transverse axis (d = 2) is then even and non-oscillatory.
  const int d = static_cast<int>(p.size()) - 1;
  const double P = p.head(d).norm();
  const double pz = p(d);
  const double R = support_radius();
  const int order = 8;
  auto panels = [&](double freq) {
    return std::max(6, static_cast<int>(std::ceil(R * (std::abs(freq) + 2.0) / 3.0)));
  };
  const QuadratureRule r1 = composite_legendre(0.0, R, panels(P), order);
  const QuadratureRule r2 = composite_legendre(0.0, R, panels(0.0), order);
  const QuadratureRule rz = composite_legendre(0.0, R, panels(pz), order);
  const double nodes = static_cast<double>(r1.nodes.size()) * rz.nodes.size() *
                       (d == 2 ? static_cast<double>(r2.nodes.size()) : 1.0);
  if (nodes > 4e7) throw NumericalError("half-space transform: oscillation too fast for quadrature");

  auto weight_fn = [&](const Vec& r) {
    switch (w) {
      case SpatialWeight::plain: return value(0.0, r);
      case SpatialWeight::laplacian: return laplacian(0.0, r);
      case SpatialWeight::bilaplacian: return bilaplacian(0.0, r);
    }
    return 0.0;
  };
  cplx sum = 0.0;
  Vec r = Vec::Zero(d + 1);
  for (std::size_t a = 0; a < r1.nodes.size(); ++a) {
    r(0) = r1.nodes[a];
    const double c1 = 2.0 * std::cos(P * r(0)) * r1.weights[a];
    const std::size_t n2 = d == 2 ? r2.nodes.size() : 1;
    for (std::size_t b = 0; b < n2; ++b) {
      double c2 = c1;
      if (d == 2) {
        r(1) = r2.nodes[b];
        c2 *= 2.0 * r2.weights[b];
      }
      for (std::size_t c = 0; c < rz.nodes.size(); ++c) {
        r(d) = rz.nodes[c];
        sum += c2 * rz.weights[c] * std::polar(1.0, -pz * r(d)) * weight_fn(r);
      }
    }
  }
  return sum;
}

double GaussianCovariance::value(double tau, const Vec& r) const {
  return std::exp(-0.5 * (tau * tau + r.squaredNorm()));
}

double GaussianCovariance::spectral_density(double Omega, const Vec& q) const {
  const double n = static_cast<double>(q.size());
  return std::pow(kTwoPi, 0.5 * (n + 1.0)) * std::exp(-0.5 * (Omega * Omega + q.squaredNorm()));
}

double GaussianCovariance::laplacian(double tau, const Vec& r) const {
  const double n = static_cast<double>(r.size());
  const double s = r.squaredNorm();
  return (s - n) * value(tau, r);
}

double GaussianCovariance::bilaplacian(double tau, const Vec& r) const {
  const double n = static_cast<double>(r.size());
  const double s = r.squaredNorm();
  return (s * s - 2.0 * (n + 2.0) * s + n * (n + 2.0)) * value(tau, r);
}

double GaussianCovariance::marginal(double tau, const Vec& r_perp) const {
  return std::sqrt(kTwoPi) * std::exp(-0.5 * (tau * tau + r_perp.squaredNorm()));
}

cplx GaussianCovariance::half_space_transform(const Vec& p, SpatialWeight w) const {
  const int d = static_cast<int>(p.size()) - 1;
  const double P2 = p.head(d).squaredNorm();
  const double pz = p(d);
  const double section = std::pow(kTwoPi, 0.5 * d) * std::exp(-0.5 * P2);
  const cplx plain = section * cplx(std::sqrt(kPi / 2.0) * std::exp(-0.5 * pz * pz),
                                    -std::sqrt(2.0) * dawson(pz / std::sqrt(2.0)));
  const double p2 = P2 + pz * pz;
  const cplx i(0.0, 1.0);
  // Half-line integration by parts: the boundary at r_z = 0 contributes the
  // transverse transform of the section through the origin plane.
  switch (w) {
    case SpatialWeight::plain:
      return plain;
    case SpatialWeight::laplacian:
      return -p2 * plain - i * pz * section;
    case SpatialWeight::bilaplacian:
      // section of d^2/dr_z^2 R at r_z = 0 is -section
      return p2 * p2 * plain + i * pz * (p2 + P2) * section + i * pz * section;
  }
  return plain;
}

CauchyCovariance::CauchyCovariance(double nu) : nu_(nu) {
  if (!(nu > 1.5)) throw ConfigError("cauchy covariance requires nu > 3/2");
}

double CauchyCovariance::value(double tau, const Vec& r) const {
  return std::exp(-0.5 * tau * tau) * std::pow(1.0 + r.squaredNorm() / (2.0 * nu_), -nu_);
}

namespace {

// E[S^m (pi/S)^(n/2) exp(-b/S)] for S ~ Gamma(nu, rate 2 nu).
double mixture_moment(double nu, double n, double m, double b) {
  const double a = nu + m - 0.5 * n;
  const double rate = 2.0 * nu;
  const double pre = std::exp(nu * std::log(rate) - std::lgamma(nu)) * std::pow(kPi, 0.5 * n);
  if (b <= 0.0) {
    if (a <= 0.0) throw ModelValidityError("cauchy spectrum diverges at the origin");
    return pre * std::exp(std::lgamma(a) - a * std::log(rate));
  }
  const double x = 2.0 * std::sqrt(rate * b);
  if (x > 700.0) return 0.0;
  return pre * 2.0 * std::pow(b / rate, 0.5 * a) * boost::math::cyl_bessel_k(a, x);
}

}  // namespace

double CauchyCovariance::spectral_density(double Omega, const Vec& q) const {
  const double n = static_cast<double>(q.size());
  return std::sqrt(kTwoPi) * std::exp(-0.5 * Omega * Omega) *
         mixture_moment(nu_, n, 0.0, 0.25 * q.squaredNorm());
}

double CauchyCovariance::radial_derivative(int order, double s) const {
  double c = 1.0;
  for (int j = 0; j < order; ++j) c *= (-nu_ - j) / (2.0 * nu_);
  return c * std::pow(1.0 + s / (2.0 * nu_), -nu_ - order);
}

double CauchyCovariance::laplacian(double tau, const Vec& r) const {
  const double n = static_cast<double>(r.size());
  const double s = r.squaredNorm();
  return std::exp(-0.5 * tau * tau) *
         (4.0 * s * radial_derivative(2, s) + 2.0 * n * radial_derivative(1, s));
}

double CauchyCovariance::bilaplacian(double tau, const Vec& r) const {
  const double n = static_cast<double>(r.size());
  const double s = r.squaredNorm();
  return std::exp(-0.5 * tau * tau) *
         (16.0 * s * s * radial_derivative(4, s) + (32.0 + 16.0 * n) * s * radial_derivative(3, s) +
          (8.0 * n + 4.0 * n * n) * radial_derivative(2, s));
}

cplx CauchyCovariance::half_space_transform(const Vec& p, SpatialWeight w) const {
  const int d = static_cast<int>(p.size()) - 1;
  const double P2 = p.head(d).squaredNorm();
  const double pz = p(d);
  const double p2 = P2 + pz * pz;
  const double re = 0.5 * mixture_moment(nu_, d + 1.0, 0.0, 0.25 * p2);
  double im = 0.0;
  if (pz != 0.0) {
    const double rate = 2.0 * nu_;
    const double lognorm = nu_ * std::log(rate) - std::lgamma(nu_);
    auto f = [&](double s) {
      if (s <= 0.0) return 0.0;
      const double lw = lognorm + (nu_ - 1.0) * std::log(s) - rate * s;
      return std::exp(lw - 0.25 * P2 / s) * std::pow(kPi / s, 0.5 * d) / std::sqrt(s) *
             dawson(0.5 * pz / std::sqrt(s));
    };
    boost::math::quadrature::exp_sinh<double> integrator;
    im = -integrator.integrate(f, 1e-13);
  }
  const cplx plain(re, im);
  if (w == SpatialWeight::plain) return plain;
  // Sections through r_z = 0 of R and of its second r_z derivative
  // (-2 S per mixture component).
  const double section = mixture_moment(nu_, d, 0.0, 0.25 * P2);
  const double section_zz = -2.0 * mixture_moment(nu_, d, 1.0, 0.25 * P2);
  const cplx i(0.0, 1.0);
  if (w == SpatialWeight::laplacian) return -p2 * plain - i * pz * section;
  return p2 * p2 * plain + i * pz * (p2 + P2) * section - i * pz * section_zz;
}

double CauchyCovariance::support_radius() const {
  return std::sqrt(2.0 * nu_) * std::pow(1e12, 1.0 / (2.0 * nu_));
}

std::shared_ptr<const CovarianceModel> make_covariance_model(const std::string& tag, double nu) {
  if (tag == "gaussian") return std::make_shared<GaussianCovariance>();
  if (tag == "cauchy") return std::make_shared<CauchyCovariance>(nu);
  throw ConfigError("unsupported covariance model '" + tag + "'");
}

void MediumStats::validate() const {
  if (!(c_o > 0.0)) throw ConfigError("medium.c0 must be positive");
  if (!(sigma_c >= 0.0)) throw ConfigError("medium.sigma_c must be non-negative");
  if (!(sigma_rho >= 0.0)) throw ConfigError("medium.sigma_rho must be non-negative");
  if (!(ell > 0.0) || std::isinf(ell)) throw ConfigError("medium.ell must be positive and finite");
  if (!(T_corr > 0.0)) throw ConfigError("medium.T_corr must be positive");
  if (!(std::abs(rho_c_corr) <= 1.0)) throw ConfigError("medium.rho_c_corr must lie in [-1, 1]");
  if (!model) throw ConfigError("medium covariance model missing");
}

double covariance_eval(const MediumStats& stats, double tau, const Vec& r) {
  return stats.model->value(tau, r);
}

double psd_eval(const MediumStats& stats, double Omega, const Vec& q) {
  return stats.model->spectral_density(Omega, q);
}

double marginal_covariance(const MediumStats& stats, double tau, const Vec& r_perp) {
  return stats.model->marginal(tau, r_perp);
}

TaylorCoeffs taylor_coeffs(const MediumStats& stats, double k_o, double step) {
  TaylorCoeffs c;
  const auto& m = *stats.model;
  const Vec origin = Vec::Zero(1);
  c.R00 = m.marginal(0.0, origin);
  if (dynamic_cast<const GaussianCovariance*>(&m) != nullptr) {
    c.alpha_o = c.R00;
    c.vartheta_o = c.R00;
  } else {
    c.alpha_o = -central_second_derivative([&](double t) { return m.marginal(t, origin); }, step);
    c.vartheta_o = -central_second_derivative(
        [&](double x) {
          Vec r(1);
          r(0) = x;
          return m.marginal(0.0, r);
        },
        step);
  }
  if (stats.frozen()) c.alpha_o = 0.0;
  if (!(c.vartheta_o > 0.0) || (!stats.frozen() && !(c.alpha_o > 0.0)))
    throw ModelValidityError("covariance curvature at the origin is not negative definite");
  const double scale = stats.sigma_c * stats.sigma_c * stats.ell * k_o * k_o / 4.0;
  c.alpha = c.alpha_o * scale;
  c.vartheta = c.vartheta_o * scale;
  return c;
}

}  // namespace mrt
