#include "mrt/coherence.hpp"

#include "mrt/kernels.hpp"

#include <cmath>

namespace mrt {

namespace {

void require_range(double z) {
  if (!(z > 0.0) || !std::isfinite(z)) throw ArgumentError("range z must be positive and finite");
}

// Precision matrix of the quadratic exponent over (t, xi, q) and the
// amplitude sigma^2 ell_s^d pi^(d/2) / (4 k_o (2 pi)^d).
struct HarmonicForm {
  Eigen::MatrixXd P;
  double pre = 0.0;
};

HarmonicForm harmonic_form(const Scenario& s, double z) {
  const int d = s.d;
  const TaylorCoeffs tc = taylor_coeffs(s.medium, s.wn.k_o);
  const double ko = s.wn.k_o, l2 = s.medium.ell * s.medium.ell, T = s.medium.T_corr;
  const double a = s.medium.frozen() ? 0.0 : tc.alpha * z / (T * T);
  const double b = tc.vartheta * z / l2;              // |xi - v t|^2
  const double c = tc.vartheta * z * z / (2.0 * l2 * ko);  // (xi - v t).q cross term
  const double e = tc.vartheta * z * z * z / (3.0 * l2 * ko * ko);
  const double ls = s.source.ell_s;
  const Vec& v = s.flow.v_perp;
  HarmonicForm f;
  f.P = Eigen::MatrixXd::Zero(2 * d + 1, 2 * d + 1);
  f.P(0, 0) = a + b * v.squaredNorm();
  for (int i = 0; i < d; ++i) {
    const int xi = 1 + i, qi = 1 + d + i;
    f.P(xi, xi) = b + 1.0 / (2.0 * ls * ls);
    f.P(qi, qi) = e;
    f.P(xi, qi) = f.P(qi, xi) = c;
    f.P(0, xi) = f.P(xi, 0) = -b * v(i);
    f.P(0, qi) = f.P(qi, 0) = -c * v(i);
  }
  f.pre = s.source.sigma * s.source.sigma * std::pow(ls, d) * std::pow(kPi, 0.5 * d) /
          (4.0 * ko * std::pow(kTwoPi, d));
  return f;
}

}  // namespace

CoherenceParams coherence_params(const Scenario& s, double z) {
  require_range(z);
  const TaylorCoeffs tc = taylor_coeffs(s.medium, s.wn.k_o);
  const double ko = s.wn.k_o, ls = s.source.ell_s, l = s.medium.ell;
  CoherenceParams p;
  p.z = z;
  p.k_o = ko;
  p.v = s.flow.v_perp;
  p.T_z = s.medium.frozen() ? INFINITY : s.medium.T_corr / std::sqrt(tc.alpha * z);
  p.D_z = l / std::sqrt(tc.vartheta * z);
  p.u = tc.vartheta * z * (ls / l) * (ls / l);
  const double u = p.u;
  p.R_z = z / (std::sqrt(2.0) * ls * ko) * std::sqrt(1.0 + 2.0 * u / 3.0);
  p.D_1z = 2.0 * p.D_z * std::sqrt(3.0 * (1.0 + u / 6.0));
  p.D_2z = p.D_z * std::sqrt((1.0 + 2.0 * u / 3.0) / (1.0 + u / 6.0));
  p.H_z = 1.0 - 1.0 / (2.0 * (1.0 + u / 6.0));
  p.z_star = (l / ls) * (l / ls) / tc.vartheta;
  p.amplitude = s.source.sigma * s.source.sigma * std::pow(ls, s.d) /
                (std::pow(2.0, 2.0 + 0.5 * s.d) * ko * std::pow(p.R_z, s.d));
  p.phase_dx = ko * (1.0 + u) / (z * (1.0 + 2.0 * u / 3.0));
  p.phase_dt = ko * u / (z * (1.0 + 2.0 * u / 3.0));

  // Aperture-dependent parameters; u / D_z^2 style ratios are written via u
  // so that a vanishing medium gives finite limits.
  const double X = std::pow(s.array.kappa / ko, 2);
  const double Y = std::pow(z / (ko * ls), 2);
  const double Dz2_inv = tc.vartheta * z / (l * l);
  p.A_z = 0.5 * std::sqrt(X + Y * (1.0 + 2.0 * u / 3.0));
  p.m_z = std::sqrt(8.0 / (1.0 + 2.0 * Dz2_inv / 3.0 * Y * (1.0 + u / 2.0) +
                           X / (ls * ls) * (1.0 + 2.0 * u) + Y / X * (1.0 + 2.0 * u / 3.0)));
  p.s_z = p.m_z * p.m_z * Dz2_inv / 4.0 * (X + 0.5 * Y * (1.0 + u / 3.0));
  p.q_z = (X + Y * (1.0 + u / 6.0)) / (2.0 * X + Y * (1.0 + u / 3.0));
  const double den = p.s_z * (p.q_z - 0.5 * p.s_z);
  // a non-positive denominator means the t|v| term never limits the window
  p.n_z = den > 0.0 ? p.m_z / std::sqrt(den) : INFINITY;
  return p;
}

double strong_scattering_ratio(const Scenario& s, double z) {
  return total_cross_section_paraxial(s.medium, s.wn) * z;
}

std::vector<std::string> coherence_warnings(const Scenario& s, double z) {
  std::vector<std::string> w;
  const double r = strong_scattering_ratio(s, z);
  if (r < 10.0)
    w.push_back("Sigma_par z = " + std::to_string(r) +
                " is not large; the time-harmonic formulas assume an incoherent wave");
  return w;
}

double wigner_time_harmonic(const Scenario& s, double omega, const Vec& k, const Vec& x, double z,
                            HarmonicMethod method) {
  require_range(z);
  const int d = s.d;
  const HarmonicForm f = harmonic_form(s, z);
  Eigen::VectorXd c(2 * d + 1);
  c(0) = omega;
  for (int i = 0; i < d; ++i) {
    c(1 + i) = -k(i);
    c(1 + d + i) = x(i) - k(i) * z / s.wn.k_o;
  }
  const Eigen::VectorXd b = Eigen::VectorXd::Zero(2 * d + 1);
  if (method == HarmonicMethod::closed) return f.pre * gaussian_fourier_exact(f.P, b, c).real();

  int order = s.solver.hermite_order;
  double prev = gaussian_fourier_hermite(f.P, b, c, order).real();
  for (int refine = 0; refine < 3; ++refine) {
    const double next = gaussian_fourier_hermite(f.P, b, c, order + 20).real();
    if (std::abs(next - prev) <= 1e-12 * std::abs(next) + 1e-300) return f.pre * next;
    prev = next;
    order += 20;
  }
  throw NumericalError("Gauss-Hermite rule did not converge for the time-harmonic Wigner transform");
}

cplx coherence_function(const CoherenceParams& p, int d, double dt, const Vec& dx, const Vec& x) {
  double e = -dt * dt / (2.0 * p.T_z * p.T_z) - x.squaredNorm() / (2.0 * p.R_z * p.R_z) -
             dx.squaredNorm() / (2.0 * p.D_1z * p.D_1z) -
             (p.H_z * dx - p.v.head(d) * dt).squaredNorm() / (2.0 * p.D_2z * p.D_2z);
  const double phi = x.dot(p.phase_dx * dx - p.phase_dt * dt * p.v.head(d));
  return p.amplitude * std::exp(cplx(e, phi));
}

cplx coherence_function(const Scenario& s, double dt, const Vec& dx, const Vec& x, double z) {
  return coherence_function(coherence_params(s, z), s.d, dt, dx, x);
}

cplx coherence_quadrature(const Scenario& s, double dt, const Vec& dx, const Vec& x, double z,
                          int order) {
  require_range(z);
  const int d = s.d, n = 2 * d + 1;
  const HarmonicForm f = harmonic_form(s, z);
  // (t, xi, q) = x0 + G q with t = dt and xi = dx - q z / k_o
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
  x0(0) = dt;
  for (int i = 0; i < d; ++i) x0(1 + i) = dx(i);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, d);
  for (int i = 0; i < d; ++i) {
    G(1 + i, i) = -z / s.wn.k_o;
    G(1 + d + i, i) = 1.0;
  }
  const Eigen::MatrixXd Pq = G.transpose() * f.P * G;
  const Eigen::VectorXd bq = -G.transpose() * f.P * x0;
  const Eigen::VectorXd cq = x.head(d);
  const double base = -0.5 * x0.dot(f.P * x0);
  return f.pre * gaussian_fourier_hermite(Pq, bq, cq, order, base);
}

}  // namespace mrt
