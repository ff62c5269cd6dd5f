#include "mrt/kernels.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>

namespace mrt {

namespace {

using boost::math::quadrature::gauss_kronrod;

void require_dynamic(const MediumStats& stats) {
  if (stats.frozen()) throw ConfigError("scattering kernels need a finite correlation time");
}

double adaptive(const std::function<double(double)>& f, double a, double b, double tol) {
  if (b <= a) return 0.0;
  return gauss_kronrod<double, 31>::integrate(f, a, b, 12, tol);
}

// Integral over [a, b] split at breakpoints clustered around `centre` with
// scale `width`, so that narrow peaks are never straddled by a single panel.
double clustered(const std::function<double(double)>& f, double a, double b, double centre,
                 double width, double tol) {
  std::vector<double> pts{a, b};
  for (double c : {0.0, 2.0, 8.0, 32.0}) {
    for (double s : {-1.0, 1.0}) {
      const double x = centre + s * c * width;
      if (x > a && x < b) pts.push_back(x);
    }
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) sum += adaptive(f, pts[i], pts[i + 1], tol);
  return sum;
}

// Integral of g(k') dk' / beta(k') over the disk |k'| < k_o. With
// |k'| = k_o sin(phi) (d = 1) the 1/beta endpoint singularity cancels exactly.
double disk_integral(int d, double k_o, double width, const Vec& k,
                     const std::function<double(const Vec&)>& g, double tol) {
  if (d == 1) {
    const double phik = std::asin(std::clamp(k(0) / k_o, -1.0, 1.0));
    auto f = [&](double phi) {
      Vec kp(1);
      kp(0) = k_o * std::sin(phi);
      return g(kp);
    };
    return clustered(f, -kPi / 2, kPi / 2, phik, width, tol);
  }
  // Polar coordinates about k, where the kernel peaks: k' = k + r e(psi).
  // The angular integrand is periodic and smooth, so the trapezoid rule
  // converges geometrically; the edge tail uses R - r = w^2 against 1/beta.
  const double h = width * k_o;
  const double kk = k.squaredNorm();
  if (!(kk < k_o * k_o)) throw DomainError("evanescent wavevector: |k| >= k_o");
  auto radial = [&](double psi) {
    const double c = std::cos(psi), sn = std::sin(psi);
    const double kd = k(0) * c + k(1) * sn;
    const double R = -kd + std::sqrt(kd * kd + k_o * k_o - kk);
    Vec kp(2);
    auto at = [&](double r) {
      kp << k(0) + r * c, k(1) + r * sn;
      const double b = std::sqrt(std::max(k_o * k_o - kp.squaredNorm(), 0.0));
      return std::pair<double, double>{g(kp), b};
    };
    const double r1 = std::min(64.0 * h, 0.5 * R);
    const double core = clustered([&](double r) {
      const auto [v, b] = at(r);
      return v * r / b;
    }, 0.0, r1, 0.0, h, tol);
    const double tail = adaptive([&](double w) {
      const double r = R - w * w;
      const auto [v, b] = at(r);
      return b > 0.0 ? 2.0 * w * v * r / b : 0.0;
    }, 0.0, std::sqrt(R - r1), tol);
    return core + tail;
  };
  int n = 16;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += radial(kTwoPi * i / n);
  double I = sum * kTwoPi / n;
  while (n < 4096) {
    double add = 0.0;
    for (int i = 0; i < n; ++i) add += radial(kTwoPi * (i + 0.5) / n);
    sum += add;
    n *= 2;
    const double next = sum * kTwoPi / n;
    const bool done = std::abs(next - I) <= tol * std::abs(next);
    I = next;
    if (done) break;
  }
  return I;
}

Vec full_vector(const Vec& k, double beta) {
  Vec out(k.size() + 1);
  out.head(k.size()) = k;
  out(k.size()) = beta;
  return out;
}

}  // namespace

double Wavenumbers::beta(const Vec& k) const {
  const double k2 = k.squaredNorm();
  if (!(k2 < k_o * k_o)) throw DomainError("evanescent wavevector: |k| >= k_o");
  return std::sqrt(k_o * k_o - k2);
}

double dcs_paraxial(const MediumStats& stats, const Wavenumbers& wn, double omega, const Vec& k) {
  require_dynamic(stats);
  const double T = stats.T_corr, l = stats.ell;
  const int d = static_cast<int>(k.size());
  Vec q = Vec::Zero(d + 1);
  q.head(d) = l * k;
  const double pre = wn.k_o * wn.k_o * stats.sigma_c * stats.sigma_c * std::pow(l, d + 1) * T / 4.0;
  return pre * stats.model->spectral_density(T * omega, q);
}

double total_cross_section_paraxial(const MediumStats& stats, const Wavenumbers& wn) {
  const double R00 = stats.model->marginal(0.0, Vec::Zero(1));
  return stats.sigma_c * stats.sigma_c * stats.ell * wn.k_o * wn.k_o * R00 / 4.0;
}

double dcs_full(const MediumStats& stats, const Wavenumbers& wn, const FlowVelocity& flow,
                double omega, double omega_p, const Vec& k, const Vec& k_p) {
  require_dynamic(stats);
  const int d = static_cast<int>(k.size());
  const double b = wn.beta(k), bp = wn.beta(k_p);
  const Vec dk = full_vector(k, b) - full_vector(k_p, bp);
  const Vec v = full_vector(flow.v_perp, flow.v_z);
  const double T = stats.T_corr, l = stats.ell;
  const Vec q = l * dk;
  const double psd = stats.model->spectral_density(T * (omega - omega_p - dk.dot(v)), q);
  const double q2 = q.squaredNorm();
  const double kl2 = std::pow(wn.k_o * l, 2);
  // Transforms of the Laplacian and bi-Laplacian carry -|q|^2 and |q|^4.
  const double bracket = stats.sigma_c * stats.sigma_c * psd +
                         stats.sigma_rho * stats.sigma_rho / (4.0 * kl2 * kl2) * q2 * q2 * psd -
                         stats.sigma_c * stats.sigma_rho * stats.rho_c_corr / kl2 * (-q2 * psd);
  return std::pow(wn.k_o, 4) * std::pow(l, d + 1) * T / (4.0 * b * bp) * bracket;
}

DecayResult mean_amplitude_decay(const MediumStats& stats, const Wavenumbers& wn,
                                 const FlowVelocity& flow, double omega, const Vec& k, double tol) {
  const int d = static_cast<int>(k.size());
  const double b = wn.beta(k);
  const double l = stats.ell;
  const auto& m = *stats.model;
  DecayResult out;
  out.theta = wn.k_o / b * (omega / stats.c_o - flow.v_perp.dot(k) / stats.c_o);
  if (stats.sigma_rho > 0.0) {
    out.theta += stats.sigma_rho * stats.sigma_rho / (8.0 * b * l * l) *
                 m.laplacian(0.0, Vec::Zero(d + 1));
  }
  const double kl2 = std::pow(wn.k_o * l, 2);
  const double pre = -std::pow(wn.k_o, 4) * std::pow(l, d + 1) / 4.0 / std::pow(kTwoPi, d) / b;
  auto bracket = [&](const Vec& kp) {
    const Vec p = l * (full_vector(k, b) - full_vector(kp, wn.beta(kp)));
    cplx v = stats.sigma_c * stats.sigma_c * m.half_space_transform(p, SpatialWeight::plain);
    if (stats.sigma_rho > 0.0) {
      v += stats.sigma_rho * stats.sigma_rho / (4.0 * kl2 * kl2) *
           m.half_space_transform(p, SpatialWeight::bilaplacian);
      if (stats.rho_c_corr != 0.0)
        v -= stats.sigma_c * stats.sigma_rho * stats.rho_c_corr / kl2 *
             m.half_space_transform(p, SpatialWeight::laplacian);
    }
    return v;
  };
  const double width = 1.0 / (wn.k_o * l);
  const double re = disk_integral(d, wn.k_o, width, k, [&](const Vec& kp) { return bracket(kp).real(); }, tol);
  const double im = disk_integral(d, wn.k_o, width, k, [&](const Vec& kp) { return bracket(kp).imag(); }, tol);
  out.D = pre * cplx(re, im);
  if (!(out.D.real() < 0.0) && stats.sigma_c > 0.0)
    throw NumericalError("mean-amplitude decay rate is not negative; quadrature failed");
  out.mean_free_path = -1.0 / out.D.real();
  return out;
}

double spectral_cutoff(const CovarianceModel& model, int n, bool frequency_axis, double rel) {
  Vec q0 = Vec::Zero(n);
  const double peak = model.spectral_density(0.0, q0);
  for (double x = 0.5;; x += 0.5) {
    Vec q = Vec::Zero(n);
    double Om = 0.0;
    if (frequency_axis) Om = x; else q(0) = x;
    if (model.spectral_density(Om, q) < rel * peak) return x;
    if (x > 1e4) throw NumericalError("spectrum does not decay");
  }
}

double integrated_dcs(const MediumStats& stats, const Wavenumbers& wn, const FlowVelocity& flow,
                      double omega, const Vec& k, double tol) {
  require_dynamic(stats);
  const int d = static_cast<int>(k.size());
  const double T = stats.T_corr;
  const double b = wn.beta(k);
  const Vec v = full_vector(flow.v_perp, flow.v_z);
  const double Om = spectral_cutoff(*stats.model, d + 1, true);
  const QuadratureRule om = composite_legendre(-Om, Om, 8, 16);
  auto g = [&](const Vec& kp) {
    const double bp = wn.beta(kp);
    const double shift = (full_vector(k, b) - full_vector(kp, bp)).dot(v);
    double s = 0.0;
    for (std::size_t i = 0; i < om.nodes.size(); ++i) {
      // omega' such that the spectral frequency argument equals the node
      const double omega_p = omega - shift - om.nodes[i] / T;
      s += om.weights[i] / T * dcs_full(stats, wn, flow, omega, omega_p, k, kp);
    }
    return s * bp / std::pow(kTwoPi, d + 1);
  };
  return disk_integral(d, wn.k_o, 1.0 / (wn.k_o * stats.ell), k, g, tol);
}

double integrated_dcs_paraxial(const MediumStats& stats, const Wavenumbers& wn, int d) {
  require_dynamic(stats);
  const double T = stats.T_corr, l = stats.ell;
  const double Om = spectral_cutoff(*stats.model, d + 1, true) / T;
  const double Kc = spectral_cutoff(*stats.model, d + 1, false) / l;
  const QuadratureRule om = composite_legendre(-Om, Om, 8, 16);
  double sum = 0.0;
  if (d == 1) {
    const QuadratureRule kr = composite_legendre(-Kc, Kc, 16, 16);
    for (std::size_t i = 0; i < om.nodes.size(); ++i)
      for (std::size_t j = 0; j < kr.nodes.size(); ++j) {
        Vec k(1);
        k(0) = kr.nodes[j];
        sum += om.weights[i] * kr.weights[j] * dcs_paraxial(stats, wn, om.nodes[i], k);
      }
  } else {
    const QuadratureRule rr = composite_legendre(0.0, Kc, 16, 16);
    const int na = 64;
    for (std::size_t i = 0; i < om.nodes.size(); ++i)
      for (std::size_t j = 0; j < rr.nodes.size(); ++j)
        for (int a = 0; a < na; ++a) {
          const double psi = kTwoPi * a / na;
          Vec k(2);
          k << rr.nodes[j] * std::cos(psi), rr.nodes[j] * std::sin(psi);
          sum += om.weights[i] * rr.weights[j] * rr.nodes[j] * (kTwoPi / na) *
                 dcs_paraxial(stats, wn, om.nodes[i], k);
        }
  }
  return sum / std::pow(kTwoPi, d + 1);
}

RteReport rte_kernel_identity_check(const MediumStats& stats, const Wavenumbers& wn,
                                    const FlowVelocity& flow, const std::vector<RteProbe>& probes,
                                    double tol) {
  RteReport rep;
  const double c = stats.c_o, ko = wn.k_o;
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };
  for (const auto& p : probes) {
    const double b = wn.beta(p.k), bp = wn.beta(p.k_p);
    const Vec kv = full_vector(p.k, b), kvp = full_vector(p.k_p, bp);
    // delta(Omega(k) - Omega(k')) in k_z: 1/|dOmega/dk_z| at the on-shell root,
    // with Omega = c |k|.
    const double jac = kv.norm() / (c * kv(kv.size() - 1));
    const double jac_p = kvp.norm() / (c * kvp(kvp.size() - 1));
    rep.jacobian = std::max({rep.jacobian, rel(jac, ko / (c * b)), rel(jac_p, ko / (c * bp))});

    const double Q = dcs_full(stats, wn, flow, p.omega, p.omega_p, p.k, p.k_p);
    const double S = kTwoPi * c * c / (ko * ko) * b * bp * Q;
    // k'_z integral of S V' with V' = W' delta(k'_z - beta') / beta' and the
    // dk'_z / (2 pi) measure of the three-dimensional equation.
    const double gain = S * jac / bp / kTwoPi;
    const double loss = S * jac_p / b / kTwoPi;
    const double target = c / ko * Q;
    if (target != 0.0) {
      rep.gain = std::max(rep.gain, rel(gain, target));
      rep.loss = std::max(rep.loss, rel(loss, target));
    }
    // grad Omega . grad V on shell reduces to (c/k_o)(d_z - grad beta . grad_x) W
    const Vec grad_omega = c * kv / kv.norm();
    for (Eigen::Index i = 0; i < p.k.size(); ++i) {
      const double grad_beta = -p.k(i) / b;
      rep.streaming = std::max(rep.streaming, rel(grad_omega(i) / b, -c / ko * grad_beta));
    }
    rep.streaming = std::max(rep.streaming, rel(grad_omega(p.k.size()) / b, c / ko));
    ++rep.probes;
  }
  rep.pass = rep.jacobian <= tol && rep.gain <= tol && rep.loss <= tol && rep.streaming <= tol;
  return rep;
}

}  // namespace mrt
