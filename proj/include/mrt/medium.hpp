#pragma once

#include "mrt/common.hpp"
#include "mrt/numerics.hpp"

#include <memory>
#include <string>

namespace mrt {

// Which field is being transformed in the half-space transform used by the
// mean-amplitude exponent: the covariance itself or its (bi)Laplacian in r.
enum class SpatialWeight { plain, laplacian, bilaplacian };

// Isotropic space-time covariance R(tau, r) of a fluctuation field, in
// dimensionless arguments (tau = t/T, r = x/ell). Only value() and
// spectral_density() are mandatory; everything else has a numerical default.
class CovarianceModel {
 public:
  virtual ~CovarianceModel() = default;

  virtual std::string name() const = 0;
  virtual double value(double tau, const Vec& r) const = 0;
  // Fourier transform over (tau, r) with kernel exp(i Omega tau - i q.r).
  virtual double spectral_density(double Omega, const Vec& q) const = 0;

  virtual double laplacian(double tau, const Vec& r) const;
  virtual double bilaplacian(double tau, const Vec& r) const;
  // Integral of R(tau, (r_perp, r_z)) over r_z in R.
  virtual double marginal(double tau, const Vec& r_perp) const;
  // Integral over r_perp in R^d and r_z in [0, inf) of exp(-i p.r) W(0, r),
  // where W is R or its (bi)Laplacian; p has d+1 components.
  virtual cplx half_space_transform(const Vec& p, SpatialWeight w) const;

  // Radius beyond which the covariance is negligible; sets numeric boxes.
  virtual double support_radius() const { return 12.0; }
};

class GaussianCovariance final : public CovarianceModel {
 public:
  std::string name() const override { return "gaussian"; }
  double value(double tau, const Vec& r) const override;
  double spectral_density(double Omega, const Vec& q) const override;
  double laplacian(double tau, const Vec& r) const override;
  double bilaplacian(double tau, const Vec& r) const override;
  double marginal(double tau, const Vec& r_perp) const override;
  cplx half_space_transform(const Vec& p, SpatialWeight w) const override;
};

// Gaussian in time, generalized Cauchy in space:
//   R = exp(-tau^2/2) (1 + |r|^2/(2 nu))^(-nu).
// The spatial factor is a Gamma(nu, rate 2 nu) mixture of Gaussians, which
// makes it positive definite; nu > (d+1)/2 keeps the spectrum finite at 0.
class CauchyCovariance final : public CovarianceModel {
 public:
  explicit CauchyCovariance(double nu);
  std::string name() const override { return "cauchy"; }
  double nu() const { return nu_; }
  double value(double tau, const Vec& r) const override;
  double spectral_density(double Omega, const Vec& q) const override;
  double laplacian(double tau, const Vec& r) const override;
  double bilaplacian(double tau, const Vec& r) const override;
  cplx half_space_transform(const Vec& p, SpatialWeight w) const override;
  double support_radius() const override;

 private:
  double radial_derivative(int order, double s) const;
  double nu_;
};

std::shared_ptr<const CovarianceModel> make_covariance_model(const std::string& tag,
                                                             double nu = 3.0);

struct MediumStats {
  double c_o = 343.0;
  double rho_o = 1.2;
  double sigma_c = 0.0;
  double sigma_rho = 0.0;
  // Accepted for completeness; no implemented formula depends on it.
  double sigma_v = 0.0;
  double ell = 1.0;
  // Infinite correlation time models a frozen (time-independent) medium.
  double T_corr = 1.0;
  // Correlation coefficient between the sound-speed and density fields;
  // all three covariances share the same model shape.
  double rho_c_corr = 0.0;
  std::shared_ptr<const CovarianceModel> model = std::make_shared<GaussianCovariance>();

  bool frozen() const { return std::isinf(T_corr); }
  void validate() const;
};

struct TaylorCoeffs {
  double R00 = 0.0;
  double alpha_o = 0.0;
  double vartheta_o = 0.0;
  double alpha = 0.0;
  double vartheta = 0.0;
};

double covariance_eval(const MediumStats& stats, double tau, const Vec& r);
double psd_eval(const MediumStats& stats, double Omega, const Vec& q);
double marginal_covariance(const MediumStats& stats, double tau, const Vec& r_perp);

// Second-derivative estimate used for models without analytic curvature.
double central_second_derivative(const std::function<double(double)>& f, double h);

// Taylor coefficients of the range-marginal covariance at the origin.
// step is the finite-difference step for non-Gaussian models.
TaylorCoeffs taylor_coeffs(const MediumStats& stats, double k_o, double step = 1e-4);

}  // namespace mrt
