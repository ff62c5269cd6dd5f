#pragma once

#include "mrt/coherence.hpp"
#include "mrt/scenario.hpp"

#include <vector>

namespace mrt {

// Source of coherence data C(dt, dx, x) at a fixed range.
class CoherenceProvider {
 public:
  virtual ~CoherenceProvider() = default;
  virtual int dim() const = 0;
  virtual double k_o() const = 0;
  virtual cplx value(double dt, const Vec& dx, const Vec& x) const = 0;
  // Precision P of a Gaussian exp(-y^T P y / 2), y = (dt, dx, x), that
  // carries the decay of |C|. Quadrature routes integrate C against it.
  virtual bool has_envelope() const { return true; }
  virtual Eigen::MatrixXd envelope_precision() const = 0;
};

// Printed closed form.
class ClosedFormCoherence : public CoherenceProvider {
 public:
  ClosedFormCoherence(const Scenario& s, double z);
  int dim() const override { return d_; }
  double k_o() const override { return p_.k_o; }
  cplx value(double dt, const Vec& dx, const Vec& x) const override;
  Eigen::MatrixXd envelope_precision() const override;
  const CoherenceParams& params() const { return p_; }

 private:
  CoherenceParams p_;
  int d_;
};

// Quadrature of the quadratic-exponent integral; shares no coefficient with
// the closed form, which makes it a forward model for estimator tests.
class QuadratureCoherence final : public CoherenceProvider {
 public:
  QuadratureCoherence(const Scenario& s, double z, int order = 40);
  int dim() const override { return s_.d; }
  double k_o() const override { return s_.wn.k_o; }
  cplx value(double dt, const Vec& dx, const Vec& x) const override;
  Eigen::MatrixXd envelope_precision() const override { return envelope_.envelope_precision(); }

 private:
  Scenario s_;
  double z_;
  int order_;
  ClosedFormCoherence envelope_;
};

// Uniform grid with nodes (i - n/2) h, i = 0..n-1 (n even).
struct CenteredGrid {
  int n = 0;
  double h = 0.0;
  double node(int i) const { return (i - n / 2) * h; }
  // Conjugate grid of an n-point transform.
  CenteredGrid dual() const { return {n, kTwoPi / (n * h)}; }
};

// C sampled on a (dt, dx_1..dx_d) lag grid at one observation point x.
struct LagTable {
  int d = 1;
  double k_o = 1.0;
  Vec x;
  CenteredGrid t;
  CenteredGrid dx;  // shared by every lateral axis
  std::vector<cplx> values;
  std::size_t size() const;
};

// Real density on an (omega, k_1..k_d) grid at one observation point x.
struct SpectralTable {
  int d = 1;
  double k_o = 1.0;
  Vec x;
  CenteredGrid omega;
  CenteredGrid k;
  std::vector<double> values;
  std::size_t size() const;
  double max_value() const;
};

LagTable tabulate_coherence(const CoherenceProvider& c, const Vec& x, CenteredGrid t, CenteredGrid dx);

// Coherence with only tabulated values (speckle or measured data).
// Multilinear interpolation; the observation point is fixed by the table.
class TabulatedCoherence final : public CoherenceProvider {
 public:
  explicit TabulatedCoherence(LagTable table) : table_(std::move(table)) {}
  int dim() const override { return table_.d; }
  double k_o() const override { return table_.k_o; }
  cplx value(double dt, const Vec& dx, const Vec& x) const override;
  bool has_envelope() const override { return false; }
  Eigen::MatrixXd envelope_precision() const override;
  const LagTable& table() const { return table_; }

 private:
  LagTable table_;
};

// Estimated Wigner transform with the Gaussian array taper, by Gauss-Hermite
// quadrature over the lags (providers with an envelope).
double estimate_wigner(const CoherenceProvider& c, const ArraySpec& a, double omega, const Vec& k,
                       const Vec& x, int order = 40);

// Same estimate on the full conjugate (omega, k) grid of a lag table, by FFT.
// Throws NumericalError when the lag box truncates C.
// check_truncation can be dropped for tables that are periodic by
// construction (inverse transforms of spectral data).
SpectralTable estimate_wigner_fft(const LagTable& c, const ArraySpec& a, bool check_truncation = true);

// Taper-smoothing route: Gaussian average of the time-harmonic Wigner
// transform over k, adaptive Gauss-Kronrod in each component of K.
double estimate_wigner_smoothing(const Scenario& s, const ArraySpec& a, double omega, const Vec& k,
                                 const Vec& x, double z, double tol = 1e-11);

// Inverse transform of a spectral table to the conjugate lag grid.
LagTable coherence_from_spectrum(const SpectralTable& w);

// Imaging functions built from the coherence at the array.
// DoA: frequency-integrated estimate at the array centre, per k node.
std::vector<double> doa_image(const CoherenceProvider& c, const ArraySpec& a,
                              const std::vector<Vec>& k_nodes, int order = 40);
// Range: |C(t, 0, x_o)|.
std::vector<double> range_image(const CoherenceProvider& c, const Vec& x_o,
                                const std::vector<double>& t_nodes);
// Velocity: |O_v(y, t)| with the aperture-weighted integral over x.
std::vector<double> velocity_image(const CoherenceProvider& c, const ArraySpec& a, double t,
                                   const std::vector<Vec>& y_nodes, int order = 40);

}  // namespace mrt
