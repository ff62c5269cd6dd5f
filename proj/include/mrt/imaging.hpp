#pragma once

#include "mrt/array.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace mrt {

// D_z sqrt(z) and T_z sqrt(z) do not depend on range; knowing them (from the
// statistics or from a known source) fixes the z-dependence of every width.
struct MediumConstants {
  double T_sqrt_z = 0.0;
  double D_sqrt_z = 0.0;
};

MediumConstants medium_constants(const Scenario& s);

// Printed DoA width and peak bias k(z) / (k_o x_o / z).
double theta_doa_model(const CoherenceParams& p, double kappa);
double doa_bias(double u);
double theta_range_model(const MediumConstants& c, double v_mag, double ell_s, double z);

// Regular grid with n nodes per axis, lo + i h, row-major over d axes.
struct RegularGrid {
  int d = 1;
  Vec lo;
  double h = 1.0;
  int n = 1;
  std::size_t size() const;
  Vec node(std::size_t flat) const;
  std::vector<Vec> nodes() const;
  static RegularGrid centered(const Vec& center, double half_width, int n);
};

struct PeakFit {
  Vec location;
  double value = 0.0;
  std::size_t argmax = 0;
  bool on_edge = false;
};

// Quadratic interpolation of log(values) around the grid argmax:
// 3 points per axis in d = 1, a 9-point least-squares quadric in d = 2.
PeakFit quadratic_peak(const RegularGrid& g, const std::vector<double>& values);

// Gaussian width sigma from a linear regression of log(value) on
// |node - center|^2 over the nodes with value >= 0.1 max.
double gaussian_width(const std::vector<Vec>& nodes, const std::vector<double>& values, const Vec& center,
                      double* residual = nullptr);

struct DoaOptions {
  double k_half_width = 0.0;  // coarse search half-width; 0 picks the paraxial cone
  int order = 40;
};

struct DoaResult {
  Vec k_peak;
  double theta_doa = 0.0;   // fitted width / k_o
  Vec k_pred;               // printed k(z) for the scenario's array centre
  double theta_pred = 0.0;  // printed width
  double fit_residual = 0.0;
  RegularGrid grid;
  std::vector<double> image;
};

DoaResult image_doa(const CoherenceProvider& c, const Scenario& s, double z_assumed,
                    const DoaOptions& opt = {});

struct SaturationReport {
  double kappa_critical = 0.0;       // sqrt(2) D_z k_o
  double kappa_knee = 0.0;           // numeric: d ln theta / d ln kappa = -1/2
  double improvement_beyond = 0.0;   // 1 - theta(inf) / theta(kappa_critical)
};

SaturationReport doa_aperture_saturation(const Scenario& s, double z);

struct RangeResult {
  double z_hat = 0.0;
  double theta_range = 0.0;  // fitted
  double theta_pred = 0.0;   // model at z_hat
  double fit_residual = 0.0;
  std::vector<double> t;
  std::vector<double> image;
};

// t_grid may be empty (chosen from the data).
RangeResult image_range(const CoherenceProvider& c, const Vec& x_o, const MediumConstants& mc,
                        double v_mag, double ell_s, double z_lo, double z_hi,
                        std::vector<double> t_grid = {});

struct VelocityOptions {
  bool assume_unit_sz = false;  // large aperture and ell_s >> D_z
  int order = 40;
};

struct VelocityResult {
  Vec v_hat;
  double s_z = 1.0;        // value used to unbias the slope
  double s_z_model = 1.0;  // printed value
  double res_v = 0.0;
  bool fast_flow = false;  // |v| above n_z A_z / T_z
  std::vector<double> t;
  std::vector<Vec> y_max;
  std::vector<double> weights;
};

VelocityResult estimate_velocity(const CoherenceProvider& c, const Scenario& s, double z,
                                 std::vector<double> t_grid = {}, const VelocityOptions& opt = {});

struct EstimateReport {
  Vec k_peak;
  double theta_doa = 0.0;
  double z_hat = 0.0;
  double theta_range = 0.0;
  Vec v_hat;
  double s_z_used = 0.0;
  double res_v = 0.0;
  Vec x_o_hat;
  double x_o_resolution = 0.0;
  std::vector<std::string> flags;
  nlohmann::json diagnostics = nlohmann::json::object();

  nlohmann::json to_json() const;
};

struct LocalizeOptions {
  bool estimate_velocity = false;
  std::vector<double> t_grid;
  // Overrides the statistics-derived constants (e.g. from calibrate_medium).
  bool use_constants = false;
  MediumConstants constants;
};

// Range first, then DoA at the estimated range, then the cross-range position
// corrected for the k(z) bias. `priors` supplies the array, carrier, source
// radius, |v_o| and the range bracket.
EstimateReport localize_source(const CoherenceProvider& c, const Scenario& priors,
                               const LocalizeOptions& opt = {});

// Fits the range-invariant constants from a source at known range.
MediumConstants calibrate_medium(const CoherenceProvider& c, const Scenario& known, double z_known);

}  // namespace mrt
