#pragma once

#include "mrt/common.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace mrt {

// Uniform cell-centred axis over [lo, hi) with n cells.
struct Axis {
  std::string name;
  std::string unit;
  double lo = 0.0;
  double hi = 1.0;
  int n = 1;

  double width() const { return (hi - lo) / n; }
  double center(int i) const { return lo + (i + 0.5) * width(); }
  // Cell index containing x, or -1 outside [lo, hi).
  int locate(double x) const;
};

// Gridded phase-space density at fixed range z. Axis order is
// (omega, k_1..k_d, x_1..x_d), optionally preceded by extra axes
// (e.g. a realization axis for speckle ensembles). Values are row-major.
class WignerField {
 public:
  int d = 1;
  double z = 0.0;
  std::vector<Axis> axes;
  std::vector<double> values;
  std::vector<double> errors;  // per-cell standard errors, may be empty
  bool complex_values = false; // values interleave (re, im) when set
  nlohmann::json metadata = nlohmann::json::object();

  std::size_t cells() const;
  std::vector<int> shape() const;
  double cell_volume() const;
  // Sum of values times cell volume over the phase-space axes.
  double total_mass() const;
  double max_value() const;
  double min_value() const;
  std::size_t flat_index(const std::vector<int>& idx) const;

  void save(const std::string& path) const;
  static WignerField load(const std::string& path);
  // Rows of axis centres followed by value (and error) for d = 1 fields.
  void write_csv(const std::string& path) const;
};

}  // namespace mrt
