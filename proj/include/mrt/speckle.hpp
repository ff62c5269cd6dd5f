#pragma once

#include "mrt/array.hpp"
#include "mrt/wigner_field.hpp"

#include <cstdint>
#include <vector>

namespace mrt {

// Realizations of circular complex Gaussian mode amplitudes whose intensity
// has mean W. Each mode of each realization is built from M = floor(T_ratio)
// uncorrelated components; `intensities` holds their average |a_m|^2 (the
// empirical Wigner density) and `amplitudes` their normalized sum.
struct SpeckleEnsemble {
  WignerField reference;  // the prescribed W (axes and mean values)
  int realizations = 0;
  int components = 0;
  std::uint64_t seed = 0;
  std::vector<cplx> amplitudes;   // realization-major
  std::vector<double> intensities;

  std::size_t modes() const { return reference.values.size(); }
  // Empirical density of one realization with the reference axes.
  WignerField realization(int r) const;
  // All realizations with a leading realization axis.
  WignerField to_field() const;
};

SpeckleEnsemble synthesize_speckle(const WignerField& W, double T_ratio, int realizations,
                                   std::uint64_t seed, int threads = 1);

// Spectral-table view of a d-dimensional (omega, k) density and back.
WignerField spectral_field(const SpectralTable& t);
SpectralTable spectral_table(const WignerField& f, const SpectralTable& like);

}  // namespace mrt
