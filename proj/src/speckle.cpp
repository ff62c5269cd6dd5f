#include "mrt/speckle.hpp"

#include "mrt/propagate.hpp"

#include <cmath>
#include <thread>

namespace mrt {

WignerField SpeckleEnsemble::realization(int r) const {
  WignerField f = reference;
  const std::size_t n = modes();
  f.values.assign(intensities.begin() + r * n, intensities.begin() + (r + 1) * n);
  f.errors.clear();
  f.metadata["realization"] = r;
  return f;
}

WignerField SpeckleEnsemble::to_field() const {
  WignerField f = reference;
  Axis ax;
  ax.name = "realization";
  ax.unit = "1";
  ax.lo = -0.5;
  ax.hi = realizations - 0.5;
  ax.n = realizations;
  f.axes.insert(f.axes.begin(), ax);
  f.values = intensities;
  f.errors.clear();
  f.metadata["speckle"] = {{"realizations", realizations}, {"components", components}, {"seed", seed}};
  return f;
}

SpeckleEnsemble synthesize_speckle(const WignerField& W, double T_ratio, int realizations,
                                   std::uint64_t seed, int threads) {
  if (!(T_ratio >= 1.0)) throw ArgumentError("T_s / T must be at least 1");
  if (realizations < 1) throw ArgumentError("need at least one realization");
  if (W.complex_values) throw ArgumentError("speckle synthesis needs a real density");
  for (double v : W.values)
    if (v < 0.0) throw ArgumentError("speckle synthesis needs a non-negative density");
  SpeckleEnsemble e;
  e.reference = W;
  e.realizations = realizations;
  e.components = static_cast<int>(std::floor(T_ratio));
  e.seed = seed;
  const std::size_t n = W.values.size();
  e.amplitudes.resize(n * realizations);
  e.intensities.resize(n * realizations);
  const int M = e.components;

  auto run = [&](int r) {
    // stream per realization keeps the ensemble independent of the thread count
    auto rng = substream(seed, static_cast<std::uint64_t>(r));
    std::normal_distribution<double> nrm;
    for (std::size_t i = 0; i < n; ++i) {
      const double sd = std::sqrt(0.5 * W.values[i]);
      cplx sum = 0.0;
      double inten = 0.0;
      for (int m = 0; m < M; ++m) {
        const cplx a(sd * nrm(rng), sd * nrm(rng));
        sum += a;
        inten += std::norm(a);
      }
      e.amplitudes[r * n + i] = sum / std::sqrt(static_cast<double>(M));
      e.intensities[r * n + i] = inten / M;
    }
  };
  threads = std::max(1, std::min(resolve_threads(threads), realizations));
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      for (int r = t; r < realizations; r += threads) run(r);
    });
  for (auto& th : pool) th.join();
  return e;
}

WignerField spectral_field(const SpectralTable& t) {
  WignerField f;
  f.d = t.d;
  auto axis = [](const CenteredGrid& g, const std::string& name, const std::string& unit) {
    Axis a;
    a.name = name;
    a.unit = unit;
    a.lo = g.node(0) - 0.5 * g.h;
    a.hi = a.lo + g.n * g.h;
    a.n = g.n;
    return a;
  };
  f.axes.push_back(axis(t.omega, "omega", "rad/s"));
  for (int i = 0; i < t.d; ++i)
    f.axes.push_back(axis(t.k, t.d == 1 ? "k" : "k" + std::to_string(i + 1), "rad/m"));
  f.values = t.values;
  f.metadata["x"] = std::vector<double>(t.x.data(), t.x.data() + t.x.size());
  return f;
}

SpectralTable spectral_table(const WignerField& f, const SpectralTable& like) {
  if (f.values.size() != like.size()) throw ArgumentError("field does not match the spectral grid");
  SpectralTable t = like;
  t.values = f.values;
  return t;
}

}  // namespace mrt
