#include "mrt/numerics.hpp"

#include <fftw3.h>
#include <gsl/gsl_sf_dawson.h>

#include <cstdio>
#include <map>
#include <memory>
#include <mutex>

namespace mrt {

namespace {

std::mutex g_rule_mutex;
std::mutex g_fftw_mutex;

QuadratureRule build_hermite(int n) {
  QuadratureRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const double pim4 = std::pow(kPi, -0.25);
  // Orthonormal recurrence; initial guesses from the standard asymptotic
  // placement, refined by Newton iteration.
  double z = 0.0;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * r.nodes[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * r.nodes[1];
    } else {
      z = 2.0 * z - r.nodes[i - 2];
    }
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    r.nodes[i] = z;
    r.nodes[n - 1 - i] = -z;
    const double w = 2.0 / (pp * pp);
    r.weights[i] = w;
    r.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) r.nodes[n / 2] = 0.0;
  return r;
}

QuadratureRule build_legendre(int n) {
  QuadratureRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1);
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) <= 1e-16) break;
    }
    r.nodes[i] = -z;
    r.nodes[n - 1 - i] = z;
    const double w = 2.0 / ((1.0 - z * z) * pp * pp);
    r.weights[i] = w;
    r.weights[n - 1 - i] = w;
  }
  return r;
}

const QuadratureRule& cached(std::map<int, std::unique_ptr<QuadratureRule>>& cache, int n,
                             QuadratureRule (*build)(int)) {
  if (n < 1) throw ArgumentError("quadrature order must be positive");
  std::lock_guard<std::mutex> lock(g_rule_mutex);
  auto it = cache.find(n);
  if (it == cache.end()) {
    it = cache.emplace(n, std::make_unique<QuadratureRule>(build(n))).first;
  }
  return *it->second;
}

void fft_inplace(std::vector<cplx>& data, const std::vector<int>& dims, int sign) {
  std::size_t total = 1;
  for (int n : dims) total *= static_cast<std::size_t>(n);
  if (total != data.size()) throw ArgumentError("fft: data size does not match dimensions");
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(g_fftw_mutex);
    plan = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), ptr, ptr, sign,
                         FFTW_ESTIMATE);
  }
  if (!plan) throw NumericalError("fft: planning failed");
  fftw_execute(plan);
  std::lock_guard<std::mutex> lock(g_fftw_mutex);
  fftw_destroy_plan(plan);
}

void fft_axes_inplace(std::vector<cplx>& data, const std::vector<int>& dims, const std::vector<int>& axes,
                      int sign) {
  const int rank = static_cast<int>(dims.size());
  std::vector<std::ptrdiff_t> stride(rank, 1);
  for (int a = rank - 2; a >= 0; --a) stride[a] = stride[a + 1] * dims[a + 1];
  std::vector<fftw_iodim64> tr, loop;
  std::vector<bool> chosen(rank, false);
  for (int a : axes) {
    if (a < 0 || a >= rank) throw ArgumentError("fft: axis out of range");
    chosen[a] = true;
  }
  for (int a = 0; a < rank; ++a) {
    fftw_iodim64 io{dims[a], stride[a], stride[a]};
    (chosen[a] ? tr : loop).push_back(io);
  }
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(g_fftw_mutex);
    plan = fftw_plan_guru64_dft(static_cast<int>(tr.size()), tr.data(), static_cast<int>(loop.size()),
                                loop.data(), ptr, ptr, sign, FFTW_ESTIMATE);
  }
  if (!plan) throw NumericalError("fft: planning failed");
  fftw_execute(plan);
  std::lock_guard<std::mutex> lock(g_fftw_mutex);
  fftw_destroy_plan(plan);
}

}  // namespace

const QuadratureRule& gauss_hermite(int n) {
  static std::map<int, std::unique_ptr<QuadratureRule>> cache;
  return cached(cache, n, build_hermite);
}

const QuadratureRule& gauss_legendre(int n) {
  static std::map<int, std::unique_ptr<QuadratureRule>> cache;
  return cached(cache, n, build_legendre);
}

QuadratureRule composite_legendre(double a, double b, int panels, int order) {
  const auto& g = gauss_legendre(order);
  QuadratureRule r;
  r.nodes.reserve(static_cast<std::size_t>(panels) * order);
  r.weights.reserve(static_cast<std::size_t>(panels) * order);
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    for (int i = 0; i < order; ++i) {
      r.nodes.push_back(mid + 0.5 * h * g.nodes[i]);
      r.weights.push_back(0.5 * h * g.weights[i]);
    }
  }
  return r;
}

double erf_diff(double a, double b) {
  if (a > 0.0 && b > 0.0) return std::erfc(a) - std::erfc(b);
  if (a < 0.0 && b < 0.0) return std::erfc(-b) - std::erfc(-a);
  return std::erf(b) - std::erf(a);
}

double dawson(double x) { return gsl_sf_dawson(x); }

double bisect(const std::function<double(double)>& f, double lo, double hi, double rel_tol,
              int max_iter) {
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) throw RangeBoundsError("no sign change inside the bracket");
  for (int it = 0; it < max_iter; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
    if (hi - lo <= rel_tol * std::abs(mid)) break;
  }
  return 0.5 * (lo + hi);
}

std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    0x6d72u};
  return std::mt19937_64(seq);
}

std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

int fft_size(int n) {
  for (int m = std::max(n, 1);; ++m) {
    int r = m;
    for (int p : {2, 3, 5})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

void fft_backward_inplace(std::vector<cplx>& data, const std::vector<int>& dims) {
  fft_inplace(data, dims, FFTW_BACKWARD);
}

void fft_backward_axes(std::vector<cplx>& data, const std::vector<int>& dims, const std::vector<int>& axes) {
  std::size_t total = 1;
  for (int n : dims) total *= static_cast<std::size_t>(n);
  if (total != data.size()) throw ArgumentError("fft: data size does not match dimensions");
  fft_axes_inplace(data, dims, axes, FFTW_BACKWARD);
}

void fft_forward_inplace(std::vector<cplx>& data, const std::vector<int>& dims) {
  fft_inplace(data, dims, FFTW_FORWARD);
}

cplx gaussian_weighted_integral(const Eigen::MatrixXd& P, const Eigen::VectorXd& b,
                                const std::function<cplx(const Eigen::VectorXd&)>& f,
                                int order) {
  const int n = static_cast<int>(P.rows());
  Eigen::LLT<Eigen::MatrixXd> llt(P);
  if (llt.info() != Eigen::Success) throw NumericalError("quadrature weight is not positive definite");
  const Eigen::VectorXd mu = llt.solve(b);
  const Eigen::MatrixXd L = llt.matrixL();
  // x = mu + sqrt(2) L^{-T} u
  const Eigen::MatrixXd M =
      std::sqrt(2.0) * L.transpose().triangularView<Eigen::Upper>().solve(
                           Eigen::MatrixXd::Identity(n, n));
  double log_det_l = 0.0;
  for (int i = 0; i < n; ++i) log_det_l += std::log(L(i, i));
  const double scale = std::exp(0.5 * b.dot(mu) + 0.5 * n * std::log(2.0) - log_det_l);

  const auto& gh = gauss_hermite(order);
  std::vector<int> idx(n, 0);
  Eigen::VectorXd u(n);
  cplx sum = 0.0;
  while (true) {
    double w = 1.0;
    for (int i = 0; i < n; ++i) {
      u(i) = gh.nodes[idx[i]];
      w *= gh.weights[idx[i]];
    }
    sum += w * f(mu + M * u);
    int k = 0;
    while (k < n && ++idx[k] == order) idx[k++] = 0;
    if (k == n) break;
  }
  return scale * sum;
}

cplx gaussian_fourier_hermite(const Eigen::MatrixXd& P, const Eigen::VectorXd& b,
                              const Eigen::VectorXd& c, int order, double log_scale) {
  const int n = static_cast<int>(P.rows());
  Eigen::LLT<Eigen::MatrixXd> llt(P);
  if (llt.info() != Eigen::Success) throw NumericalError("quadrature weight is not positive definite");
  const Eigen::VectorXd mu = llt.solve(b);
  const Eigen::MatrixXd L = llt.matrixL();
  // x = mu + sqrt(2) L^{-T} u, so c.x = c.mu + sqrt(2) (L^{-1} c).u
  const Eigen::VectorXd beta = std::sqrt(2.0) * L.triangularView<Eigen::Lower>().solve(c);
  double log_det_l = 0.0;
  for (int i = 0; i < n; ++i) log_det_l += std::log(L(i, i));
  const cplx scale = std::exp(cplx(log_scale + 0.5 * b.dot(mu) + 0.5 * n * std::log(2.0) - log_det_l, c.dot(mu)));
  const auto& gh = gauss_hermite(order);
  cplx prod = 1.0;
  for (int i = 0; i < n; ++i) {
    cplx s = 0.0;
    for (int j = 0; j < order; ++j) s += gh.weights[j] * std::exp(cplx(0.0, beta(i) * gh.nodes[j]));
    prod *= s;
  }
  return scale * prod;
}

cplx gaussian_fourier_exact(const Eigen::MatrixXd& P, const Eigen::VectorXd& b,
                            const Eigen::VectorXd& c) {
  const int n = static_cast<int>(P.rows());
  Eigen::LLT<Eigen::MatrixXd> llt(P);
  if (llt.info() != Eigen::Success) throw NumericalError("Gaussian form is not positive definite");
  const Eigen::MatrixXd L = llt.matrixL();
  double log_det_l = 0.0;
  for (int i = 0; i < n; ++i) log_det_l += std::log(L(i, i));
  const Eigen::VectorXcd w = b.cast<cplx>() + cplx(0.0, 1.0) * c.cast<cplx>();
  const Eigen::VectorXcd s = llt.solve(w);
  const cplx quad = w.transpose() * s;
  return std::exp(0.5 * quad + 0.5 * n * std::log(kTwoPi) - log_det_l);
}

}  // namespace mrt
