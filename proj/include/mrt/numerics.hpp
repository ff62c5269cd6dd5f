#pragma once

#include "mrt/common.hpp"

#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace mrt {

using cplx = std::complex<double>;

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Hermite rule for the weight exp(-x^2). Cached per order.
const QuadratureRule& gauss_hermite(int n);

// Gauss-Legendre rule on [-1, 1]. Cached per order.
const QuadratureRule& gauss_legendre(int n);

// Composite Gauss-Legendre rule on [a, b] with equal panels.
QuadratureRule composite_legendre(double a, double b, int panels, int order);

// erf(b) - erf(a) without cancellation when both arguments sit in the same tail.
double erf_diff(double a, double b);

double dawson(double x);

// Bisection for a sign change of f on [lo, hi]; throws RangeBoundsError when
// the bracket is invalid.
double bisect(const std::function<double(double)>& f, double lo, double hi, double rel_tol,
              int max_iter = 200);

// Deterministic substream for block `index` of a run seeded with `seed`.
std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index);

std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = 14695981039346656037ULL);
std::string hex64(std::uint64_t h);

// Smallest n' >= n whose only prime factors are 2, 3, 5.
int fft_size(int n);

// In-place multi-dimensional complex transform with exponent sign +1
// (unnormalized). Planning is serialized internally.
void fft_backward_inplace(std::vector<cplx>& data, const std::vector<int>& dims);
// Same transform restricted to the listed axes.
void fft_backward_axes(std::vector<cplx>& data, const std::vector<int>& dims, const std::vector<int>& axes);
void fft_forward_inplace(std::vector<cplx>& data, const std::vector<int>& dims);

// Integral of exp(-x^T P x / 2 + b^T x) f(x) over R^n by tensor Gauss-Hermite
// in whitened coordinates centred on the Gaussian mean. P must be symmetric
// positive definite; f receives the physical point.
cplx gaussian_weighted_integral(const Eigen::MatrixXd& P, const Eigen::VectorXd& b,
                                const std::function<cplx(const Eigen::VectorXd&)>& f,
                                int order);

// Integral of exp(-x^T P x / 2 + (b + i c)^T x) over R^n by tensor
// Gauss-Hermite. The plane-wave factor separates in whitened coordinates so
// the tensor sum is evaluated as a product of one-dimensional sums.
// log_scale is added to the exponent before it is evaluated.
cplx gaussian_fourier_hermite(const Eigen::MatrixXd& P, const Eigen::VectorXd& b,
                              const Eigen::VectorXd& c, int order, double log_scale = 0.0);

// Same integral in closed form.
cplx gaussian_fourier_exact(const Eigen::MatrixXd& P, const Eigen::VectorXd& b,
                            const Eigen::VectorXd& c);

}  // namespace mrt
