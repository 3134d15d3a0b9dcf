#pragma once

#include <cstddef>
#include <span>

// Data-parallel arithmetic kernels used by the fitting and explanation inner
// loops. Every kernel has a scalar reference implementation plus SIMD
// variants (AVX2+FMA on x86-64, NEON on aarch64). The active variant is
// selected once at startup from CPU capabilities; setting the environment
// variable FAIRCOMPOSE_KERNELS=scalar forces the reference path. SIMD
// variants are equivalence-tested against the reference in the test suite.

namespace faircompose::kernels {

struct Backend {
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  double (*sum)(const double*, std::size_t);
  double (*sq_dist)(const double*, const double*, std::size_t);
  double (*max_abs)(const double*, std::size_t);
  void (*scale)(double, double*, std::size_t);
  const char* name;
};

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double sum(const double* x, std::size_t n);
double sq_dist(const double* a, const double* b, std::size_t n);
double max_abs(const double* x, std::size_t n);
void scale(double alpha, double* x, std::size_t n);
extern const Backend backend;
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
extern const Backend backend;
bool supported();
}  // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
extern const Backend backend;
}  // namespace neon
#endif

/// The variant selected at startup.
const Backend& active();
inline const char* active_backend_name() { return active().name; }

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
/// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}
inline double sum(std::span<const double> x) {
  return active().sum(x.data(), x.size());
}
inline double sq_dist(std::span<const double> a, std::span<const double> b) {
  return active().sq_dist(a.data(), b.data(), a.size());
}
inline double max_abs(std::span<const double> x) {
  return active().max_abs(x.data(), x.size());
}
inline void scale(double alpha, std::span<double> x) {
  active().scale(alpha, x.data(), x.size());
}

}  // namespace faircompose::kernels
