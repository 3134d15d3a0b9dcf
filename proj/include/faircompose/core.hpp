#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace faircompose {

/// Category of a failure; the CLI maps configuration-time categories to
/// exit code 2 and run-time categories to exit code 3.
enum class ErrorKind {
  Config,
  Composition,
  Compatibility,
  Schema,
  Data,
  Split,
  Parameter,
  Fit,
  Metric,
  Threshold,
  Mitigation,
  Explanation,
  Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + msg),
        kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

/// Dense row-major matrix of doubles. Rows are contiguous so they can be
/// handed to the kernel layer as spans.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* row(std::size_t r) { return data_.data() + r * cols_; }
  const double* row(std::size_t r) const { return data_.data() + r * cols_; }
  std::span<double> row_span(std::size_t r) { return {row(r), cols_}; }
  std::span<const double> row_span(std::size_t r) const { return {row(r), cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Derives an independent stream seed from a base seed and a stream id.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream);

/// Seeded random source. All distribution transforms are implemented here
/// (not via std:: distributions) so that sequences are identical across
/// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform double in [0, 1).
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; draws come in pairs, the second is cached.
  double gaussian();

  /// Uniform integer in [0, n), n > 0, via rejection sampling.
  std::size_t bounded(std::size_t n);

 private:
  std::mt19937_64 eng_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

/// Fisher-Yates shuffle driven by Rng::bounded, pinned for reproducibility.
void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng);

/// Solves A x = b for symmetric positive definite A (in-place Cholesky).
/// Throws a Parameter error if A is not numerically positive definite.
std::vector<double> cholesky_solve(Matrix a, std::vector<double> b);

/// Inverse standard normal CDF by bisection on erfc. p in [0, 1];
/// returns +/-infinity at the endpoints.
double inverse_normal_cdf(double p);

/// Pearson correlation; returns false when either variance vanishes.
bool pearson(std::span<const double> x, std::span<const double> y, double* out);

/// Shortest round-trip decimal formatting, shared by the CSV and JSON writers.
std::string format_double(double v);

/// FNV-1a 64-bit over a byte string, used for stable run identifiers.
std::uint64_t fnv1a64(std::string_view s);

}  // namespace faircompose
