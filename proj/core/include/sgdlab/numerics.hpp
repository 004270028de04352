#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace sgdlab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Relative tolerance for PSD-order checks: a symmetric matrix counts as PSD
/// when its smallest eigenvalue is at least -kPsdTolerance * max|entry|.
inline constexpr double kPsdTolerance = 1e-10;

/// Relative tolerance for symmetry of inputs to the operator maps.
inline constexpr double kSymmetryTolerance = 1e-12;

/// Raised when an iterate or accumulated moment stops being finite.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::size_t step)
      : std::runtime_error(what + " (step " + std::to_string(step) + ")"),
        step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Raised when an internal consistency check (e.g. PSD-ness of an evolved
/// second-moment matrix) fails beyond tolerance.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double value) noexcept {
    const double t = sum_ + value;
    if (std::abs(sum_) >= std::abs(value)) {
      correction_ += (sum_ - t) + value;
    } else {
      correction_ += (value - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double value) noexcept {
    add(value);
    return *this;
  }
  double value() const noexcept { return sum_ + correction_; }

 private:
  double sum_ = 0.0;
  double correction_ = 0.0;
};

double max_abs_entry(const Matrix& a);

bool is_symmetric(const Matrix& a, double rel_tol = kSymmetryTolerance);

/// Throws std::invalid_argument if `a` is not square and symmetric.
void require_symmetric(const Matrix& a, const char* what);

/// Smallest eigenvalue of the symmetric part of `a`.
double min_eigenvalue(const Matrix& a);

/// Largest eigenvalue of the symmetric part of `a`.
double max_eigenvalue(const Matrix& a);

/// Normalized PSD margin of `a`: min eigenvalue divided by `scale` (or by
/// max|a_ij| when scale <= 0). A matrix passes a PSD check when the margin is
/// >= -kPsdTolerance. Returns 0 for the zero matrix.
double psd_margin(const Matrix& a, double scale = 0.0);

/// Runs fn(i) for i in [0, count) on up to `threads` worker threads. Each
/// index runs exactly once; callers write results to slot i and reduce in
/// index order afterwards, so results do not depend on the thread count.
/// If any task throws, every index still runs and the exception from the
/// lowest failing index is rethrown on the calling thread.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);

/// Default worker count (hardware concurrency, at least 1).
std::size_t default_thread_count();

}  // namespace sgdlab
