#include "sgdlab/numerics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>
#include <vector>

#include <Eigen/Eigenvalues>

namespace sgdlab {

double max_abs_entry(const Matrix& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

bool is_symmetric(const Matrix& a, double rel_tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(max_abs_entry(a), 1e-300);
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

void require_symmetric(const Matrix& a, const char* what) {
  if (!is_symmetric(a)) {
    throw std::invalid_argument(std::string(what) + ": matrix is not symmetric");
  }
}

namespace {

Eigen::VectorXd symmetric_eigenvalues(const Matrix& a) {
  const Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

}  // namespace

double min_eigenvalue(const Matrix& a) {
  return symmetric_eigenvalues(a).minCoeff();
}

double max_eigenvalue(const Matrix& a) {
  return symmetric_eigenvalues(a).maxCoeff();
}

double psd_margin(const Matrix& a, double scale) {
  const double s = scale > 0.0 ? scale : max_abs_entry(a);
  if (s == 0.0) return 0.0;
  return min_eigenvalue(a) / s;
}

std::size_t default_thread_count() {
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> failures(count);
  auto run = [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  };

  const std::size_t workers =
      std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) run(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
          run(i);
        }
      });
    }
  }

  for (const auto& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }
}

}  // namespace sgdlab
