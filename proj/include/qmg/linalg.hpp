#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace qmg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Index = Eigen::Index;

class NonConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PowerIterationOptions {
  double tolerance = 1e-10;
  int max_iterations = 10000;
  // Window over which a stalled Rayleigh quotient counts as converged when
  // the residual test cannot be met (clustered top singular values).
  int stall_window = 100;
  /// Starting vector; empty selects the normalized all-ones vector.
  Vector seed;
};

struct NormEstimate {
  double value = 0.0;
  int iterations = 0;
};

/// Estimates ‖Op‖₂ by power iteration on OpᵀOp.
///
/// `apply(x)` must return Op·x and `apply_transpose(y)` must return Opᵀ·y.
/// The default seed is the normalized all-ones vector so results are
/// reproducible. Converges when the eigen-residual
/// ‖OpᵀOp v − λv‖ drops below tolerance·λ, or when λ has stalled to within
/// tolerance over `stall_window` iterations.
template <class Apply, class ApplyTranspose>
NormEstimate power_norm(Apply&& apply, ApplyTranspose&& apply_transpose, Index cols,
                        const PowerIterationOptions& options = {}) {
  if (cols == 0) return {0.0, 0};
  Vector v = options.seed.size() == cols ? Vector(options.seed.normalized())
                                         : Vector(Vector::Ones(cols).normalized());
  double lambda = 0.0;
  double lambda_window_start = 0.0;
  for (int it = 1; it <= options.max_iterations; ++it) {
    Vector w = apply_transpose(apply(v));
    const double next = v.dot(w);
    const double w_norm = w.norm();
    if (w_norm == 0.0) return {0.0, it};
    const double residual = (w - next * v).norm();
    lambda = next;
    if (residual <= options.tolerance * lambda) return {std::sqrt(lambda), it};
    if (it % options.stall_window == 0) {
      if (std::abs(lambda - lambda_window_start) <= options.tolerance * lambda) {
        return {std::sqrt(lambda), it};
      }
      lambda_window_start = lambda;
    }
    v = w / w_norm;
  }
  throw NonConvergenceError("power iteration did not converge in " +
                            std::to_string(options.max_iterations) + " iterations");
}

/// ‖A‖₂ for a sparse or dense matrix via power iteration.
template <class MatrixType>
NormEstimate operator_norm(const MatrixType& A, const PowerIterationOptions& options = {}) {
  return power_norm([&](const Vector& x) -> Vector { return A * x; },
                    [&](const Vector& y) -> Vector { return A.transpose() * y; }, A.cols(),
                    options);
}

/// Largest absolute entry, 0 for empty matrices.
template <class MatrixType>
double max_abs(const MatrixType& A) {
  if constexpr (std::is_base_of_v<Eigen::SparseMatrixBase<MatrixType>, MatrixType>) {
    double m = 0.0;
    for (Index k = 0; k < A.outerSize(); ++k) {
      for (typename MatrixType::InnerIterator it(A, k); it; ++it) m = std::max(m, std::abs(it.value()));
    }
    return m;
  } else {
    return A.size() == 0 ? 0.0 : A.cwiseAbs().maxCoeff();
  }
}

/// ⌈log₂ n⌉ with ⌈log₂ 1⌉ = 0.
constexpr int ceil_log2(unsigned long long n) {
  int bits = 0;
  unsigned long long v = 1;
  while (v < n) {
    v <<= 1;
    ++bits;
  }
  return bits;
}

constexpr bool is_power_of_two(long long n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace qmg
