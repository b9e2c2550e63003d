#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace yamabe {

/// Cholesky factor L L^T of a symmetric positive-definite tridiagonal matrix.
///
/// The matrix is given by its diagonal (size n) and its first off-diagonal
/// (size n-1). L is lower bidiagonal with diagonal `diag_` and subdiagonal
/// `sub_`.
class TridiagonalCholesky {
 public:
  TridiagonalCholesky() = default;

  TridiagonalCholesky(std::span<const double> diagonal, std::span<const double> offdiag) {
    const std::size_t n = diagonal.size();
    if (n == 0 || offdiag.size() + 1 != n) {
      throw std::invalid_argument("TridiagonalCholesky: inconsistent band sizes");
    }
    diag_.resize(n);
    sub_.resize(n - 1);
    double prev_sub = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double pivot = diagonal[k] - prev_sub * prev_sub;
      if (!(pivot > 0.0) || !std::isfinite(pivot)) {
        throw std::runtime_error("TridiagonalCholesky: matrix not positive definite at row " +
                                 std::to_string(k));
      }
      diag_[k] = std::sqrt(pivot);
      if (k + 1 < n) {
        sub_[k] = offdiag[k] / diag_[k];
        prev_sub = sub_[k];
      }
    }
  }

  std::size_t size() const { return diag_.size(); }

  /// Overwrites rhs with A^{-1} rhs.
  void solve_in_place(std::span<double> rhs) const {
    const std::size_t n = diag_.size();
    if (rhs.size() != n) throw std::invalid_argument("TridiagonalCholesky: rhs size mismatch");
    rhs[0] /= diag_[0];
    for (std::size_t k = 1; k < n; ++k) rhs[k] = (rhs[k] - sub_[k - 1] * rhs[k - 1]) / diag_[k];
    rhs[n - 1] /= diag_[n - 1];
    for (std::size_t k = n - 1; k-- > 0;) rhs[k] = (rhs[k] - sub_[k] * rhs[k + 1]) / diag_[k];
  }

 private:
  std::vector<double> diag_;
  std::vector<double> sub_;
};

}  // namespace yamabe
