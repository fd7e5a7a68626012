#pragma once

// Dense row-major matrix/vector kernel sized for the small problems in this
// library (a few hundred rows at most). Includes a symmetric eigensolver and
// the C-matrix builder used by the HJB update law.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace hjbnn {

class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t n, double fill = 0.0);
  /// Throws ParameterError if any entry is non-finite.
  explicit Vector(std::vector<double> values);
  Vector(std::initializer_list<double> values);

  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<double> span() noexcept { return data_; }
  std::span<const double> span() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  bool operator==(const Vector&) const = default;

 private:
  std::vector<double> data_;
};

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  /// Row-major entries; throws DimensionError on size mismatch and
  /// ParameterError on non-finite entries.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(const Vector& d);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<double> span() noexcept { return data_; }
  std::span<const double> span() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Basic algebra. All throw DimensionError on shape mismatch.
Matrix transpose(const Matrix& a);
Matrix multiply(const Matrix& a, const Matrix& b);
Vector multiply(const Matrix& a, const Vector& x);
/// aᵀx without forming the transpose.
Vector multiply_transposed(const Matrix& a, const Vector& x);
/// a aᵀ (rows × rows), exploiting symmetry.
Matrix gram_rows(const Matrix& a);
/// aᵀ a (cols × cols), exploiting symmetry.
Matrix gram_cols(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
Vector add(const Vector& a, const Vector& b);
Vector subtract(const Vector& a, const Vector& b);
Vector scale(const Vector& a, double s);
/// y += s * x
void axpy(double s, const Vector& x, Vector& y);
double dot(const Vector& a, const Vector& b);
double norm2(const Vector& a);
double squared_norm(const Vector& a);
double max_abs(const Matrix& a);
double max_abs(const Vector& a);
double max_abs_diff(const Matrix& a, const Matrix& b);
double max_abs_diff(const Vector& a, const Vector& b);
bool all_finite(std::span<const double> values);

/// Solves a x = b for symmetric positive-definite a by Cholesky factorization.
/// Throws NumericError when a is not (numerically) positive definite.
Vector solve_spd(const Matrix& a, const Vector& b);

struct EigenDecomposition {
  Matrix u_matrix;   // columns are eigenvectors
  Vector eigenvalues;  // descending
};

/// Maximum relative asymmetry accepted by the symmetric eigensolvers.
inline constexpr double kSymmetryTolerance = 1e-10;

/// Symmetric eigendecomposition by Householder tridiagonalization followed by
/// implicit-shift QL iteration.
EigenDecomposition sym_eig(const Matrix& a);

/// Symmetric eigendecomposition by cyclic Jacobi rotations. Stops when the
/// off-diagonal Frobenius norm drops below 1e-12 (relative to ‖a‖_F) or after
/// 100 sweeps, whichever comes first; exceeding the cap throws NumericError.
EigenDecomposition sym_eig_jacobi(const Matrix& a);

/// Default regularization added to the eigenvalues before the inverse square root.
inline constexpr double kDefaultEps = 1e-4;

/// C = U (Σ + eps I)^{-1/2} Uᵀ where U Σ Uᵀ = (1/r) J Jᵀ + mu I. Negative
/// eigenvalues from roundoff are clamped to zero before eps is added.
Matrix build_c(const Matrix& j, double r, double mu, double eps);

/// Same as build_c, reusing a decomposition of (1/r) J Jᵀ and adding mu to its
/// spectrum (the eigenvectors of A + mu I equal those of A).
Matrix build_c_from_eig(const EigenDecomposition& scaled_gram, double mu, double eps);

/// C e evaluated through the decomposition without forming C.
Vector apply_c_from_eig(const EigenDecomposition& scaled_gram, double mu, double eps,
                        const Vector& e);

}  // namespace hjbnn
