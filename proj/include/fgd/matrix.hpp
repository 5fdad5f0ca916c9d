#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <vector>

#include "fgd/errors.hpp"

namespace fgd {

/// Dense row-major matrix of 64-bit reals. All operations use a fixed loop
/// order so results are reproducible run to run.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);  // zero-filled

  static Matrix identity(std::size_t n);
  // Builds from nested lists and rejects non-finite entries and ragged rows.
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  Matrix transpose() const;
  bool all_finite() const;

  Matrix& operator+=(const Matrix& o);
  Matrix& operator-=(const Matrix& o);
  Matrix& operator*=(double s);

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

std::string shape_str(const Matrix& m);

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a);
Matrix operator*(double s, const Matrix& a);
Matrix operator*(const Matrix& a, double s);

/// Matrix product with a fixed accumulation order: each entry sums over the
/// inner index in ascending order, so two implementations that follow the
/// same convention agree bit for bit.
Matrix matmul(const Matrix& a, const Matrix& b);
inline Matrix operator*(const Matrix& a, const Matrix& b) { return matmul(a, b); }

/// tr(a^T b)
double frobenius_inner(const Matrix& a, const Matrix& b);
double frobenius_norm(const Matrix& a);

/// (a + a^T)/2, computed once per (i,j) pair and mirrored so the result is
/// exactly symmetric.
Matrix sym(const Matrix& a);

struct EigDecomposition {
  std::vector<double> eigenvalues;  // sorted descending
  Matrix eigenvectors;              // orthonormal columns, matching order
};

/// Symmetric eigendecomposition by cyclic Jacobi rotations, iterated until
/// the off-diagonal Frobenius norm drops below tol * ||input||. Eigenvalues
/// are sorted descending (stable among ties); each eigenvector is signed so
/// its first largest-magnitude entry is positive.
EigDecomposition symmetric_eig(const Matrix& s, double tol = 1e-14, int max_sweeps = 100);

/// Exact inverse of a symmetric positive definite matrix via symmetric_eig.
Matrix invert_spd(const Matrix& s);

/// xoshiro256++ seeded through splitmix64. Fixed in the implementation so
/// every experiment replays exactly for a given seed.
class Rng {
public:
  explicit Rng(std::uint64_t seed);
  std::uint64_t next_u64();
  double uniform();  // [0, 1)
  double normal();   // standard normal (Box-Muller, pair cached)

private:
  std::array<std::uint64_t, 4> state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng);

/// Random n x p matrix with orthonormal columns: seeded standard normals,
/// modified Gram-Schmidt with one re-orthogonalization pass. Deterministic
/// per seed; retries with an incremented sub-seed on rank deficiency.
Matrix random_orthonormal(std::size_t n, std::size_t p, std::uint64_t seed);
Matrix random_orthonormal(std::size_t n, std::size_t p, Rng& rng);

}  // namespace fgd
