#include "fgd/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace fgd {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a) +
                         " vs " + shape_str(b));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
  if (rows == 0 || cols == 0) {
    throw DimensionError("Matrix: dimensions must be positive, got " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  if (r == 0) throw DimensionError("Matrix::from_rows: empty row list");
  const std::size_t c = rows.begin()->size();
  Matrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) {
      throw DimensionError("Matrix::from_rows: ragged row " + std::to_string(i));
    }
    std::size_t j = 0;
    for (double v : row) {
      if (!std::isfinite(v)) {
        throw Error("Matrix::from_rows: non-finite entry at (" +
                    std::to_string(i) + "," + std::to_string(j) + ")");
      }
      m(i, j) = v;
      ++j;
    }
    ++i;
  }
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

bool Matrix::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

Matrix& Matrix::operator+=(const Matrix& o) {
  require_same_shape(*this, o, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
  require_same_shape(*this, o, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

std::string shape_str(const Matrix& m) {
  std::ostringstream os;
  os << "(" << m.rows() << "x" << m.cols() << ")";
  return os.str();
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  Matrix r = a;
  r += b;
  return r;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  Matrix r = a;
  r -= b;
  return r;
}

Matrix operator-(const Matrix& a) {
  Matrix r = a;
  r *= -1.0;
  return r;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix r = a;
  r *= s;
  return r;
}

Matrix operator*(const Matrix& a, double s) { return s * a; }

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_str(a) +
                         " x " + shape_str(b));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Matrix c(m, n);
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  // i,k,j order: for each output entry the inner index still accumulates in
  // ascending order, matching a plain i,j,k triple loop bit for bit.
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = pa + i * k;
    double* crow = pc + i * n;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double aik = arow[kk];
      const double* brow = pb + kk * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

double frobenius_inner(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "frobenius_inner");
  const double* pa = a.data();
  const double* pb = b.data();
  double s = 0.0;
  const std::size_t total = a.rows() * a.cols();
  for (std::size_t i = 0; i < total; ++i) s += pa[i] * pb[i];
  return s;
}

double frobenius_norm(const Matrix& a) { return std::sqrt(frobenius_inner(a, a)); }

Matrix sym(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw DimensionError("sym: matrix must be square, got " + shape_str(a));
  }
  const std::size_t n = a.rows();
  Matrix r(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    r(i, i) = a(i, i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = 0.5 * (a(i, j) + a(j, i));
      r(i, j) = v;
      r(j, i) = v;
    }
  }
  return r;
}

namespace {

double off_diagonal_norm(const Matrix& a) {
  const std::size_t n = a.rows();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
  return std::sqrt(s);
}

}  // namespace

EigDecomposition symmetric_eig(const Matrix& s, double tol, int max_sweeps) {
  if (s.rows() != s.cols()) {
    throw DimensionError("symmetric_eig: matrix must be square, got " + shape_str(s));
  }
  if (tol <= 0.0) throw Error("symmetric_eig: tol must be positive");
  const std::size_t n = s.rows();
  const double input_norm = frobenius_norm(s);
  const double asym = frobenius_norm(s - s.transpose());
  if (asym > 1e-12 * std::max(1.0, input_norm)) {
    throw Error("symmetric_eig: input not symmetric, ||A - A^T|| = " +
                std::to_string(asym));
  }

  Matrix a = sym(s);  // exact symmetry for the rotation updates
  Matrix q = Matrix::identity(n);

  bool converged = false;
  double off = off_diagonal_norm(a);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    if (off <= tol * input_norm) {
      converged = true;
      break;
    }
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t r = p + 1; r < n; ++r) {
        const double apr = a(p, r);
        if (apr == 0.0) continue;
        const double app = a(p, p);
        const double arr = a(r, r);
        const double tau = (arr - app) / (2.0 * apr);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = t * c;
        // A <- J^T A J with J the (p,r) rotation
        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == r) continue;
          const double akp = a(k, p);
          const double akr = a(k, r);
          a(k, p) = a(p, k) = c * akp - sn * akr;
          a(k, r) = a(r, k) = sn * akp + c * akr;
        }
        a(p, p) = app - t * apr;
        a(r, r) = arr + t * apr;
        a(p, r) = a(r, p) = 0.0;
        // Q <- Q J
        for (std::size_t k = 0; k < n; ++k) {
          const double qkp = q(k, p);
          const double qkr = q(k, r);
          q(k, p) = c * qkp - sn * qkr;
          q(k, r) = sn * qkp + c * qkr;
        }
      }
    }
    off = off_diagonal_norm(a);
  }
  if (!converged && off > tol * input_norm) {
    throw ConvergenceError("symmetric_eig: no convergence after " +
                               std::to_string(max_sweeps) +
                               " sweeps, off-diagonal residual " +
                               std::to_string(off),
                           off);
  }

  // Stable descending sort; keeps Jacobi output order among equal eigenvalues.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

  EigDecomposition out;
  out.eigenvalues.resize(n);
  out.eigenvectors = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t src = order[j];
    out.eigenvalues[j] = a(src, src);
    // Sign convention: first largest-magnitude entry of each column positive.
    std::size_t imax = 0;
    double vmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double av = std::abs(q(i, src));
      if (av > vmax) {
        vmax = av;
        imax = i;
      }
    }
    const double sign = q(imax, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, j) = sign * q(i, src);
  }
  return out;
}

Matrix invert_spd(const Matrix& s) {
  const EigDecomposition eig = symmetric_eig(s);
  const std::size_t n = s.rows();
  for (double lambda : eig.eigenvalues) {
    if (lambda <= 1e-12) {
      throw SingularityError("invert_spd: eigenvalue " + std::to_string(lambda) +
                             " below positive-definite threshold");
    }
  }
  // Q diag(1/lambda) Q^T
  Matrix scaled = eig.eigenvectors;
  for (std::size_t j = 0; j < n; ++j) {
    const double inv = 1.0 / eig.eigenvalues[j];
    for (std::size_t i = 0; i < n; ++i) scaled(i, j) *= inv;
  }
  return matmul(scaled, eig.eigenvectors.transpose());
}

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t x = seed;
  for (auto& s : state_) s = splitmix64(x);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * 3.14159265358979323846 * u2;
  spare_ = r * std::sin(t);
  has_spare_ = true;
  return r * std::cos(t);
}

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

namespace {

// Modified Gram-Schmidt with one re-orthogonalization pass. Returns false on
// rank deficiency.
bool orthonormalize_columns(Matrix& a) {
  const std::size_t n = a.rows(), p = a.cols();
  for (std::size_t j = 0; j < p; ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < j; ++i) {
        double dot = 0.0;
        for (std::size_t r = 0; r < n; ++r) dot += a(r, i) * a(r, j);
        for (std::size_t r = 0; r < n; ++r) a(r, j) -= dot * a(r, i);
      }
    }
    double norm = 0.0;
    for (std::size_t r = 0; r < n; ++r) norm += a(r, j) * a(r, j);
    norm = std::sqrt(norm);
    if (norm < 1e-10) return false;
    for (std::size_t r = 0; r < n; ++r) a(r, j) /= norm;
  }
  return true;
}

double gram_identity_gap(const Matrix& a) {
  const Matrix g = matmul(a.transpose(), a);
  return frobenius_norm(g - Matrix::identity(a.cols()));
}

}  // namespace

Matrix random_orthonormal(std::size_t n, std::size_t p, std::uint64_t seed) {
  if (n < p) {
    throw DimensionError("random_orthonormal: need n >= p, got n=" +
                         std::to_string(n) + ", p=" + std::to_string(p));
  }
  for (std::uint64_t attempt = 0; attempt < 5; ++attempt) {
    Rng rng(seed + attempt);
    Matrix a = random_matrix(n, p, rng);
    if (!orthonormalize_columns(a)) continue;
    if (gram_identity_gap(a) <= 1e-12) return a;
  }
  throw Error("random_orthonormal: rank-deficient draw after 5 retries (seed " +
              std::to_string(seed) + ")");
}

Matrix random_orthonormal(std::size_t n, std::size_t p, Rng& rng) {
  if (n < p) {
    throw DimensionError("random_orthonormal: need n >= p, got n=" +
                         std::to_string(n) + ", p=" + std::to_string(p));
  }
  for (int attempt = 0; attempt < 5; ++attempt) {
    Matrix a = random_matrix(n, p, rng);
    if (!orthonormalize_columns(a)) continue;
    if (gram_identity_gap(a) <= 1e-12) return a;
  }
  throw Error("random_orthonormal: rank-deficient draw after 5 retries");
}

}  // namespace fgd
