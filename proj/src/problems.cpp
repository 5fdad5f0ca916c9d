#include "fgd/problems.hpp"

#include <cmath>
#include <string>

namespace fgd {

namespace {

void require_spd_gram(const Matrix& v, const char* op) {
  const EigDecomposition eig = symmetric_eig(matmul(v.transpose(), v));
  for (double lambda : eig.eigenvalues) {
    if (lambda <= 1e-12) {
      throw SingularityError(std::string(op) + ": V^T V has eigenvalue " +
                             std::to_string(lambda) + ", not positive definite");
    }
  }
}

}  // namespace

Problem nearest_orthogonal_problem(const Matrix& v) {
  require_spd_gram(v, "nearest_orthogonal_problem");
  Problem p;
  p.name = "nearest_orthogonal";
  p.n = v.rows();
  p.p = v.cols();
  p.loss_at = [v](const Matrix& w) { return frobenius_norm(w - v); };
  p.grad_at = [v](const Matrix& w) {
    const Matrix diff = w - v;
    const double norm = frobenius_norm(diff);
    if (norm < 1e-300) return Matrix(w.rows(), w.cols());
    return (1.0 / norm) * diff;
  };
  return p;
}

std::pair<Matrix, double> nearest_orthogonal_closed_form(const Matrix& v) {
  const Matrix s = matmul(v.transpose(), v);
  const EigDecomposition eig = symmetric_eig(s);
  for (double lambda : eig.eigenvalues) {
    if (lambda <= 1e-12) {
      throw SingularityError(
          "nearest_orthogonal_closed_form: V^T V nearly singular, eigenvalue " +
          std::to_string(lambda));
    }
  }
  // V D Lambda^{-1/2} D^T
  Matrix scaled = eig.eigenvectors;
  for (std::size_t j = 0; j < scaled.cols(); ++j) {
    const double inv_sqrt = 1.0 / std::sqrt(eig.eigenvalues[j]);
    for (std::size_t i = 0; i < scaled.rows(); ++i) scaled(i, j) *= inv_sqrt;
  }
  Matrix w0 = matmul(v, matmul(scaled, eig.eigenvectors.transpose()));
  const double f0 = frobenius_norm(w0 - v);
  return {std::move(w0), f0};
}

Problem procrustes_problem(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("procrustes_problem: a " + shape_str(a) + " and b " +
                         shape_str(b) + " need matching sample counts");
  }
  Problem p;
  p.name = "procrustes";
  p.n = b.rows();
  p.p = a.rows();
  p.loss_at = [a, b](const Matrix& w) {
    const Matrix r = matmul(w, a) - b;
    return 0.5 * frobenius_inner(r, r);
  };
  p.grad_at = [a, b](const Matrix& w) {
    return matmul(matmul(w, a) - b, a.transpose());
  };
  return p;
}

Problem trace_min_problem(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw DimensionError("trace_min_problem: matrix must be square, got " +
                         shape_str(a));
  }
  const double asym = frobenius_norm(a - a.transpose());
  if (asym > 1e-12 * std::max(1.0, frobenius_norm(a))) {
    throw Error("trace_min_problem: matrix not symmetric, ||A - A^T|| = " +
                std::to_string(asym));
  }
  Problem p;
  p.name = "trace_min";
  p.n = a.rows();
  p.p = 0;  // any p <= n; set by the caller's choice of iterate shape
  p.loss_at = [a](const Matrix& w) {
    return -frobenius_inner(w, matmul(a, w));
  };
  p.grad_at = [a](const Matrix& w) { return -2.0 * matmul(a, w); };
  return p;
}

}  // namespace fgd
