#pragma once

#include <functional>
#include <string>
#include <utility>

#include "fgd/matrix.hpp"

namespace fgd {

/// A differentiable objective over n x p matrices.
struct Problem {
  std::string name;
  std::size_t n = 0;
  std::size_t p = 0;
  std::function<double(const Matrix&)> loss_at;
  std::function<Matrix(const Matrix&)> grad_at;
};

/// f(W) = ||W - V|| with gradient (W - V)/||W - V|| (zero at W = V).
/// Requires V^T V positive definite.
Problem nearest_orthogonal_problem(const Matrix& v);

/// Polar factor of V and the minimal distance: W0 = V D Lambda^{-1/2} D^T
/// from the eigendecomposition of S = V^T V, f0 = ||W0 - V||.
std::pair<Matrix, double> nearest_orthogonal_closed_form(const Matrix& v);

/// loss = 0.5 ||W a - b||^2, gradient (W a - b) a^T.
Problem procrustes_problem(const Matrix& a, const Matrix& b);

/// loss = -tr(W^T A W), gradient -2 A W; minimized over St(n,p) by the
/// leading p-dimensional eigenspace of the symmetric matrix A.
Problem trace_min_problem(const Matrix& a);

}  // namespace fgd
