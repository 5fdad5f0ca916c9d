#pragma once

#include <functional>

#include "fgd/matrix.hpp"

namespace fgd {

/// Central finite-difference gradient of a scalar function of a matrix.
Matrix fd_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x,
                   double h = 1e-6);

/// ||a - b|| / max(1, ||a||): relative gap used by the gradient checks.
double relative_gap(const Matrix& a, const Matrix& b);

}  // namespace fgd
