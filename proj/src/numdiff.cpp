#include "fgd/numdiff.hpp"

#include <algorithm>

namespace fgd {

Matrix fd_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x,
                   double h) {
  Matrix g(x.rows(), x.cols());
  Matrix probe = x;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const double saved = probe(i, j);
      probe(i, j) = saved + h;
      const double fp = f(probe);
      probe(i, j) = saved - h;
      const double fm = f(probe);
      probe(i, j) = saved;
      g(i, j) = (fp - fm) / (2.0 * h);
    }
  }
  return g;
}

double relative_gap(const Matrix& a, const Matrix& b) {
  return frobenius_norm(a - b) / std::max(1.0, frobenius_norm(a));
}

}  // namespace fgd
