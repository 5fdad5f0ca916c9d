#include "fgd/stiefel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fgd {

State::State(Matrix t, Matrix p) : theta(std::move(t)), phi(std::move(p)) {
  if (!theta.same_shape(phi)) {
    throw DimensionError("State: theta " + shape_str(theta) + " and phi " +
                         shape_str(phi) + " must share shape");
  }
}

Matrix tangent_project(const Matrix& x, const Matrix& m, double tol_manifold) {
  if (!x.same_shape(m)) {
    throw DimensionError("tangent_project: shape mismatch " + shape_str(x) +
                         " vs " + shape_str(m));
  }
  const double d = stiefel_distance(x);
  if (d > tol_manifold) {
    throw OffNeighborhoodError(
        "tangent_project: base point off the manifold, ||x^T x - I|| = " +
            std::to_string(d),
        d);
  }
  return m - matmul(x, sym(matmul(x.transpose(), m)));
}

Matrix riemannian_grad(const Matrix& x, const Matrix& euclid_grad, double tol_manifold) {
  return tangent_project(x, euclid_grad, tol_manifold);
}

double stiefel_distance(const Matrix& theta) {
  if (theta.rows() < theta.cols()) {
    throw DimensionError("stiefel_distance: need n >= p, got " + shape_str(theta));
  }
  const Matrix g = matmul(theta.transpose(), theta);
  return frobenius_norm(g - Matrix::identity(theta.cols()));
}

double tangency_residual(const State& s) {
  return frobenius_norm(sym(matmul(s.theta.transpose(), s.phi)));
}

bool on_bundle(const State& s, double tol_manifold, double tol_tangent) {
  return stiefel_distance(s.theta) <= tol_manifold &&
         tangency_residual(s) <= tol_tangent;
}

Matrix gram_inverse(const Matrix& theta, InverseMode mode) {
  const Matrix g = matmul(theta.transpose(), theta);
  const Matrix eye = Matrix::identity(theta.cols());
  const double d = frobenius_norm(g - eye);
  if (d >= 1.0) {
    throw OffNeighborhoodError(
        "gram_inverse: ||theta^T theta - I|| = " + std::to_string(d) +
            " >= 1; outside the neighborhood where the inverse "
            "approximation and the feedback construction are valid",
        d);
  }
  if (mode == InverseMode::neumann) {
    return 2.0 * eye - g;
  }
  return invert_spd(g);
}

namespace {

void require_positive(const LyapunovParams& k, const char* op) {
  if (!(k.k1 > 0.0 && k.k2 > 0.0)) {
    throw ConfigError(std::string(op) + ": k1 and k2 must be positive");
  }
}

}  // namespace

double lyapunov_v(const State& s, const LyapunovParams& k) {
  require_positive(k, "lyapunov_v");
  const Matrix g = matmul(s.theta.transpose(), s.theta);
  const double dist = frobenius_norm(g - Matrix::identity(s.theta.cols()));
  const double tang = tangency_residual(s);
  return 0.25 * k.k1 * dist * dist + 0.5 * k.k2 * tang * tang;
}

std::pair<Matrix, Matrix> lyapunov_grad_v(const State& s, const LyapunovParams& k) {
  require_positive(k, "lyapunov_grad_v");
  const Matrix g = matmul(s.theta.transpose(), s.theta);
  const Matrix a = g - Matrix::identity(s.theta.cols());
  const Matrix t = sym(matmul(s.theta.transpose(), s.phi));
  Matrix grad_theta = k.k1 * matmul(s.theta, a) + k.k2 * matmul(s.phi, t);
  Matrix grad_phi = k.k2 * matmul(s.theta, t);
  return {std::move(grad_theta), std::move(grad_phi)};
}

std::pair<Matrix, Matrix> metric_l_apply(const State& s, const Matrix& v_theta,
                                         const Matrix& v_phi,
                                         const LyapunovParams& k, InverseMode mode) {
  require_positive(k, "metric_l_apply");
  if (!s.theta.same_shape(v_theta) || !s.theta.same_shape(v_phi)) {
    throw DimensionError("metric_l_apply: vector shapes must match the state");
  }
  const Matrix& theta = s.theta;
  const Matrix& phi = s.phi;
  const Matrix ginv = gram_inverse(theta, mode);
  const Matrix ginv2 = matmul(ginv, ginv);  // same mode on both factors
  const Matrix p = matmul(theta.transpose(), phi);

  const Matrix tt_vt = matmul(theta.transpose(), v_theta);
  const Matrix tt_vp = matmul(theta.transpose(), v_phi);
  const double c1 = 1.0 / (4.0 * k.k1);
  const double c2 = 1.0 / (2.0 * k.k2);

  // Top block row: (1/4k1) theta G^-2 theta^T  and  L1 = -(1/4k1) theta G^-2 theta^T phi G^-1 theta^T
  Matrix top_bracket = c1 * matmul(ginv2, tt_vt) -
                       c1 * matmul(ginv2, matmul(p, matmul(ginv, tt_vp)));
  // Bottom block row: L1^T = -(1/4k1) theta G^-1 phi^T theta G^-2 theta^T  and
  // L2 = (1/4k1) theta G^-1 phi^T theta G^-2 theta^T phi G^-1 theta^T + (1/2k2) theta G^-2 theta^T
  const Matrix pt = p.transpose();
  Matrix bottom_bracket =
      -c1 * matmul(ginv, matmul(pt, matmul(ginv2, tt_vt))) +
      c1 * matmul(ginv, matmul(pt, matmul(ginv2, matmul(p, matmul(ginv, tt_vp))))) +
      c2 * matmul(ginv2, tt_vp);

  return {matmul(theta, top_bracket), matmul(theta, bottom_bracket)};
}

double principal_angle_distance(const Matrix& q1, const Matrix& q2) {
  if (!q1.same_shape(q2)) {
    throw DimensionError("principal_angle_distance: shape mismatch " +
                         shape_str(q1) + " vs " + shape_str(q2));
  }
  const Matrix m = matmul(q1.transpose(), q2);
  const EigDecomposition eig = symmetric_eig(matmul(m.transpose(), m));
  double sum_sin2 = 0.0;
  for (double lambda : eig.eigenvalues) {
    const double cos2 = std::clamp(lambda, 0.0, 1.0);  // singular value squared
    sum_sin2 += 1.0 - cos2;
  }
  return std::sqrt(std::max(0.0, sum_sin2));
}

}  // namespace fgd
