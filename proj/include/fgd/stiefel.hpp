#pragma once

#include <utility>

#include "fgd/matrix.hpp"

namespace fgd {

/// Position on (or near) the Stiefel manifold together with its velocity.
struct State {
  Matrix theta;
  Matrix phi;

  State() = default;
  State(Matrix t, Matrix p);
};

struct LyapunovParams {
  double k1 = 1.0;
  double k2 = 1.0;
};

enum class InverseMode { exact, neumann };

/// m - x Sym(x^T m): projection onto the tangent space at x.
/// Requires x orthonormal within tol_manifold.
Matrix tangent_project(const Matrix& x, const Matrix& m, double tol_manifold = 1e-8);

/// Euclidean gradient projected onto the tangent space at x.
Matrix riemannian_grad(const Matrix& x, const Matrix& euclid_grad,
                       double tol_manifold = 1e-8);

/// ||theta^T theta - I||
double stiefel_distance(const Matrix& theta);

/// ||Sym(theta^T phi)||
double tangency_residual(const State& s);

bool on_bundle(const State& s, double tol_manifold = 1e-8, double tol_tangent = 1e-8);

/// (theta^T theta)^{-1}, exactly or by the first-order Neumann truncation
/// 2I - theta^T theta. Requires ||theta^T theta - I|| < 1; outside that
/// neighborhood the approximation (and the feedback guarantee) is void.
Matrix gram_inverse(const Matrix& theta, InverseMode mode);

/// (k1/4)||theta^T theta - I||^2 + (k2/2)||Sym(theta^T phi)||^2.
/// Zero exactly on the tangent bundle.
double lyapunov_v(const State& s, const LyapunovParams& k = {});

/// Gradient pair (d/dtheta, d/dphi) of lyapunov_v.
std::pair<Matrix, Matrix> lyapunov_grad_v(const State& s, const LyapunovParams& k = {});

/// Applies the block metric operator L(theta, phi) to the stacked pair
/// (v_theta, v_phi) without forming the 2n x 2n matrix. Satisfies
/// <grad V, L grad V> = V on the inversion neighborhood.
std::pair<Matrix, Matrix> metric_l_apply(const State& s, const Matrix& v_theta,
                                         const Matrix& v_phi,
                                         const LyapunovParams& k = {},
                                         InverseMode mode = InverseMode::exact);

/// ||sin(principal angles)||_F between the column spans of two orthonormal
/// bases, from the singular values of q1^T q2.
double principal_angle_distance(const Matrix& q1, const Matrix& q2);

}  // namespace fgd
