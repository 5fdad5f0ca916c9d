#pragma once

#include <utility>

#include "fgd/stiefel.hpp"

namespace fgd {

struct FieldParams {
  double eta = 0.1;    // step-size, also appears inside the continuous field
  double gamma = 0.1;  // momentum coefficient
  double alpha = 12.0; // feedback coefficient (0 allowed for control runs)
  InverseMode inverse_mode = InverseMode::exact;
};

void validate(const FieldParams& p);

/// D = -gamma phi - euclid_grad
Matrix drift_d(const State& s, const Matrix& euclid_grad, const FieldParams& p);

/// Momentum system on the tangent bundle:
/// (theta_dot, phi_dot) = (phi, -theta phi^T phi + (D - theta Sym(theta^T D))/eta).
/// Only meaningful near the bundle; rejects states further than 1e-3 off.
std::pair<Matrix, Matrix> field_tangent_bundle(const State& s,
                                               const Matrix& euclid_grad,
                                               const FieldParams& p);

/// Ambient-space extension X of the tangent-bundle field; coincides with it
/// on the bundle and preserves the Lyapunov function V everywhere on the
/// inversion neighborhood.
std::pair<Matrix, Matrix> field_extended_x(const State& s, const Matrix& euclid_grad,
                                           const FieldParams& p);

/// The term subtracted from X to make the tangent bundle attractive:
/// ((alpha/4) theta (I - G^-1), (alpha/4) theta G^-1 (phi^T theta G^-1 + theta^T phi)).
/// Equals alpha * L grad V in exact mode, for any k1, k2.
std::pair<Matrix, Matrix> feedback_term(const State& s, const FieldParams& p);

/// field_extended_x minus feedback_term. Along exact-mode trajectories
/// dV/dt = -alpha V.
std::pair<Matrix, Matrix> field_feedback_full(const State& s,
                                              const Matrix& euclid_grad,
                                              const FieldParams& p);

/// Single components of the full feedback field, used by the semi-implicit
/// scheme (theta first, then phi at the updated theta). They evaluate the
/// same expressions as the paired ops above.
Matrix field_feedback_theta_rate(const State& s, const FieldParams& p);
Matrix field_feedback_phi_rate(const State& s, const Matrix& euclid_grad,
                               const FieldParams& p);

}  // namespace fgd
