#include "fgd/integrators.hpp"

#include <cmath>
#include <string>

namespace fgd {

namespace {

void require_positive_step(double h, const char* op) {
  if (!(h > 0.0)) throw Error(std::string(op) + ": step size must be positive");
}

void require_finite(const std::pair<Matrix, Matrix>& rate, const char* op) {
  if (!rate.first.all_finite() || !rate.second.all_finite()) {
    throw BlowupError(std::string(op) + ": non-finite field output");
  }
}

void require_finite_state(const State& s, const char* op) {
  if (!s.theta.all_finite() || !s.phi.all_finite()) {
    throw BlowupError(std::string(op) + ": non-finite state");
  }
}

}  // namespace

GradProvider zero_gradient() {
  return [](const Matrix& theta) { return Matrix(theta.rows(), theta.cols()); };
}

State euler_step(const VectorField& field, const State& s, const GradProvider& grad,
                 double h) {
  require_positive_step(h, "euler_step");
  const auto rate = field(s, grad(s.theta));
  require_finite(rate, "euler_step");
  return State(s.theta + h * rate.first, s.phi + h * rate.second);
}

State rk4_step(const VectorField& field, const State& s, const GradProvider& grad,
               double h) {
  require_positive_step(h, "rk4_step");
  const auto k1 = field(s, grad(s.theta));
  const State s2(s.theta + (h / 2.0) * k1.first, s.phi + (h / 2.0) * k1.second);
  const auto k2 = field(s2, grad(s2.theta));
  const State s3(s.theta + (h / 2.0) * k2.first, s.phi + (h / 2.0) * k2.second);
  const auto k3 = field(s3, grad(s3.theta));
  const State s4(s.theta + h * k3.first, s.phi + h * k3.second);
  const auto k4 = field(s4, grad(s4.theta));
  require_finite(k4, "rk4_step");
  const double w = h / 6.0;
  State out(s.theta + w * (k1.first + 2.0 * k2.first + 2.0 * k3.first + k4.first),
            s.phi + w * (k1.second + 2.0 * k2.second + 2.0 * k3.second + k4.second));
  require_finite_state(out, "rk4_step");
  return out;
}

State semi_implicit_step(const VectorField& field, const State& s,
                         const GradProvider& grad, double h) {
  require_positive_step(h, "semi_implicit_step");
  const auto rate1 = field(s, grad(s.theta));
  require_finite(rate1, "semi_implicit_step");
  Matrix theta_new = s.theta + h * rate1.first;
  const State mid(theta_new, s.phi);
  const auto rate2 = field(mid, grad(mid.theta));
  require_finite(rate2, "semi_implicit_step");
  return State(std::move(theta_new), s.phi + h * rate2.second);
}

State semi_implicit_step(const State& s, const GradProvider& grad,
                         const FieldParams& p, double h, PhiGradPoint order) {
  require_positive_step(h, "semi_implicit_step");
  Matrix theta_new = s.theta + h * field_feedback_theta_rate(s, p);
  if (!theta_new.all_finite()) {
    throw BlowupError("semi_implicit_step: non-finite theta update");
  }
  const Matrix g = matmul(theta_new.transpose(), theta_new);
  const double d = frobenius_norm(g - Matrix::identity(theta_new.cols()));
  if (d >= 1.0) {
    throw OffNeighborhoodError(
        "semi_implicit_step: theta update left the inversion neighborhood, "
        "||theta^T theta - I|| = " + std::to_string(d),
        d);
  }
  const State phi_point =
      order == PhiGradPoint::updated_theta ? State(theta_new, s.phi) : s;
  const Matrix phi_rate =
      field_feedback_phi_rate(phi_point, grad(phi_point.theta), p);
  Matrix phi_new = s.phi + h * phi_rate;
  if (!phi_new.all_finite()) {
    throw BlowupError("semi_implicit_step: non-finite phi update");
  }
  return State(std::move(theta_new), std::move(phi_new));
}

Trajectory integrate(const VectorField& field, const State& s0,
                     const GradProvider& grad, double h, double t_end,
                     const Stepper& step, const LyapunovParams& k) {
  require_positive_step(h, "integrate");
  if (!(t_end > 0.0)) throw Error("integrate: t_end must be positive");
  const long n_steps = std::lround(t_end / h);

  Trajectory traj;
  traj.times.reserve(n_steps + 1);
  traj.states.reserve(n_steps + 1);
  traj.v_values.reserve(n_steps + 1);
  traj.distances.reserve(n_steps + 1);

  auto record = [&](double t, const State& s) {
    traj.times.push_back(t);
    traj.v_values.push_back(lyapunov_v(s, k));
    traj.distances.push_back(stiefel_distance(s.theta));
    traj.states.push_back(s);
  };

  State s = s0;
  record(0.0, s);
  for (long i = 0; i < n_steps; ++i) {
    try {
      s = step(field, s, grad, h);
    } catch (const BlowupError& e) {
      throw BlowupError(std::string(e.what()) + " (step " + std::to_string(i + 1) +
                        ", t = " + std::to_string((i + 1) * h) + ")");
    }
    record(static_cast<double>(i + 1) * h, s);
  }
  return traj;
}

}  // namespace fgd
