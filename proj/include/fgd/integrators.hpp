#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "fgd/dynamics.hpp"

namespace fgd {

/// A time derivative (theta_dot, phi_dot) of a State, given the Euclidean
/// gradient at the state's theta.
using VectorField =
    std::function<std::pair<Matrix, Matrix>(const State&, const Matrix&)>;

/// Euclidean gradient of the objective at a point.
using GradProvider = std::function<Matrix(const Matrix&)>;

/// Gradient provider that always returns zero (frozen-gradient runs).
GradProvider zero_gradient();

struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  std::vector<double> v_values;
  std::vector<double> distances;
};

State euler_step(const VectorField& field, const State& s, const GradProvider& grad,
                 double h);

/// Classical 4-stage Runge-Kutta step.
State rk4_step(const VectorField& field, const State& s, const GradProvider& grad,
               double h);

/// Generic semi-implicit Euler: theta advances with the field at (theta, phi),
/// phi advances with the field at (theta_new, phi), gradient re-evaluated at
/// theta_new.
State semi_implicit_step(const VectorField& field, const State& s,
                         const GradProvider& grad, double h);

/// Which theta the phi-update line reads. updated_theta is the semi-implicit
/// order matching the discrete momentum update; original_theta makes the
/// whole step explicit.
enum class PhiGradPoint { updated_theta, original_theta };

/// Semi-implicit Euler step of the full feedback field. theta first, from the
/// current pair; then phi, with field and gradient taken at the updated theta
/// (default; PhiGradPoint::original_theta keeps the old one).
State semi_implicit_step(const State& s, const GradProvider& grad,
                         const FieldParams& p, double h,
                         PhiGradPoint order = PhiGradPoint::updated_theta);

using Stepper = std::function<State(const VectorField&, const State&,
                                    const GradProvider&, double)>;

/// Repeated stepping from t = 0 to t_end, recording V and the Stiefel
/// distance at every node including the start. Deterministic.
Trajectory integrate(const VectorField& field, const State& s0,
                     const GradProvider& grad, double h, double t_end,
                     const Stepper& step, const LyapunovParams& k = {});

}  // namespace fgd
