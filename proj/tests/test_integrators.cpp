#include <doctest.h>

#include <cmath>

#include "fgd/integrators.hpp"
#include "fgd/sampling.hpp"
#include "test_util.hpp"

using namespace fgd;
using test::max_abs_diff;

namespace {

// Scalar test systems embedded as 1x1 states.
const VectorField decay_field = [](const State& s, const Matrix&) {
  return std::pair<Matrix, Matrix>{-1.0 * s.theta, Matrix(1, 1)};
};

const VectorField zero_field = [](const State& s, const Matrix&) {
  return std::pair<Matrix, Matrix>{Matrix(s.theta.rows(), s.theta.cols()),
                                   Matrix(s.theta.rows(), s.theta.cols())};
};

// Harmonic oscillator in momentum form: theta_dot = phi, phi_dot = -theta.
const VectorField oscillator_field = [](const State& s, const Matrix&) {
  return std::pair<Matrix, Matrix>{s.phi, -1.0 * s.theta};
};

State scalar_state(double x, double v = 0.0) {
  Matrix t(1, 1), p(1, 1);
  t(0, 0) = x;
  p(0, 0) = v;
  return State(t, p);
}

double integrate_scalar_final(const Stepper& step, double h) {
  State s = scalar_state(1.0);
  const long n = std::lround(1.0 / h);
  for (long i = 0; i < n; ++i) s = step(decay_field, s, zero_gradient(), h);
  return s.theta(0, 0);
}

}  // namespace

TEST_SUITE("integrators") {

TEST_CASE("euler_step basics and first-order convergence") {
  const State s0 = scalar_state(2.5, -1.5);
  const State unchanged = euler_step(zero_field, s0, zero_gradient(), 0.1);
  CHECK(unchanged.theta(0, 0) == 2.5);
  CHECK(unchanged.phi(0, 0) == -1.5);

  const State one = euler_step(decay_field, scalar_state(1.0), zero_gradient(), 0.1);
  CHECK(one.theta(0, 0) == doctest::Approx(0.9).epsilon(1e-15));

  const double exact = std::exp(-1.0);
  const double e1 = std::abs(integrate_scalar_final(euler_step, 1e-3) - exact);
  const double e2 = std::abs(integrate_scalar_final(euler_step, 5e-4) - exact);
  CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("rk4_step matches the fourth-order Taylor value and converges at "
          "order four") {
  const State unchanged = rk4_step(zero_field, scalar_state(3.0), zero_gradient(), 0.2);
  CHECK(unchanged.theta(0, 0) == 3.0);

  const State one = rk4_step(decay_field, scalar_state(1.0), zero_gradient(), 0.1);
  CHECK(one.theta(0, 0) == doctest::Approx(0.9048375).epsilon(1e-10));

  const double exact = std::exp(-1.0);
  const double e1 = std::abs(integrate_scalar_final(rk4_step, 2e-2) - exact);
  const double e2 = std::abs(integrate_scalar_final(rk4_step, 1e-2) - exact);
  CHECK(e1 / e2 >= 12.0);
  CHECK(e1 / e2 <= 20.0);
}

TEST_CASE("generic semi-implicit step keeps oscillator energy bounded while "
          "explicit Euler grows it monotonically") {
  const double h = 0.01;
  const int steps = 10000;
  auto energy = [](const State& s) {
    return 0.5 * (s.theta(0, 0) * s.theta(0, 0) + s.phi(0, 0) * s.phi(0, 0));
  };

  State si = scalar_state(1.0, 0.0);
  const double e0 = energy(si);
  double max_dev = 0.0;
  for (int i = 0; i < steps; ++i) {
    si = semi_implicit_step(oscillator_field, si, zero_gradient(), h);
    max_dev = std::max(max_dev, std::abs(energy(si) - e0));
  }
  CHECK(max_dev <= 0.02 * e0);

  State ee = scalar_state(1.0, 0.0);
  double prev = energy(ee);
  bool monotone = true;
  for (int i = 0; i < steps; ++i) {
    ee = euler_step(oscillator_field, ee, zero_gradient(), h);
    const double e = energy(ee);
    if (e < prev) monotone = false;
    prev = e;
  }
  CHECK(monotone);
  CHECK(prev >= 2.0 * e0);
}

TEST_CASE("feedback-field semi-implicit step composes the published update "
          "exactly") {
  Rng rng(21);
  const State s = random_state_on_bundle(5, 3, rng);
  const Matrix g0 = random_matrix(5, 3, rng);
  const GradProvider grad = [&g0](const Matrix& th) {
    return 0.5 * g0 + 0.1 * th;  // smooth theta-dependent gradient
  };
  const FieldParams p{0.1, 0.1, 12.0, InverseMode::neumann};
  const double h = p.eta;

  // the two update lines, written out from the public field ops
  const Matrix xt = field_extended_x(s, grad(s.theta), p).first;
  const Matrix ft = feedback_term(s, p).first;
  const Matrix theta_new = s.theta + h * (xt - ft);
  const State mid(theta_new, s.phi);
  const Matrix xp = field_extended_x(mid, grad(theta_new), p).second;
  const Matrix fp = feedback_term(mid, p).second;
  const Matrix phi_new = s.phi + h * (xp - fp);

  const State stepped = semi_implicit_step(s, grad, p, h);
  CHECK(max_abs_diff(stepped.theta, theta_new) == 0.0);
  CHECK(max_abs_diff(stepped.phi, phi_new) == 0.0);
}

TEST_CASE("feedback-field semi-implicit step holds equilibria") {
  const Matrix u = random_orthonormal(5, 3, 22);
  const State s(u, Matrix(5, 3));
  const State next = semi_implicit_step(s, zero_gradient(),
                                        FieldParams{0.1, 0.1, 12.0, InverseMode::neumann},
                                        0.1);
  CHECK(max_abs_diff(next.theta, s.theta) <= 1e-13);
  CHECK(max_abs_diff(next.phi, s.phi) <= 1e-13);
}

TEST_CASE("phi update point flag switches between old and new theta") {
  Rng rng(23);
  const State s = random_state_on_bundle(5, 3, rng);
  const GradProvider grad = [](const Matrix& th) { return 0.2 * th; };
  const FieldParams p{0.1, 0.1, 12.0, InverseMode::neumann};
  const State a = semi_implicit_step(s, grad, p, 0.1, PhiGradPoint::updated_theta);
  const State b = semi_implicit_step(s, grad, p, 0.1, PhiGradPoint::original_theta);
  CHECK(max_abs_diff(a.theta, b.theta) == 0.0);  // theta line is shared
  CHECK(frobenius_norm(a.phi - b.phi) > 0.0);
}

TEST_CASE("integrate records, reproduces, and reports blowups with context") {
  const State s0 = scalar_state(1.0, 0.0);
  const Trajectory t1 = integrate(zero_field, s0, zero_gradient(), 0.1, 1.0, euler_step);
  CHECK(t1.times.size() == 11);
  for (double v : t1.distances) CHECK(v == t1.distances.front());

  const Trajectory t2 = integrate(decay_field, s0, zero_gradient(), 1e-2, 1.0, rk4_step);
  const Trajectory t3 = integrate(decay_field, s0, zero_gradient(), 1e-2, 1.0, rk4_step);
  REQUIRE(t2.states.size() == t3.states.size());
  for (std::size_t i = 0; i < t2.states.size(); ++i) {
    CHECK(t2.states[i].theta(0, 0) == t3.states[i].theta(0, 0));
  }

  const VectorField exploding = [](const State& s, const Matrix&) {
    return std::pair<Matrix, Matrix>{1e200 * s.theta, Matrix(1, 1)};
  };
  CHECK_THROWS_WITH_AS(
      integrate(exploding, scalar_state(1e200), zero_gradient(), 1.0, 5.0, euler_step),
      doctest::Contains("step"), BlowupError);
}

TEST_CASE("exponential decay of V along the full feedback field") {
  Rng rng(24);
  const Matrix base = random_orthonormal(5, 3, rng);
  Matrix e_t = random_matrix(5, 3, rng);
  e_t *= 0.02 / frobenius_norm(e_t);
  Matrix e_p = random_matrix(5, 3, rng);
  e_p *= 0.02 / frobenius_norm(e_p);
  const State s0(base + e_t, e_p);
  const double v0 = lyapunov_v(s0);
  REQUIRE(v0 >= 1e-4);
  REQUIRE(v0 <= 1e-2);

  const FieldParams p{1.0, 0.0, 5.0, InverseMode::exact};
  const VectorField field = [&p](const State& s, const Matrix& g) {
    return field_feedback_full(s, g, p);
  };
  const Trajectory traj = integrate(field, s0, zero_gradient(), 1e-3, 1.0, rk4_step);
  double max_log_err = 0.0;
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const double predicted = std::log(v0) - p.alpha * traj.times[i];
    max_log_err = std::max(max_log_err,
                           std::abs(std::log(traj.v_values[i]) - predicted));
  }
  CHECK(max_log_err <= 1e-3);
}

TEST_CASE("forward invariance of sublevel sets") {
  Rng rng(25);
  const Matrix base = random_orthonormal(5, 3, rng);
  Matrix e_t = random_matrix(5, 3, rng);
  e_t *= 0.25 / frobenius_norm(e_t);
  Matrix phi = random_matrix(5, 3, rng);
  phi *= 0.4 / frobenius_norm(phi);
  const State s0(base + e_t, phi);
  const double c = 0.2;  // < k1/4 with k1 = 1
  REQUIRE(lyapunov_v(s0) <= c);

  const FieldParams p{0.5, 0.2, 3.0, InverseMode::exact};
  const VectorField field = [&p](const State& s, const Matrix& g) {
    return field_feedback_full(s, g, p);
  };
  const Trajectory traj = integrate(field, s0, zero_gradient(), 1e-3, 1.0, rk4_step);
  for (double v : traj.v_values) CHECK(v <= c * (1.0 + 1e-6));
}

}  // TEST_SUITE
