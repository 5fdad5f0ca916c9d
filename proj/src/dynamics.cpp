#include "fgd/dynamics.hpp"

#include <cmath>
#include <string>

namespace fgd {

namespace {

void require_shapes(const State& s, const Matrix& g, const char* op) {
  if (!s.theta.same_shape(g)) {
    throw DimensionError(std::string(op) + ": gradient " + shape_str(g) +
                         " does not match state " + shape_str(s.theta));
  }
}

// Shared per-state quantities: G = theta^T theta, its inverse, P = theta^T phi.
struct GramCache {
  Matrix ginv;
  Matrix p;
  Matrix t;  // Sym(P)
};

GramCache make_cache(const State& s, const FieldParams& params) {
  GramCache c{gram_inverse(s.theta, params.inverse_mode),
              matmul(s.theta.transpose(), s.phi), Matrix()};
  c.t = sym(c.p);
  return c;
}

Matrix x_theta(const State& s, const GramCache& c) {
  return s.phi - matmul(s.theta, matmul(c.ginv, c.t));
}

Matrix x_phi(const State& s, const GramCache& c, const Matrix& euclid_grad,
             const FieldParams& params) {
  const Matrix q = matmul(s.phi.transpose(), s.phi);
  const Matrix bracket = matmul(c.ginv, matmul(c.p, c.t)) - q;
  const Matrix d = drift_d(s, euclid_grad, params);
  const Matrix proj_d = d - matmul(s.theta, matmul(c.ginv, sym(matmul(s.theta.transpose(), d))));
  return matmul(s.theta, matmul(c.ginv, bracket)) + (1.0 / params.eta) * proj_d;
}

Matrix fb_theta(const State& s, const GramCache& c, double alpha) {
  const Matrix eye = Matrix::identity(s.theta.cols());
  return (alpha / 4.0) * matmul(s.theta, eye - c.ginv);
}

Matrix fb_phi(const State& s, const GramCache& c, double alpha) {
  const Matrix inner = matmul(c.p.transpose(), c.ginv) + c.p;
  return (alpha / 4.0) * matmul(s.theta, matmul(c.ginv, inner));
}

}  // namespace

void validate(const FieldParams& p) {
  if (!(p.eta > 0.0)) throw ConfigError("FieldParams: eta must be positive");
  if (!(p.gamma >= 0.0)) throw ConfigError("FieldParams: gamma must be nonnegative");
  if (!(p.alpha >= 0.0)) throw ConfigError("FieldParams: alpha must be nonnegative");
}

Matrix drift_d(const State& s, const Matrix& euclid_grad, const FieldParams& p) {
  require_shapes(s, euclid_grad, "drift_d");
  return -p.gamma * s.phi - euclid_grad;
}

std::pair<Matrix, Matrix> field_tangent_bundle(const State& s,
                                               const Matrix& euclid_grad,
                                               const FieldParams& p) {
  require_shapes(s, euclid_grad, "field_tangent_bundle");
  validate(p);
  const double dist = stiefel_distance(s.theta);
  const double tang = tangency_residual(s);
  if (dist > 1e-3 || tang > 1e-3) {
    throw OffNeighborhoodError(
        "field_tangent_bundle: state off the tangent bundle (distance " +
            std::to_string(dist) + ", tangency " + std::to_string(tang) + ")",
        dist);
  }
  const Matrix d = drift_d(s, euclid_grad, p);
  const Matrix proj_d = d - matmul(s.theta, sym(matmul(s.theta.transpose(), d)));
  Matrix phi_dot = -matmul(s.theta, matmul(s.phi.transpose(), s.phi)) +
                   (1.0 / p.eta) * proj_d;
  return {s.phi, std::move(phi_dot)};
}

std::pair<Matrix, Matrix> field_extended_x(const State& s, const Matrix& euclid_grad,
                                           const FieldParams& p) {
  require_shapes(s, euclid_grad, "field_extended_x");
  validate(p);
  const GramCache c = make_cache(s, p);
  return {x_theta(s, c), x_phi(s, c, euclid_grad, p)};
}

std::pair<Matrix, Matrix> feedback_term(const State& s, const FieldParams& p) {
  validate(p);
  const GramCache c = make_cache(s, p);
  return {fb_theta(s, c, p.alpha), fb_phi(s, c, p.alpha)};
}

std::pair<Matrix, Matrix> field_feedback_full(const State& s,
                                              const Matrix& euclid_grad,
                                              const FieldParams& p) {
  require_shapes(s, euclid_grad, "field_feedback_full");
  validate(p);
  const GramCache c = make_cache(s, p);
  return {x_theta(s, c) - fb_theta(s, c, p.alpha),
          x_phi(s, c, euclid_grad, p) - fb_phi(s, c, p.alpha)};
}

Matrix field_feedback_theta_rate(const State& s, const FieldParams& p) {
  validate(p);
  const GramCache c = make_cache(s, p);
  return x_theta(s, c) - fb_theta(s, c, p.alpha);
}

Matrix field_feedback_phi_rate(const State& s, const Matrix& euclid_grad,
                               const FieldParams& p) {
  require_shapes(s, euclid_grad, "field_feedback_phi_rate");
  validate(p);
  const GramCache c = make_cache(s, p);
  return x_phi(s, c, euclid_grad, p) - fb_phi(s, c, p.alpha);
}

}  // namespace fgd
