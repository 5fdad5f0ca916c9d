#include "fgd/optimizer.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace fgd {

void validate(const FgdConfig& cfg) {
  if (!(cfg.eta > 0.0)) throw ConfigError("FgdConfig: eta must be positive");
  if (!(cfg.gamma >= 0.0)) throw ConfigError("FgdConfig: gamma must be nonnegative");
  if (!(cfg.alpha >= 0.0)) throw ConfigError("FgdConfig: alpha must be nonnegative");
  if (!(cfg.drift_abort > 0.0 && cfg.drift_abort < 1.0)) {
    throw ConfigError("FgdConfig: drift_abort must lie in (0, 1)");
  }
  if (!(cfg.k.k1 > 0.0 && cfg.k.k2 > 0.0)) {
    throw ConfigError("FgdConfig: k1, k2 must be positive");
  }
}

FieldParams field_params(const FgdConfig& cfg) {
  return FieldParams{cfg.eta, cfg.gamma, cfg.alpha, cfg.inverse_mode};
}

State fgd_init(const Matrix& theta0, const Matrix& euclid_grad) {
  if (!theta0.same_shape(euclid_grad)) {
    throw DimensionError("fgd_init: gradient " + shape_str(euclid_grad) +
                         " does not match theta " + shape_str(theta0));
  }
  const double d = stiefel_distance(theta0);
  if (d > 1e-10) {
    throw OffNeighborhoodError(
        "fgd_init: theta0 not orthonormal, ||theta^T theta - I|| = " +
            std::to_string(d),
        d);
  }
  Matrix phi = matmul(theta0, sym(matmul(theta0.transpose(), euclid_grad))) -
               euclid_grad;
  return State(theta0, std::move(phi));
}

namespace {

[[noreturn]] void throw_drift_abort(const char* when, const State& s, double d,
                                    const LyapunovParams& k) {
  const double v = lyapunov_v(s, k);
  const double phi_norm = frobenius_norm(s.phi);
  throw DriftAbortError(std::string("fgd_step: drift abort ") + when +
                            " (distance " + std::to_string(d) + ", V " +
                            std::to_string(v) + ", ||phi|| " +
                            std::to_string(phi_norm) + ")",
                        d, v, phi_norm);
}

}  // namespace

State fgd_step(const State& s, const GradProvider& grad, const FgdConfig& cfg) {
  validate(cfg);
  const double d_before = stiefel_distance(s.theta);
  if (d_before >= cfg.drift_abort) throw_drift_abort("before step", s, d_before, cfg.k);
  State next = semi_implicit_step(s, grad, field_params(cfg), cfg.eta,
                                  cfg.phi_grad_point);
  const double d_after = stiefel_distance(next.theta);
  if (d_after >= cfg.drift_abort) throw_drift_abort("after step", next, d_after, cfg.k);
  return next;
}

std::pair<Matrix, Matrix> sgd_momentum_step(const Matrix& value,
                                            const Matrix& momentum,
                                            const GradProvider& grad, double eta,
                                            double gamma) {
  if (!value.same_shape(momentum)) {
    throw DimensionError("sgd_momentum_step: value " + shape_str(value) +
                         " and momentum " + shape_str(momentum) + " differ");
  }
  Matrix new_value = value + eta * momentum;
  const Matrix g = grad(new_value);
  if (!g.same_shape(value)) {
    throw DimensionError("sgd_momentum_step: gradient " + shape_str(g) +
                         " does not match value " + shape_str(value));
  }
  Matrix new_momentum = (1.0 - gamma) * momentum - g;
  return {std::move(new_value), std::move(new_momentum)};
}

std::pair<std::size_t, std::size_t> reshape_conv_param(const ConvShape& shape) {
  return {shape.c_i * shape.k1 * shape.k2, shape.c_o};
}

bool should_orthogonalize(const ConvShape& shape) {
  return shape.c_i * shape.k1 * shape.k2 >= shape.c_o &&
         std::min(shape.k1, shape.k2) > 1;
}

Matrix flatten_conv_param(const std::vector<double>& tensor, const ConvShape& shape) {
  const auto [n, p] = reshape_conv_param(shape);
  if (tensor.size() != n * p) {
    throw DimensionError("flatten_conv_param: tensor has " +
                         std::to_string(tensor.size()) + " entries, shape needs " +
                         std::to_string(n * p));
  }
  Matrix m(n, p);
  for (std::size_t o = 0; o < shape.c_o; ++o) {
    for (std::size_t i = 0; i < shape.c_i; ++i) {
      for (std::size_t a = 0; a < shape.k1; ++a) {
        for (std::size_t b = 0; b < shape.k2; ++b) {
          const std::size_t row = (i * shape.k1 + a) * shape.k2 + b;
          m(row, o) = tensor[((o * shape.c_i + i) * shape.k1 + a) * shape.k2 + b];
        }
      }
    }
  }
  return m;
}

std::vector<double> unflatten_conv_param(const Matrix& m, const ConvShape& shape) {
  const auto [n, p] = reshape_conv_param(shape);
  if (m.rows() != n || m.cols() != p) {
    throw DimensionError("unflatten_conv_param: matrix " + shape_str(m) +
                         " does not match reshaped dims (" + std::to_string(n) +
                         "x" + std::to_string(p) + ")");
  }
  std::vector<double> tensor(n * p);
  for (std::size_t o = 0; o < shape.c_o; ++o) {
    for (std::size_t i = 0; i < shape.c_i; ++i) {
      for (std::size_t a = 0; a < shape.k1; ++a) {
        for (std::size_t b = 0; b < shape.k2; ++b) {
          const std::size_t row = (i * shape.k1 + a) * shape.k2 + b;
          tensor[((o * shape.c_i + i) * shape.k1 + a) * shape.k2 + b] = m(row, o);
        }
      }
    }
  }
  return tensor;
}

namespace {

GroupDiagnostics diagnostics_for(const ParamGroup& g, const LyapunovParams& k) {
  GroupDiagnostics d;
  if (g.state.theta.rows() >= g.state.theta.cols()) {
    d.stiefel_dist = stiefel_distance(g.state.theta);
    d.v_value = lyapunov_v(g.state, k);
  } else {
    d.stiefel_dist = std::numeric_limits<double>::quiet_NaN();
    d.v_value = std::numeric_limits<double>::quiet_NaN();
  }
  return d;
}

}  // namespace

std::vector<GroupDiagnostics> optimizer_apply(std::vector<ParamGroup>& groups,
                                              const MultiGradProvider& grads,
                                              const FgdConfig& cfg, double eta_now) {
  validate(cfg);
  if (!(eta_now > 0.0)) throw ConfigError("optimizer_apply: eta_now must be positive");
  if (groups.empty()) return {};

  FgdConfig step_cfg = cfg;
  step_cfg.eta = eta_now;
  const FieldParams fp = field_params(step_cfg);

  std::string failures;
  auto note_failure = [&](std::size_t idx, const std::exception& e) {
    if (!failures.empty()) failures += "; ";
    failures += "group " + std::to_string(idx) + ": " + e.what();
  };

  // Position phase: advance every value/theta with the current momenta.
  for (std::size_t i = 0; i < groups.size(); ++i) {
    ParamGroup& g = groups[i];
    try {
      if (g.kind == ParamKind::orthogonal) {
        const double d = stiefel_distance(g.state.theta);
        if (d >= step_cfg.drift_abort) {
          throw DriftAbortError("drift abort before step (distance " +
                                    std::to_string(d) + ")",
                                d, lyapunov_v(g.state, cfg.k),
                                frobenius_norm(g.state.phi));
        }
        g.state.theta += eta_now * field_feedback_theta_rate(g.state, fp);
      } else {
        g.state.theta += eta_now * g.state.phi;
      }
    } catch (const Error& e) {
      note_failure(i, e);
    }
  }
  if (!failures.empty()) throw Error("optimizer_apply: " + failures);

  // One joint gradient evaluation at the updated positions.
  std::vector<Matrix> values;
  values.reserve(groups.size());
  for (const ParamGroup& g : groups) values.push_back(g.state.theta);
  const std::vector<Matrix> gradients = grads(values);
  if (gradients.size() != groups.size()) {
    throw DimensionError("optimizer_apply: gradient list has " +
                         std::to_string(gradients.size()) + " entries for " +
                         std::to_string(groups.size()) + " groups");
  }

  // Momentum phase.
  std::vector<GroupDiagnostics> diags(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    ParamGroup& g = groups[i];
    try {
      if (!gradients[i].same_shape(g.state.theta)) {
        throw DimensionError("gradient " + shape_str(gradients[i]) +
                             " does not match parameter " + shape_str(g.state.theta));
      }
      if (g.kind == ParamKind::orthogonal) {
        g.state.phi += eta_now * field_feedback_phi_rate(g.state, gradients[i], fp);
        const double d = stiefel_distance(g.state.theta);
        if (d >= step_cfg.drift_abort) {
          throw DriftAbortError("drift abort after step (distance " +
                                    std::to_string(d) + ")",
                                d, lyapunov_v(g.state, cfg.k),
                                frobenius_norm(g.state.phi));
        }
      } else {
        g.state.phi = (1.0 - step_cfg.gamma) * g.state.phi - gradients[i];
      }
      if (!g.state.theta.all_finite() || !g.state.phi.all_finite()) {
        throw BlowupError("non-finite parameter state");
      }
      diags[i] = diagnostics_for(g, cfg.k);
    } catch (const Error& e) {
      note_failure(i, e);
    }
  }
  if (!failures.empty()) throw Error("optimizer_apply: " + failures);
  return diags;
}

}  // namespace fgd
