#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "fgd/integrators.hpp"

namespace fgd {

struct FgdConfig {
  double eta = 0.1;
  double gamma = 0.1;
  double alpha = 12.0;  // 0 allowed for control runs without feedback
  InverseMode inverse_mode = InverseMode::neumann;
  LyapunovParams k{};
  double drift_abort = 0.5;  // abort when ||theta^T theta - I|| crosses this
  PhiGradPoint phi_grad_point = PhiGradPoint::updated_theta;
};

void validate(const FgdConfig& cfg);

FieldParams field_params(const FgdConfig& cfg);

/// Initial state for the optimizer: phi = theta Sym(theta^T g) - g, the
/// negative Riemannian gradient, which is tangent at theta.
State fgd_init(const Matrix& theta0, const Matrix& euclid_grad);

/// One discrete optimizer update: the semi-implicit step of the full feedback
/// field with h = cfg.eta, guarded by the drift-abort bound before and after.
State fgd_step(const State& s, const GradProvider& grad, const FgdConfig& cfg);

/// Euclidean momentum baseline: value' = value + eta * momentum,
/// momentum' = (1 - gamma) * momentum - grad(value').
std::pair<Matrix, Matrix> sgd_momentum_step(const Matrix& value,
                                            const Matrix& momentum,
                                            const GradProvider& grad, double eta,
                                            double gamma);

/// Convolution-style parameter shape (c_o, c_i, K1, K2).
struct ConvShape {
  std::size_t c_o, c_i, k1, k2;
};

/// Matrix dimensions after flattening the last three axes and transposing:
/// (n, p) = (c_i*K1*K2, c_o).
std::pair<std::size_t, std::size_t> reshape_conv_param(const ConvShape& shape);

/// Orthogonality eligibility: c_i*K1*K2 >= c_o and min(K1, K2) > 1.
bool should_orthogonalize(const ConvShape& shape);

/// Flattens a (c_o, c_i, K1, K2) row-major tensor into the n x p matrix with
/// rows indexed by (c_i, K1, K2) row-major and columns by c_o.
Matrix flatten_conv_param(const std::vector<double>& tensor, const ConvShape& shape);
std::vector<double> unflatten_conv_param(const Matrix& m, const ConvShape& shape);

enum class ParamKind { orthogonal, euclidean };

/// One optimizable parameter. For orthogonal parameters `state` is
/// (theta, phi); for euclidean ones it reads as (value, momentum).
struct ParamGroup {
  ParamKind kind = ParamKind::euclidean;
  State state;
  std::optional<ConvShape> original_shape;
};

struct GroupDiagnostics {
  double v_value = 0.0;
  double stiefel_dist = 0.0;  // NaN when rows < cols
};

/// Joint gradient of all parameters at the given values, ordered like the
/// group list.
using MultiGradProvider =
    std::function<std::vector<Matrix>(const std::vector<Matrix>&)>;

/// Advances every group by one step at learning rate eta_now: positions
/// first (all groups), one joint gradient evaluation at the updated
/// positions, then momenta. Orthogonal groups follow the feedback update,
/// euclidean ones the momentum baseline. Returns per-group diagnostics.
std::vector<GroupDiagnostics> optimizer_apply(std::vector<ParamGroup>& groups,
                                              const MultiGradProvider& grads,
                                              const FgdConfig& cfg, double eta_now);

}  // namespace fgd
