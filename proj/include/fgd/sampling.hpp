#pragma once

#include "fgd/stiefel.hpp"

namespace fgd {

/// Random state inside the inversion neighborhood: an orthonormal base plus
/// scaled perturbations of both components. The achieved distance stays
/// within [0, max_distance] (max_distance < 1).
State random_state_in_neighborhood(std::size_t n, std::size_t p, Rng& rng,
                                   double max_distance = 0.5,
                                   double phi_scale = 1.0);

/// Exactly on-bundle state: orthonormal theta, phi projected to the tangent
/// space and scaled.
State random_state_on_bundle(std::size_t n, std::size_t p, Rng& rng,
                             double phi_scale = 1.0);

/// Symmetric positive definite Gram-like matrix G with ||G - I|| equal to the
/// requested distance (must be < 1).
Matrix random_gram_at_distance(std::size_t p, Rng& rng, double distance);

}  // namespace fgd
