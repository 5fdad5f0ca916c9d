#include "fgd/sampling.hpp"

#include <cmath>
#include <string>

namespace fgd {

State random_state_in_neighborhood(std::size_t n, std::size_t p, Rng& rng,
                                   double max_distance, double phi_scale) {
  if (!(max_distance > 0.0 && max_distance < 1.0)) {
    throw Error("random_state_in_neighborhood: max_distance must be in (0, 1)");
  }
  const Matrix base = random_orthonormal(n, p, rng);
  Matrix theta = base + random_matrix(n, p, rng);
  // Pull theta toward the base until its Gram distance is inside the target.
  const double target = max_distance * rng.uniform();
  for (int iter = 0; iter < 60; ++iter) {
    const double d = stiefel_distance(theta);
    if (d <= target || d <= 1e-14) break;
    theta = base + 0.7 * (theta - base);
  }
  Matrix phi = phi_scale * random_matrix(n, p, rng);
  return State(std::move(theta), std::move(phi));
}

State random_state_on_bundle(std::size_t n, std::size_t p, Rng& rng,
                             double phi_scale) {
  Matrix theta = random_orthonormal(n, p, rng);
  Matrix phi = phi_scale * tangent_project(theta, random_matrix(n, p, rng));
  return State(std::move(theta), std::move(phi));
}

Matrix random_gram_at_distance(std::size_t p, Rng& rng, double distance) {
  if (!(distance >= 0.0 && distance < 1.0)) {
    throw Error("random_gram_at_distance: distance must be in [0, 1)");
  }
  Matrix e = sym(random_matrix(p, p, rng));
  const double norm = frobenius_norm(e);
  if (norm < 1e-300) return Matrix::identity(p);
  e *= distance / norm;
  return Matrix::identity(p) + e;
}

}  // namespace fgd
