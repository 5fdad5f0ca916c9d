#include <doctest.h>

#include <cmath>

#include "fgd/numdiff.hpp"
#include "fgd/optimizer.hpp"
#include "fgd/problems.hpp"
#include "fgd/sampling.hpp"
#include "test_util.hpp"

using namespace fgd;
using test::max_abs_diff;

namespace {

void check_gradient_contract(const Problem& prob, std::size_t n, std::size_t p,
                             Rng& rng, double tol, int points = 20) {
  for (int i = 0; i < points; ++i) {
    const Matrix w = random_matrix(n, p, rng);
    const Matrix analytic = prob.grad_at(w);
    const Matrix fd = fd_gradient(prob.loss_at, w);
    CHECK(relative_gap(analytic, fd) <= tol);
  }
}

}  // namespace

TEST_SUITE("problems") {

TEST_CASE("nearest_orthogonal loss, gradient, and closed form") {
  Rng rng(1);
  const Matrix v = random_matrix(5, 3, rng);
  const Problem prob = nearest_orthogonal_problem(v);
  CHECK(prob.loss_at(v) == 0.0);
  CHECK(frobenius_norm(prob.grad_at(v)) == 0.0);

  // V = 2 I3: the polar factor is I3 and f0 = sqrt(3)
  const Matrix v2 = 2.0 * Matrix::identity(3);
  const auto [w0, f0] = nearest_orthogonal_closed_form(v2);
  CHECK(max_abs_diff(w0, Matrix::identity(3)) <= 1e-12);
  CHECK(f0 == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));

  const Problem prob2 = nearest_orthogonal_problem(v2);
  CHECK(prob2.loss_at(Matrix::identity(3)) ==
        doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));

  check_gradient_contract(prob, 5, 3, rng, 1e-5);

  CHECK_THROWS_AS(nearest_orthogonal_problem(Matrix(3, 3)), SingularityError);
}

TEST_CASE("closed form is orthonormal and optimal") {
  Rng rng(2);
  const Matrix v = random_matrix(5, 3, rng);
  const auto [w0, f0] = nearest_orthogonal_closed_form(v);
  CHECK(stiefel_distance(w0) <= 1e-9);
  CHECK(f0 == doctest::Approx(frobenius_norm(w0 - v)).epsilon(1e-15));

  // orthonormal input is its own polar factor
  const Matrix u = random_orthonormal(6, 3, 3);
  const auto [wu, fu] = nearest_orthogonal_closed_form(u);
  CHECK(max_abs_diff(wu, u) <= 1e-9);
  CHECK(fu <= 1e-9);

  // brute-force sampling never beats the closed form
  Rng sampler(4);
  double best = 1e300;
  for (int i = 0; i < 10000; ++i) {
    const Matrix w = random_orthonormal(5, 3, sampler);
    best = std::min(best, frobenius_norm(w - v));
  }
  CHECK(best >= f0 - 1e-9);
}

TEST_CASE("procrustes: planted solution, gradient, recovery") {
  Rng rng(5);
  const Matrix w_star = random_orthonormal(8, 4, 6);
  const Matrix a = 0.25 * random_matrix(4, 16, rng);
  const Matrix b = matmul(w_star, a);
  const Problem prob = procrustes_problem(a, b);
  CHECK(prob.loss_at(w_star) <= 1e-20);

  check_gradient_contract(prob, 8, 4, rng, 1e-5);

  // FGD run recovers the planted solution
  FgdConfig cfg;
  cfg.eta = 0.1;
  cfg.gamma = 0.9;
  const Matrix theta0 = random_orthonormal(8, 4, 7);
  State s = fgd_init(theta0, prob.grad_at(theta0));
  for (int i = 0; i < 2000; ++i) s = fgd_step(s, prob.grad_at, cfg);
  CHECK(prob.loss_at(s.theta) <= 1e-8);

  CHECK_THROWS_AS(procrustes_problem(Matrix(4, 16), Matrix(8, 15)), DimensionError);
}

TEST_CASE("trace_min: diagonal case and subspace recovery") {
  const Matrix a = Matrix::from_rows({{3, 0, 0}, {0, 2, 0}, {0, 0, 1}});
  const Problem prob = trace_min_problem(a);
  Matrix e12(3, 2);
  e12(0, 0) = 1.0;
  e12(1, 1) = 1.0;
  CHECK(prob.loss_at(e12) == -5.0);

  Rng rng(8);
  check_gradient_contract(prob, 3, 2, rng, 1e-5);

  // random symmetric A with an enforced eigen-gap; FGD matches the Jacobi
  // oracle's leading eigenspace
  const std::size_t n = 6, p = 2;
  Matrix q = random_orthonormal(n, n, 9);
  std::vector<double> lambda(n);
  for (std::size_t i = 0; i < n; ++i) lambda[i] = 3.0 * rng.uniform();
  std::sort(lambda.rbegin(), lambda.rend());
  if (lambda[p - 1] - lambda[p] < 0.1) {
    for (std::size_t i = 0; i < p; ++i) lambda[i] += 0.1;
  }
  Matrix scaled = q;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) scaled(i, j) *= lambda[j];
  const Matrix a2 = sym(matmul(scaled, q.transpose()));
  const Problem prob2 = trace_min_problem(a2);

  FgdConfig cfg;
  State s = fgd_init(random_orthonormal(n, p, 10),
                     prob2.grad_at(random_orthonormal(n, p, 10)));
  for (int i = 0; i < 3000; ++i) s = fgd_step(s, prob2.grad_at, cfg);

  const EigDecomposition eig = symmetric_eig(a2);
  Matrix top(n, p);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) top(i, j) = eig.eigenvectors(i, j);
  const auto [w_polar, f_polar] = nearest_orthogonal_closed_form(s.theta);
  CHECK(principal_angle_distance(w_polar, top) <= 1e-4);

  // optimal value equals minus the top-p eigenvalue sum
  const double opt = -(eig.eigenvalues[0] + eig.eigenvalues[1]);
  CHECK(prob2.loss_at(w_polar) == doctest::Approx(opt).epsilon(1e-8));

  CHECK_THROWS_AS(trace_min_problem(Matrix::from_rows({{1, 2}, {0, 1}})), Error);
}

TEST_CASE("every problem satisfies the finite-difference contract") {
  Rng rng(11);
  check_gradient_contract(nearest_orthogonal_problem(random_matrix(5, 3, rng)), 5, 3,
                          rng, 1e-5);
  check_gradient_contract(
      procrustes_problem(random_matrix(3, 8, rng), random_matrix(6, 8, rng)), 6, 3,
      rng, 1e-5);
  check_gradient_contract(trace_min_problem(sym(random_matrix(5, 5, rng))), 5, 2,
                          rng, 1e-5);
}

}  // TEST_SUITE
