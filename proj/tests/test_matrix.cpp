#include <doctest.h>

#include <cmath>

#include "fgd/matrix.hpp"
#include "test_util.hpp"

using namespace fgd;
using test::bit_equal;
using test::max_abs_diff;
using test::naive_matmul;

TEST_SUITE("matrix") {

TEST_CASE("matmul identity and hand examples") {
  Rng rng(1);
  const Matrix a = random_matrix(2, 2, rng);
  CHECK(bit_equal(matmul(Matrix::identity(2), a), a));

  const Matrix b = Matrix::from_rows({{1, 2}, {3, 4}});
  const Matrix x = Matrix::from_rows({{0}, {1}});
  const Matrix r = matmul(b, x);
  CHECK(r(0, 0) == 2.0);
  CHECK(r(1, 0) == 4.0);
}

TEST_CASE("matmul agrees exactly with a naive triple loop") {
  Rng rng(7);
  const Matrix a = random_matrix(3, 4, rng);
  const Matrix b = random_matrix(4, 2, rng);
  CHECK(bit_equal(matmul(a, b), naive_matmul(a, b)));
}

TEST_CASE("matmul rejects mismatched shapes, naming both") {
  const Matrix a(2, 3), b(2, 2);
  CHECK_THROWS_WITH_AS(matmul(a, b),
                       doctest::Contains("(2x3)"), DimensionError);
}

TEST_CASE("matmul associativity within tolerance") {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix a = random_matrix(4, 3, rng);
    const Matrix b = random_matrix(3, 5, rng);
    const Matrix c = random_matrix(5, 2, rng);
    const Matrix left = matmul(matmul(a, b), c);
    const Matrix right = matmul(a, matmul(b, c));
    CHECK(frobenius_norm(left - right) <= 1e-10 * std::max(1.0, frobenius_norm(left)));
  }
}

TEST_CASE("frobenius inner product") {
  CHECK(frobenius_inner(Matrix::identity(2), Matrix::identity(2)) == 2.0);
  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  const Matrix b = Matrix::from_rows({{5, 6}, {7, 8}});
  CHECK(frobenius_inner(a, b) == 70.0);

  Rng rng(3);
  const Matrix x = random_matrix(4, 3, rng);
  const Matrix y = random_matrix(4, 3, rng);
  CHECK(frobenius_inner(x, y) == frobenius_inner(y, x));
  CHECK(frobenius_norm(x) ==
        doctest::Approx(std::sqrt(frobenius_inner(x, x))).epsilon(1e-15));
  CHECK_THROWS_AS(frobenius_inner(Matrix(2, 2), Matrix(2, 3)), DimensionError);
}

TEST_CASE("sym examples and properties") {
  const Matrix a = Matrix::from_rows({{0, 2}, {0, 0}});
  const Matrix s = sym(a);
  CHECK(s(0, 1) == 1.0);
  CHECK(s(1, 0) == 1.0);
  CHECK(s(0, 0) == 0.0);

  Rng rng(5);
  const Matrix r = random_matrix(3, 3, rng);
  const Matrix sr = sym(r);
  CHECK(bit_equal(sym(sr), sr));  // idempotent, exactly

  // sym(A) + sym(-A^T) cancels exactly
  const Matrix sum = sym(r) + sym(-(r.transpose()));
  CHECK(max_abs_diff(sum, Matrix(3, 3)) == 0.0);

  CHECK_THROWS_AS(sym(Matrix(2, 3)), DimensionError);
}

TEST_CASE("symmetric_eig on diagonal and classic 2x2") {
  const Matrix d = Matrix::from_rows({{3, 0}, {0, 1}});
  const EigDecomposition e1 = symmetric_eig(d);
  CHECK(e1.eigenvalues[0] == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(e1.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(max_abs_diff(e1.eigenvectors, Matrix::identity(2)) <= 1e-14);

  const Matrix s = Matrix::from_rows({{2, 1}, {1, 2}});
  const EigDecomposition e2 = symmetric_eig(s);
  CHECK(e2.eigenvalues[0] == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(e2.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-14));
  const double isq = 1.0 / std::sqrt(2.0);
  CHECK(e2.eigenvectors(0, 0) == doctest::Approx(isq).epsilon(1e-12));
  CHECK(e2.eigenvectors(1, 0) == doctest::Approx(isq).epsilon(1e-12));
  CHECK(e2.eigenvectors(0, 1) == doctest::Approx(isq).epsilon(1e-12));
  CHECK(e2.eigenvectors(1, 1) == doctest::Approx(-isq).epsilon(1e-12));
}

TEST_CASE("symmetric_eig reconstruction and orthonormality on random input") {
  Rng rng(17);
  const Matrix s = sym(random_matrix(5, 5, rng));
  const EigDecomposition e = symmetric_eig(s);

  Matrix lambda(5, 5);
  for (std::size_t i = 0; i < 5; ++i) lambda(i, i) = e.eigenvalues[i];
  const Matrix recon = matmul(e.eigenvectors, matmul(lambda, e.eigenvectors.transpose()));
  CHECK(frobenius_norm(recon - s) <= 1e-9 * frobenius_norm(s));

  const Matrix qtq = matmul(e.eigenvectors.transpose(), e.eigenvectors);
  CHECK(frobenius_norm(qtq - Matrix::identity(5)) <= 1e-10);

  double trace = 0.0, lam_sum = 0.0;
  for (std::size_t i = 0; i < 5; ++i) trace += s(i, i);
  for (double v : e.eigenvalues) lam_sum += v;
  CHECK(std::abs(lam_sum - trace) <= 1e-9 * std::max(1.0, std::abs(trace)));
}

TEST_CASE("symmetric_eig error paths") {
  const Matrix ns = Matrix::from_rows({{1, 2}, {0, 1}});
  CHECK_THROWS_AS(symmetric_eig(ns), Error);

  Rng rng(23);
  const Matrix s = sym(random_matrix(4, 4, rng));
  CHECK_THROWS_AS(symmetric_eig(s, 1e-14, 0), ConvergenceError);
  try {
    symmetric_eig(s, 1e-14, 0);
  } catch (const ConvergenceError& e) {
    CHECK(e.residual > 0.0);
  }
}

TEST_CASE("invert_spd") {
  CHECK(max_abs_diff(invert_spd(Matrix::identity(3)), Matrix::identity(3)) <= 1e-14);

  const Matrix d = Matrix::from_rows({{2, 0}, {0, 4}});
  const Matrix dinv = invert_spd(d);
  CHECK(dinv(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(dinv(1, 1) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(std::abs(dinv(0, 1)) <= 1e-15);

  const Matrix theta = random_orthonormal(6, 3, 2);
  const Matrix g = matmul(theta.transpose(), theta);
  CHECK(frobenius_norm(matmul(g, invert_spd(g)) - Matrix::identity(3)) <= 1e-9);

  const Matrix sing = Matrix::from_rows({{1, 0}, {0, 1e-13}});
  CHECK_THROWS_AS(invert_spd(sing), SingularityError);
}

TEST_CASE("random_orthonormal contracts") {
  const Matrix sq = random_orthonormal(4, 4, 9);
  CHECK(std::abs(std::abs(test::det_lu(sq)) - 1.0) <= 1e-9);

  const Matrix t = random_orthonormal(5, 3, 0);
  CHECK(frobenius_norm(matmul(t.transpose(), t) - Matrix::identity(3)) <= 1e-12);

  CHECK(bit_equal(random_orthonormal(5, 3, 42), random_orthonormal(5, 3, 42)));
  CHECK_FALSE(bit_equal(random_orthonormal(5, 3, 42), random_orthonormal(5, 3, 43)));

  CHECK_THROWS_AS(random_orthonormal(2, 3, 0), DimensionError);
}

TEST_CASE("rng is deterministic and roughly standard normal") {
  Rng a(1234), b(1234);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng c(99);
  double mean = 0.0, var = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double x = c.normal();
    mean += x;
    var += x * x;
  }
  mean /= n;
  var = var / n - mean * mean;
  CHECK(std::abs(mean) < 0.05);
  CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("from_rows validates input") {
  CHECK_THROWS_AS(Matrix::from_rows({{1.0, 2.0}, {3.0}}), DimensionError);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(Matrix::from_rows({{1.0, inf}}), Error);
  CHECK_THROWS_AS(Matrix(0, 3), DimensionError);
}

}  // TEST_SUITE
