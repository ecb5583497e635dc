#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "stablerepr/linalg.hpp"
#include "stablerepr/rng.hpp"
#include "test_support.hpp"

#ifdef STABLEREPR_HAVE_EIGEN_ORACLE
#include <Eigen/Dense>
#endif

using namespace stablerepr;
using namespace stablerepr::testing;

TEST_CASE("matrix product and transpose") {
  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  const Matrix b = Matrix::from_rows({{5, 6}, {7, 8}});
  const Matrix c = a * b;
  CHECK(c(0, 0) == 19);
  CHECK(c(0, 1) == 22);
  CHECK(c(1, 0) == 43);
  CHECK(c(1, 1) == 50);
  const Matrix at = a.transpose();
  CHECK(at(0, 1) == 3);
  CHECK_THROWS_AS(a * Matrix(3, 3), std::invalid_argument);
}

TEST_CASE("matrix vector products") {
  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  const Vector v{1, 1};
  CHECK((a * v)[0] == 3);
  CHECK((a * v)[1] == 7);
  const Vector left = a.left_multiply(v);
  CHECK(left[0] == 4);
  CHECK(left[1] == 6);
}

TEST_CASE("lu solve recovers random systems") {
  Rng rng(11);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 1 + rng.uniform_index(12);
    const Matrix a = random_matrix(n, n, rng);
    Vector x(n);
    for (double& v : x) v = rng.normal();
    const Vector b = a * x;
    const Vector got = solve_linear(a, b);
    for (std::size_t i = 0; i < n; ++i) CHECK(got[i] == doctest::Approx(x[i]).epsilon(1e-8));
  }
}

TEST_CASE("lu determinant matches cofactor expansion on 3x3") {
  const Matrix a = Matrix::from_rows({{2, 1, 0}, {1, 3, 1}, {0, 1, 4}});
  CHECK(LuFactorization(a).determinant() == doctest::Approx(18.0));
}

TEST_CASE("lu flags exact singularity") {
  const Matrix a = Matrix::from_rows({{1, 2}, {2, 4}});
  CHECK_THROWS_AS(LuFactorization{a}, NumericalError);
}

TEST_CASE("condition estimate grows with ill conditioning") {
  CHECK(LuFactorization(Matrix::identity(4)).condition_estimate() == doctest::Approx(1.0).epsilon(0.5));
  Matrix bad = Matrix::identity(4);
  bad(3, 3) = 1e-9;
  CHECK(LuFactorization(bad).condition_estimate() > 1e7);
}

#ifdef STABLEREPR_HAVE_EIGEN_ORACLE
TEST_CASE("lu solve matches the Eigen oracle") {
  Rng rng(23);
  const std::size_t n = 9;
  const Matrix a = random_matrix(n, n, rng);
  Vector b(n);
  for (double& v : b) v = rng.normal();
  Eigen::MatrixXd ea(n, n);
  Eigen::VectorXd eb(n);
  for (std::size_t i = 0; i < n; ++i) {
    eb[static_cast<int>(i)] = b[i];
    for (std::size_t j = 0; j < n; ++j) ea(i, j) = a(i, j);
  }
  const Eigen::VectorXd ex = ea.partialPivLu().solve(eb);
  const Vector x = solve_linear(a, b);
  for (std::size_t i = 0; i < n; ++i)
    CHECK(x[i] == doctest::Approx(ex[static_cast<int>(i)]).epsilon(1e-10));
}
#endif
