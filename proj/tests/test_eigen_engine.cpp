#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "stablerepr/eigen_engine.hpp"
#include "stablerepr/rng.hpp"
#include "test_support.hpp"

#ifdef STABLEREPR_HAVE_EIGEN_ORACLE
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#endif

using namespace stablerepr;
using namespace stablerepr::testing;

namespace {

void check_schur_shape(const Matrix& a, const RealSchurResult& s) {
  const std::size_t n = a.rows();
  const Matrix rec = s.u * s.t * s.u.transpose();
  CHECK((rec - a).frobenius_norm() <= 1e-11 * (1.0 + a.frobenius_norm()));
  CHECK((s.u.transpose() * s.u - Matrix::identity(n)).frobenius_norm() <= 1e-12);
  for (std::size_t i = 2; i < n; ++i)
    for (std::size_t j = 0; j + 1 < i; ++j) CHECK(s.t(i, j) == 0.0);
  // Block order: descending magnitude.
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double mi = std::abs(s.eigenvalues[i]);
    const double mj = std::abs(s.eigenvalues[i + 1]);
    CHECK(mi >= mj - 1e-8 * (1.0 + mi));
  }
  // Leading block-aligned prefixes are invariant subspaces.
  for (std::size_t k : s.block_starts) {
    if (k == 0) continue;
    const Matrix uk = s.u.cols_range(0, k);
    const Matrix au = a * uk;
    const Matrix leak = au - uk * (uk.transpose() * au);
    CHECK(leak.frobenius_norm() <= 1e-9 * (1.0 + a.frobenius_norm()));
  }
}

}  // namespace

TEST_CASE("schur handles small fixed matrices") {
  check_schur_shape(Matrix::from_rows({{2.0}}), real_schur_decompose(Matrix::from_rows({{2.0}})));
  const Matrix rot = Matrix::from_rows({{0, -1}, {1, 0}});
  const RealSchurResult s = real_schur_decompose(rot);
  check_schur_shape(rot, s);
  CHECK(s.eigenvalues[0].imag() == doctest::Approx(1.0));
  CHECK(s.eigenvalues[1].imag() == doctest::Approx(-1.0));
}

TEST_CASE("schur on random and stochastic matrices") {
  Rng rng(5150);
  for (int t = 0; t < 40; ++t) {
    const std::size_t n = 1 + rng.uniform_index(14);
    const Matrix a = (t % 2 == 0) ? random_matrix(n, n, rng) : random_stochastic(n, rng);
    check_schur_shape(a, real_schur_decompose(a));
  }
  for (std::size_t n : {25, 40}) {
    const Matrix a = random_stochastic(n, rng);
    const RealSchurResult s = real_schur_decompose(a);
    check_schur_shape(a, s);
    CHECK(std::abs(s.eigenvalues[0]) == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("schur splits real pairs so 2x2 blocks are complex") {
  Rng rng(77);
  for (int t = 0; t < 25; ++t) {
    const std::size_t n = 2 + rng.uniform_index(10);
    const RealSchurResult s = real_schur_decompose(random_matrix(n, n, rng));
    for (std::size_t b = 0; b + 1 < s.block_starts.size(); ++b) {
      const std::size_t start = s.block_starts[b];
      const std::size_t size = s.block_starts[b + 1] - start;
      if (size == 2) CHECK(std::abs(s.eigenvalues[start].imag()) > 0.0);
    }
  }
}

TEST_CASE("eigenvector back substitution achieves small residuals") {
  Rng rng(31);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 2 + rng.uniform_index(10);
    const Matrix a = random_matrix(n, n, rng);
    const RealSchurResult s = real_schur_decompose(a);
    const auto vecs = eigenvectors_from_schur(s);
    for (std::size_t j = 0; j < n; ++j) {
      double err = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        Complex av(0, 0);
        for (std::size_t k = 0; k < n; ++k) av += a(i, k) * vecs[k][j];
        av -= s.eigenvalues[j] * vecs[i][j];
        err += std::norm(av);
      }
      CHECK(std::sqrt(err) <= 1e-6 * (1.0 + a.frobenius_norm()));
    }
  }
}

TEST_CASE("defective matrices do not break the eigenvector path") {
  const Matrix jordan = Matrix::from_rows({{1, 1, 0}, {0, 1, 1}, {0, 0, 1}});
  const RealSchurResult s = real_schur_decompose(jordan);
  const auto vecs = eigenvectors_from_schur(s);
  CHECK(vecs.size() == 3);
  // Nearly dependent columns, reflected in a huge condition number.
  Matrix re(3, 3), im(3, 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      re(i, j) = vecs[i][j].real();
      im(i, j) = vecs[i][j].imag();
    }
  CHECK(complex_condition_number(re, im) > 1e6);
}

TEST_CASE("symmetric jacobi reconstructs and orders eigenvalues") {
  Rng rng(99);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 1 + rng.uniform_index(12);
    Matrix a = random_matrix(n, n, rng);
    a = a + a.transpose();
    const SymmetricEig se = symmetric_eigen(a);
    const Matrix rec = se.vectors * Matrix::diagonal(se.eigenvalues) * se.vectors.transpose();
    CHECK((rec - a).frobenius_norm() <= 1e-10 * (1.0 + a.frobenius_norm()));
    CHECK((se.vectors.transpose() * se.vectors - Matrix::identity(n)).frobenius_norm() <= 1e-12);
    for (std::size_t i = 0; i + 1 < n; ++i) CHECK(se.eigenvalues[i] >= se.eigenvalues[i + 1]);
  }
}

TEST_CASE("one-sided jacobi svd reconstructs rectangular matrices") {
  Rng rng(123);
  for (int t = 0; t < 20; ++t) {
    const std::size_t m = 1 + rng.uniform_index(12);
    const std::size_t n = 1 + rng.uniform_index(12);
    const Matrix a = random_matrix(m, n, rng);
    const SvdResult s = singular_value_decompose(a);
    const Matrix rec = s.u * Matrix::diagonal(s.sigma) * s.v.transpose();
    CHECK((rec - a).frobenius_norm() <= 1e-10 * (1.0 + a.frobenius_norm()));
    const std::size_t k = std::min(m, n);
    CHECK((s.u.transpose() * s.u - Matrix::identity(k)).frobenius_norm() <= 1e-11);
    CHECK((s.v.transpose() * s.v - Matrix::identity(k)).frobenius_norm() <= 1e-11);
    for (std::size_t i = 0; i + 1 < k; ++i) CHECK(s.sigma[i] >= s.sigma[i + 1]);
  }
}

TEST_CASE("svd completes the basis on rank-deficient input") {
  Matrix a(4, 3);
  a(0, 0) = 1.0;
  a(1, 0) = 2.0;  // rank 1
  const SvdResult s = singular_value_decompose(a);
  CHECK(s.sigma[0] == doctest::Approx(std::sqrt(5.0)));
  CHECK(s.sigma[1] == doctest::Approx(0.0));
  CHECK((s.u.transpose() * s.u - Matrix::identity(3)).frobenius_norm() <= 1e-10);
}

TEST_CASE("multiset spectrum matcher") {
  std::vector<Complex> a{{1, 0}, {0, 1}, {0, -1}};
  std::vector<Complex> b{{0, -1}, {1, 1e-9}, {0, 1}};
  CHECK(spectra_match_as_multisets(a, b, 1e-8));
  b[1] = Complex(1.1, 0);
  CHECK_FALSE(spectra_match_as_multisets(a, b, 1e-8));
}

#ifdef STABLEREPR_HAVE_EIGEN_ORACLE
TEST_CASE("eigenvalues match the Eigen oracle on random matrices") {
  Rng rng(2024);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 1 + rng.uniform_index(15);
    const Matrix a = (t % 2 == 0) ? random_matrix(n, n, rng) : random_stochastic(n, rng);
    Eigen::MatrixXd ea(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) ea(i, j) = a(i, j);
    Eigen::EigenSolver<Eigen::MatrixXd> es(ea, false);
    std::vector<Complex> oracle(n);
    double scale = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      oracle[i] = es.eigenvalues()[static_cast<int>(i)];
      scale = std::max(scale, std::abs(oracle[i]));
    }
    CHECK(spectra_match_as_multisets(dense_eigenvalues(a), oracle, 1e-7 * scale));
    CHECK(spectra_match_as_multisets(real_schur_decompose(a).eigenvalues, oracle, 1e-7 * scale));
  }
}

TEST_CASE("singular values match the Eigen oracle") {
  Rng rng(31337);
  for (int t = 0; t < 15; ++t) {
    const std::size_t m = 2 + rng.uniform_index(10);
    const std::size_t n = 2 + rng.uniform_index(10);
    const Matrix a = random_matrix(m, n, rng);
    Eigen::MatrixXd ea(m, n);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ea(i, j) = a(i, j);
    Eigen::JacobiSVD<Eigen::MatrixXd> es(ea);
    const SvdResult s = singular_value_decompose(a);
    for (std::size_t i = 0; i < std::min(m, n); ++i)
      CHECK(s.sigma[i] ==
            doctest::Approx(es.singularValues()[static_cast<int>(i)]).epsilon(1e-9));
  }
}
#endif
