#include <doctest.h>

#include <cmath>

#include "adseal/errors.hpp"
#include "adseal/matrix.hpp"
#include "adseal/rng.hpp"
#include "test_util.hpp"

using namespace adseal;

TEST_CASE("matmul identity") {
  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  CHECK(matmul(Matrix::identity(2), a) == a);
}

TEST_CASE("matmul hand-computed 1x2 * 2x1") {
  const Matrix a = Matrix::from_rows({{1, 2}});
  const Matrix b = Matrix::from_rows({{3}, {4}});
  const Matrix c = matmul(a, b);
  CHECK(c.rows == 1);
  CHECK(c.cols == 1);
  CHECK(c.at(0, 0) == doctest::Approx(11.0).epsilon(1e-15));
}

TEST_CASE("matmul dimension mismatch names both shapes") {
  const Matrix a(2, 3), b(4, 5);
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("2x3"), DimensionError);
  try {
    matmul(a, b);
  } catch (const DimensionError& e) {
    CHECK(std::string(e.what()).find("4x5") != std::string::npos);
  }
}

TEST_CASE("matmul associativity on random 3-chains") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int n1 = 1 + static_cast<int>(rng.below(5));
    const int n2 = 1 + static_cast<int>(rng.below(5));
    const int n3 = 1 + static_cast<int>(rng.below(5));
    const int n4 = 1 + static_cast<int>(rng.below(5));
    const Matrix a = Matrix::randn(n1, n2, 1.0, rng);
    const Matrix b = Matrix::randn(n2, n3, 1.0, rng);
    const Matrix c = Matrix::randn(n3, n4, 1.0, rng);
    const Matrix left = matmul(matmul(a, b), c);
    const Matrix right = matmul(a, matmul(b, c));
    CHECK(test::max_abs_diff(left, right) < 1e-9);
  }
}

TEST_CASE("softmax symmetric two-entry row") {
  const Matrix s = softmax_rows(Matrix::from_rows({{0, 0}}));
  CHECK(s.at(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.at(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("softmax [1,2,3] matches hand-computed values") {
  // exp(1)=2.718281828..., exp(2)=7.389056098..., exp(3)=20.085536923...,
  // sum=30.192874850...
  const Matrix s = softmax_rows(Matrix::from_rows({{1, 2, 3}}));
  CHECK(s.at(0, 0) == doctest::Approx(0.09003057317038046).epsilon(1e-9));
  CHECK(s.at(0, 1) == doctest::Approx(0.24472847105479767).epsilon(1e-9));
  CHECK(s.at(0, 2) == doctest::Approx(0.6652409557748219).epsilon(1e-9));
}

TEST_CASE("softmax singleton row is 1.0 for any finite input") {
  for (double x : {-700.0, -1.0, 0.0, 3.5, 700.0}) {
    const Matrix s = softmax_rows(Matrix::from_rows({{x}}));
    CHECK(s.at(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("softmax rows sum to 1 and shifting a row is a no-op") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int r = 1 + static_cast<int>(rng.below(4));
    const int c = 1 + static_cast<int>(rng.below(6));
    const Matrix m = Matrix::randn(r, c, 3.0, rng);
    const Matrix s = softmax_rows(m);
    for (int i = 0; i < r; ++i) {
      double sum = 0.0;
      for (int j = 0; j < c; ++j) sum += s.at(i, j);
      CHECK(std::fabs(sum - 1.0) < 1e-9);
    }
    const double shift = rng.uniform(-50.0, 50.0);
    Matrix shifted = m;
    for (int j = 0; j < c; ++j) shifted.at(0, j) += shift;
    const Matrix s2 = softmax_rows(shifted);
    for (int j = 0; j < c; ++j) {
      CHECK(std::fabs(s2.at(0, j) - s.at(0, j)) < 1e-9);
    }
  }
}

TEST_CASE("softmax is monotone within a row") {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix m = Matrix::randn(1, 6, 2.0, rng);
    const Matrix s = softmax_rows(m);
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) {
        if (m.at(0, i) > m.at(0, j)) CHECK(s.at(0, i) > s.at(0, j));
      }
    }
  }
}

TEST_CASE("softmax rejects empty input") {
  CHECK_THROWS_AS(softmax_rows(Matrix()), DimensionError);
}

TEST_CASE("l2_normalize already-unit vector") {
  const Matrix v = l2_normalize(Matrix::from_rows({{1, 0, 0}}));
  CHECK(v.at(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(v.at(0, 1) == 0.0);
  CHECK(v.at(0, 2) == 0.0);
}

TEST_CASE("l2_normalize 3-4-5 triangle") {
  const Matrix v = l2_normalize(Matrix::from_rows({{3, 4}}));
  CHECK(v.at(0, 0) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(v.at(0, 1) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("l2_normalize rejects zero vector") {
  CHECK_THROWS_AS(l2_normalize(Matrix::from_rows({{0, 0}})), DegenerateVectorError);
}

TEST_CASE("l2_normalize rejects multi-row input") {
  CHECK_THROWS_AS(l2_normalize(Matrix::from_rows({{1, 2}, {3, 4}})), DimensionError);
}

TEST_CASE("l2_normalize is idempotent") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix v = Matrix::randn(1, 1 + static_cast<int>(rng.below(8)), 2.0, rng);
    if (l2_norm(v) < 1e-6) continue;
    const Matrix once = l2_normalize(v);
    const Matrix twice = l2_normalize(once);
    CHECK(test::max_abs_diff(once, twice) < 1e-9);
    CHECK(std::fabs(l2_norm(once) - 1.0) < 1e-9);
  }
}

TEST_CASE("finite guard catches overflow products") {
  Matrix a(1, 1), b(1, 1);
  a.at(0, 0) = 1e308;
  b.at(0, 0) = 1e308;
  CHECK_THROWS_AS(matmul(a, b), Error);
}
