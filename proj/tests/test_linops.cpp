#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "test_util.hpp"
#include "utl/linops.hpp"

namespace utl {
namespace {

using testing::random_matrix;

void expect_valid_factors(const Matrix& a, const SvdFactors& f) {
  const Index r = std::min(a.rows(), a.cols());
  ASSERT_EQ(f.sigma.size(), r);
  const double rr = std::sqrt(static_cast<double>(r));
  EXPECT_LE((f.u.transpose() * f.u - Matrix::Identity(r, r)).norm(), tol::kOrtho * rr);
  EXPECT_LE((f.v.transpose() * f.v - Matrix::Identity(r, r)).norm(), tol::kOrtho * rr);
  for (Index i = 0; i < r; ++i) {
    EXPECT_GE(f.sigma(i), 0.0);
    if (i > 0) EXPECT_LE(f.sigma(i), f.sigma(i - 1));
  }
  const Matrix back = f.u * f.sigma.asDiagonal() * f.v.transpose();
  EXPECT_LE((a - back).norm(), tol::kReconstruct * std::max(1.0, a.norm()));
}

TEST(Svd, DiagonalNonnegative) {
  Matrix a(2, 2);
  a << 3, 0, 0, 1;
  const auto f = svd(a);
  EXPECT_NEAR(f.sigma(0), 3.0, 1e-15);
  EXPECT_NEAR(f.sigma(1), 1.0, 1e-15);
  // factors are sign-ambiguous; compare the sign-invariant products
  EXPECT_LE((f.u.cwiseAbs() - Matrix::Identity(2, 2)).norm(), 1e-15);
  EXPECT_LE((f.u * f.v.transpose() - Matrix::Identity(2, 2)).norm(), 1e-15);
}

TEST(Svd, ZeroMatrix) {
  const auto f = svd(Matrix::Zero(2, 2));
  EXPECT_EQ(f.sigma(0), 0.0);
  EXPECT_EQ(f.sigma(1), 0.0);
}

TEST(Svd, RandomRectangularReconstruction) {
  const Matrix a = random_matrix(5, 7, 11);
  const auto f = svd(a);
  expect_valid_factors(a, f);
  EXPECT_LE((a - f.u * f.sigma.asDiagonal() * f.v.transpose()).norm(), 1e-9);
}

TEST(Svd, ReconstructionAcrossShapes) {
  const Index shapes[][2] = {{1, 1}, {1, 9}, {9, 1}, {3, 3}, {10, 4}, {4, 10}, {50, 50}, {100, 10000}};
  std::uint64_t seed = 100;
  for (const auto& sh : shapes) {
    const Matrix a = random_matrix(sh[0], sh[1], seed++);
    SCOPED_TRACE(std::to_string(sh[0]) + "x" + std::to_string(sh[1]));
    expect_valid_factors(a, svd(a));
  }
}

TEST(Svd, RejectsNonFinite) {
  Matrix a = Matrix::Ones(3, 3);
  a(1, 2) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(svd(a), NumericalError);
  EXPECT_THROW(spectral_norm(a), NumericalError);
}

TEST(SpectralNorm, Examples) {
  EXPECT_NEAR(spectral_norm(Matrix::Identity(3, 3)), 1.0, 1e-15);
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 2;
  d(1, 1) = -5;
  EXPECT_NEAR(spectral_norm(d), 5.0, 1e-14);
}

TEST(SpectralNorm, RankOneMatchesPowerIteration) {
  Vector u = random_matrix(6, 1, 3).col(0);
  Vector v = random_matrix(9, 1, 4).col(0);
  u *= 2.0 / u.norm();
  v *= 3.0 / v.norm();
  const Matrix a = u * v.transpose();
  const double oracle = testing::power_iteration_norm(a);
  EXPECT_NEAR(oracle, 6.0, 1e-12);
  EXPECT_NEAR(spectral_norm(a), oracle, 1e-12);
}

TEST(SpectralNorm, WideAndTallMatchSvd) {
  for (auto [r, c] : {std::pair<Index, Index>{5, 400}, {400, 5}, {30, 61}}) {
    const Matrix a = random_matrix(r, c, static_cast<std::uint64_t>(r * 1000 + c));
    EXPECT_NEAR(spectral_norm(a), svd(a).sigma(0), 1e-11 * svd(a).sigma(0));
    EXPECT_NEAR(spectral_norm(a), testing::power_iteration_norm(a, 3000), 1e-8 * spectral_norm(a));
  }
}

TEST(ConditionNumber, Examples) {
  EXPECT_NEAR(condition_number(Matrix::Identity(4, 4)), 1.0, 1e-14);
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 4;
  d(1, 1) = 2;
  EXPECT_NEAR(condition_number(d), 2.0, 1e-14);
  Matrix z = random_matrix(3, 8, 5);
  z.row(1).setZero();
  EXPECT_TRUE(std::isinf(condition_number(z)));
  EXPECT_THROW(condition_number(random_matrix(5, 3, 1)), DimensionError);
}

TEST(FrobeniusNorm, Examples) {
  EXPECT_NEAR(frobenius_norm(Matrix::Identity(3, 3)), std::sqrt(3.0), 1e-15);
  EXPECT_EQ(frobenius_norm(Matrix::Zero(4, 2)), 0.0);
  Matrix a(1, 2);
  a << 3, 4;
  EXPECT_EQ(frobenius_norm(a), 5.0);
}

TEST(LinopsProperties, SpectralBelowFrobenius) {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<Index> dim(1, 40);
  for (int i = 0; i < 100; ++i) {
    const Matrix a = random_matrix(dim(rng), dim(rng), 1000 + static_cast<std::uint64_t>(i));
    EXPECT_LE(spectral_norm(a), frobenius_norm(a) * (1 + 1e-15));
  }
}

TEST(LinopsProperties, ConditionNumberScaleInvariant) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix a = random_matrix(6, 20, 200 + seed);
    const double k = condition_number(a);
    for (double c : {-3.0, 1e-3, 250.0}) {
      EXPECT_NEAR(condition_number(c * a), k, 1e-10 * k);
    }
  }
}

TEST(LinopsProperties, SpectralNormUnitaryInvariant) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix a = random_matrix(12, 30, 300 + seed);
    const Matrix q = testing::random_orthogonal(12, 400 + seed);
    const double s = spectral_norm(a);
    EXPECT_NEAR(spectral_norm(q * a), s, 1e-10 * s);
  }
}

}  // namespace
}  // namespace utl
