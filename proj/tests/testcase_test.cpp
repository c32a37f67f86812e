#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

#include "generators.hpp"
#include "nmftc/structure.hpp"
#include "nmftc/testcase.hpp"

namespace nmftc {
namespace {

TEST(BidiagonalSpec, Validation) {
  EXPECT_NO_THROW(unit_spec(3, 1e-3).validate());
  EXPECT_THROW((BidiagonalSpec{{1, 1}, {1, 1}, 0}).validate(), DimensionError);
  EXPECT_THROW((BidiagonalSpec{{}, {}, 0}).validate(), DimensionError);
  EXPECT_THROW((BidiagonalSpec{{1, 0}, {1}, 0}).validate(), std::invalid_argument);
  EXPECT_THROW((BidiagonalSpec{{1, 1}, {-1}, 0}).validate(), std::invalid_argument);
  EXPECT_THROW((BidiagonalSpec{{1, 1}, {1}, -1e-3}).validate(), std::invalid_argument);
}

TEST(BidiagonalSpec, MagnitudeWarning) {
  EXPECT_FALSE(unit_spec(3).magnitude_warning());
  EXPECT_FALSE((BidiagonalSpec{{1, 100}, {1}, 0}).magnitude_warning());
  EXPECT_TRUE((BidiagonalSpec{{1, 1000}, {1}, 0}).magnitude_warning());
}

TEST(MakeTestMatrix, EpsilonZeroIsDiagonal) {
  EXPECT_EQ(make_test_matrix(unit_spec(2, 0.0)), DenseMatrix::identity(2));
}

TEST(MakeTestMatrix, PerturbedUnit2x2) {
  EXPECT_EQ(make_test_matrix(unit_spec(2, 1e-3)), DenseMatrix::from_rows({{1, 1e-3}, {0, 1}}));
}

TEST(MakeTestMatrix, GeneralCoefficients) {
  const BidiagonalSpec s{{1, 2, 3}, {0.5, 4}, 1e-2};
  const auto a = make_test_matrix(s);
  EXPECT_EQ(a(1, 1), 2.0);
  EXPECT_EQ(a(0, 1), 1e-2 * 0.5);
  EXPECT_EQ(a(1, 2), 1e-2 * 4);
  EXPECT_EQ(a(0, 2), 0.0);
  EXPECT_EQ(a(2, 1), 0.0);
  EXPECT_TRUE(nonzero_mask(a, 0.0).subset_of(allowed_support(3)));
}

TEST(AllowedSupport, Patterns) {
  EXPECT_EQ(allowed_support(1).count(), 1u);
  const auto m2 = allowed_support(2);
  EXPECT_TRUE(m2(0, 0) && m2(0, 1) && m2(1, 1));
  EXPECT_FALSE(m2(1, 0));
  EXPECT_EQ(allowed_support(3).count(), 5u);
}

TEST(ExactFactor2x2, AllOfEpsilonInH) {
  const auto s = unit_spec(2, 1e-3);
  const auto f = exact_factor_2x2(s, {Branch::Direct, {1, 1}, 0.0});
  EXPECT_EQ(f.W, DenseMatrix::identity(2));
  EXPECT_EQ(f.H, DenseMatrix::from_rows({{1, 1e-3}, {0, 1}}));
}

// w0 = [2, 4], w1(1) = 1e-3, eps = 1e-3: worked by hand from the closed form.
TEST(ExactFactor2x2, FrozenWorkedExample) {
  const auto s = unit_spec(2, 1e-3);
  const auto f = exact_factor_2x2(s, {Branch::Direct, {2, 4}, 1e-3});
  EXPECT_EQ(f.W, DenseMatrix::from_rows({{2, 1e-3}, {0, 4}}));
  EXPECT_DOUBLE_EQ(f.H(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(f.H(1, 1), 0.25);
  EXPECT_DOUBLE_EQ(f.H(0, 1), 0.5 * (1e-3 - 1e-3 / 4));
  EXPECT_EQ(f.H(1, 0), 0.0);
  const auto a = make_test_matrix(s);
  EXPECT_LE(frobenius_distance(matmul(f.W, f.H), a), 1e-18);
}

TEST(ExactFactor2x2, SwappedBranchIsColumnExchange) {
  const auto s = unit_spec(2, 1e-3);
  const auto d = exact_factor_2x2(s, {Branch::Direct, {2, 4}, 1e-3});
  const auto w = exact_factor_2x2(s, {Branch::Swapped, {2, 4}, 1e-3});
  EXPECT_EQ(w.W(0, 1), d.W(0, 0));
  EXPECT_EQ(w.W(0, 0), d.W(0, 1));
  EXPECT_EQ(w.H(1, 0), d.H(0, 0));
  EXPECT_EQ(w.product(), d.product());
  EXPECT_FALSE(check_banded(w, PermutationMatrix::identity(2)));
  EXPECT_TRUE(check_banded(w, PermutationMatrix({1, 0})));
}

TEST(ExactFactor2x2, ConstraintViolations) {
  const auto s = unit_spec(2, 1e-3);
  EXPECT_THROW(exact_factor_2x2(s, {Branch::Direct, {1, 1}, 2e-3}), std::invalid_argument);
  EXPECT_THROW(exact_factor_2x2(s, {Branch::Direct, {0, 1}, 0}), std::invalid_argument);
  EXPECT_THROW(exact_factor_2x2(s, {Branch::Direct, {1, 1}, -1e-9}), std::invalid_argument);
  EXPECT_THROW(exact_factor_2x2(unit_spec(3, 1e-3), {}), DimensionError);
  EXPECT_NO_THROW(exact_factor_2x2(s, {Branch::Direct, {1, 1}, max_w1_1(s, 1)}));
}

TEST(ExactFactor2x2, RandomFamilyReconstructs) {
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    std::mt19937_64 rng(seed);
    const auto s = testing::random_spec(rng, 2, std::pow(10.0, -1.0 - static_cast<double>(seed % 4)));
    const auto w0 = testing::random_positive(rng, 2, 0.25, 4.0);
    const double w1 = std::uniform_real_distribution<double>(0, 1)(rng) * max_w1_1(s, w0[1]);
    const auto f = exact_factor_2x2(s, {seed % 2 ? Branch::Swapped : Branch::Direct, {w0[0], w0[1]}, w1});
    EXPECT_TRUE(f.W.is_nonnegative());
    EXPECT_TRUE(f.H.is_nonnegative());
    const auto a = make_test_matrix(s);
    EXPECT_LE(frobenius_distance(f.product(), a), 1e-14 * frobenius_norm(a)) << seed;
  }
}

TEST(SuperdiagonalIdentity, HoldsForOracle) {
  const auto s = unit_spec(2, 1e-3);
  const auto f = exact_factor_2x2(s, {Branch::Direct, {2, 4}, 1e-3});
  EXPECT_LE(superdiagonal_identity_residual(f, s), 1e-14);
  const FactorPair off{DenseMatrix::identity(2), DenseMatrix::identity(2)};
  EXPECT_DOUBLE_EQ(superdiagonal_identity_residual(off, s), 1e-3);
  EXPECT_THROW(superdiagonal_identity_residual({DenseMatrix::identity(3), DenseMatrix::identity(3)}, s),
               DimensionError);
}

TEST(SpecJson, RoundTripAndDefaults) {
  const BidiagonalSpec s{{1, 2}, {0.5}, 1e-3};
  EXPECT_EQ(spec_from_json(spec_to_json(s)), s);
  EXPECT_EQ(spec_from_json(R"({"a0":[1,1],"a1":[1]})").epsilon, 0.0);
  EXPECT_THROW(spec_from_json("{"), std::invalid_argument);
  EXPECT_THROW(spec_from_json("[1,2]"), std::invalid_argument);
  EXPECT_THROW(spec_from_json(R"({"a0":[1,1],"a1":["x"]})"), std::invalid_argument);
  EXPECT_THROW(spec_from_json(R"({"a0":[1,1],"a1":[1,1]})"), std::invalid_argument);
}

TEST(SpecJson, LoadFile) {
  const std::string path = ::testing::TempDir() + "nmftc_spec.json";
  {
    std::ofstream out(path);
    out << R"({"a0":[1,1,1],"a1":[1,1],"epsilon":0.001})";
  }
  EXPECT_EQ(load_spec_file(path), unit_spec(3, 1e-3));
  std::remove(path.c_str());
  EXPECT_THROW(load_spec_file(path), std::invalid_argument);
}

}  // namespace
}  // namespace nmftc
