#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "nmftc/structure.hpp"

namespace nmftc {
namespace {

using testing::random_permutation;

// Diagonal-with-gaps monomial matrix: P^-1 D for a random permutation.
DenseMatrix random_monomial(std::mt19937_64& rng, const PermutationMatrix& p) {
  const auto d = testing::random_positive(rng, p.size());
  DenseMatrix m(p.size(), p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m(i, p[i]) = d[i];
  return m;
}

// 3x3 de-permuted banded pair with the given superdiagonal entries.
FactorPair banded3(double w1a, double w1b, double h1a, double h1b) {
  auto w = DenseMatrix::from_rows({{1.0, w1a, 0}, {0, 1.5, w1b}, {0, 0, 2.0}});
  auto h = DenseMatrix::from_rows({{0.8, h1a, 0}, {0, 1.2, h1b}, {0, 0, 0.5}});
  return {w, h};
}

TEST(Thresholds, DefaultsAndValidation) {
  const Thresholds t;
  EXPECT_EQ(t.absolute_negligible, 1e-10);
  EXPECT_EQ(t.relative_order2, 10.0);
  EXPECT_DOUBLE_EQ(t.order2_cut(1e-3), 1e-5);
  EXPECT_THROW((Thresholds{0.0, 10.0}).validate(), std::invalid_argument);
  EXPECT_THROW((Thresholds{1e-10, -1.0}).validate(), std::invalid_argument);
}

TEST(IsMonomial, Examples) {
  EXPECT_TRUE(is_monomial(DenseMatrix::identity(3)));
  EXPECT_TRUE(is_monomial(DenseMatrix::from_rows({{0, 2}, {3, 0}})));
  EXPECT_FALSE(is_monomial(DenseMatrix::from_rows({{1, 1}, {0, 1}})));
  EXPECT_FALSE(is_monomial(DenseMatrix::from_rows({{1, 0}, {0, 0}})));
  EXPECT_TRUE(is_monomial(DenseMatrix::from_rows({{1, 1e-12}, {0, 1}})));
  EXPECT_FALSE(is_monomial(DenseMatrix(2, 3, 1.0)));
}

TEST(IsMonomial, InvariantUnderPermutation) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = 2 + seed % 7;
    const auto p = random_permutation(rng, n);
    const auto m = random_monomial(rng, p);
    const auto q = random_permutation(rng, n);
    EXPECT_TRUE(is_monomial(m));
    EXPECT_TRUE(is_monomial(matmul(m, q.to_dense())));
    EXPECT_TRUE(is_monomial(matmul(q.to_dense(), m)));
    auto dense = m;
    dense(0, (p[0] + 1) % n) = 0.3;
    EXPECT_FALSE(is_monomial(dense));
    EXPECT_FALSE(is_monomial(matmul(q.to_dense(), dense)));
  }
}

TEST(RecoverPermutation, Examples) {
  EXPECT_TRUE(recover_permutation(DenseMatrix::diagonal(std::vector<double>{0.5, 0.25})).is_identity());
  EXPECT_EQ(recover_permutation(DenseMatrix::from_rows({{0, 3}, {2, 0}})), PermutationMatrix({1, 0}));
  EXPECT_THROW(recover_permutation(DenseMatrix::from_rows({{1, 1}, {0, 1}})), StructureError);
}

TEST(RecoverPermutation, InvertsMaterialization) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = 2 + seed % 7;
    const auto p = random_permutation(rng, n);
    const auto h = random_monomial(rng, p);
    const auto w = random_monomial(rng, p.inverse());
    const auto got = recover_permutation(h);
    EXPECT_EQ(got, p);
    const auto [wp, ph] = permute(w, h, got);
    const auto diag = allowed_support(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j) {
          EXPECT_EQ(ph(i, j), 0.0);
          EXPECT_EQ(wp(i, j), 0.0);
        }
      }
    }
    EXPECT_TRUE(nonzero_mask(ph, 0).subset_of(diag));
  }
}

TEST(DominantPermutation, PicksRowMaxima) {
  const auto h = DenseMatrix::from_rows({{0.1, 2.0}, {1.0, 1e-3}});
  EXPECT_EQ(dominant_permutation(h), PermutationMatrix({1, 0}));
  EXPECT_FALSE(dominant_permutation(DenseMatrix::from_rows({{2, 1}, {2, 1}})).has_value());
}

TEST(CheckBanded, Examples) {
  const auto s = unit_spec(2, 1e-3);
  const auto f = exact_factor_2x2(s, {Branch::Direct, {2, 4}, 1e-3});
  EXPECT_TRUE(check_banded(f, PermutationMatrix::identity(2)));
  auto bad = f;
  bad.H(1, 0) = 0.7;
  EXPECT_FALSE(check_banded(bad, PermutationMatrix::identity(2)));
  bad = f;
  bad.W(1, 0) = 2e-10;
  EXPECT_FALSE(check_banded(bad, PermutationMatrix::identity(2)));
  bad.W(1, 0) = 1e-10;
  EXPECT_TRUE(check_banded(bad, PermutationMatrix::identity(2)));
  EXPECT_THROW(check_banded(f, PermutationMatrix::identity(3)), DimensionError);
}

TEST(CheckBanded, RandomBandedPairsUnderPermutation) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = 2 + seed % 7;
    const auto d = testing::random_banded_pair(rng, n, 1e-2);
    const auto p = random_permutation(rng, n);
    // Hide the band behind P: W' = W P^-1, H' = P H, so (W'P, P^-1 H') = (W, H).
    const auto [w, h] = permute(d.W, d.H, p.inverse());
    EXPECT_TRUE(check_banded({w, h}, p)) << seed;
  }
}

TEST(Classify, FourTypes) {
  const double e = 1e-3;
  EXPECT_EQ(classify(banded3(0, 0, e * 0.8, e * 1.2), e).type, SolutionType::TypeI);
  EXPECT_EQ(classify(banded3(e * 1.5, e * 2, 0, 0), e).type, SolutionType::TypeII);
  EXPECT_EQ(classify(banded3(0, e * 2, e * 0.8, 0), e).type, SolutionType::TypeIII);
  EXPECT_EQ(classify(banded3(e * 1.5, 0, 0, e * 1.2), e).type, SolutionType::TypeIV);
  EXPECT_TRUE(classify(banded3(0, 0, e * 0.8, e * 1.2), e).clean);
}

// Entries at 3 eps^2 and 2 eps^2 fall under the 10 eps^2 cut.
TEST(Classify, SecondOrderEntriesAreStructuralZeros) {
  const double e = 1e-3;
  const auto c = classify(banded3(3 * e * e, e * 2.0, e * 0.8, 2 * e * e), e);
  EXPECT_EQ(c.type, SolutionType::TypeIII);
  EXPECT_TRUE(c.clean);
}

TEST(Classify, TieBreakIgnoresSmallerEntry) {
  const double e = 1e-3;
  const auto c = classify(banded3(e * 0.2, e * 2, e * 0.8, 0), e);
  EXPECT_EQ(c.type, SolutionType::TypeIII);
  EXPECT_FALSE(c.clean);
}

TEST(Classify, BothZeroAtOneIndexIsMixed) {
  const double e = 1e-3;
  const auto c = classify(banded3(0, e, 0, 0), e);
  EXPECT_EQ(c.type, SolutionType::Mixed);
  EXPECT_FALSE(c.clean);
}

TEST(Classify, WrongSizeThrows) {
  EXPECT_THROW(classify(FactorPair{DenseMatrix::identity(2), DenseMatrix::identity(2)}, 1e-3), DimensionError);
}

TEST(Classify, InvariantUnderHidingPermutation) {
  const double e = 1e-3;
  const auto spec = unit_spec(3, e);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(seed);
    const auto d = banded3(seed % 2 ? 0 : e, seed % 3 ? 0 : e, seed % 2 ? e : 0, seed % 3 ? e : 0);
    const auto p = random_permutation(rng, 3);
    const auto [w, h] = permute(d.W, d.H, p.inverse());
    const auto expected = classify(d, e);
    const auto got = classify(FactorPair{w, h}, p, spec);
    EXPECT_EQ(got.type, expected.type);
    EXPECT_EQ(got.clean, expected.clean);
  }
}

TEST(EpsilonRelations, TypeTwoSolution) {
  const double e = 1e-3;
  const auto spec = unit_spec(3, e);
  auto f = banded3(e * 1.5, e * 2.0, 0, 0);
  const auto rel = check_epsilon_relations(f, PermutationMatrix::identity(3), spec);
  ASSERT_EQ(rel.size(), 2u);
  for (const auto& r : rel) {
    EXPECT_EQ(r.side, CarrierSide::W);
    ASSERT_TRUE(r.deviation.has_value());
    EXPECT_LE(*r.deviation, 1e-15);
  }
}

TEST(EpsilonRelations, TypeOneSolution) {
  const double e = 1e-3;
  const auto spec = unit_spec(3, e);
  const auto rel = check_epsilon_relations(banded3(0, 0, e * 0.8, e * 1.2), PermutationMatrix::identity(3), spec);
  for (const auto& r : rel) {
    EXPECT_EQ(r.side, CarrierSide::H);
    EXPECT_LE(*r.deviation, 1e-15);
  }
}

TEST(EpsilonRelations, OracleAtConstraintBoundary) {
  const BidiagonalSpec spec{{1.5, 0.7}, {2.0}, 1e-3};
  const double w02 = 3.0;
  const auto f = exact_factor_2x2(spec, {Branch::Direct, {0.9, w02}, max_w1_1(spec, w02)});
  const auto rel = check_epsilon_relations(f, PermutationMatrix::identity(2), spec);
  ASSERT_EQ(rel.size(), 1u);
  EXPECT_EQ(rel[0].side, CarrierSide::W);
  EXPECT_LE(*rel[0].deviation, 1e-14);
}

TEST(EpsilonRelations, BothAndNeither) {
  const double e = 1e-3;
  const auto rel = check_epsilon_relations(banded3(e, 0, e, 0), PermutationMatrix::identity(3), unit_spec(3, e));
  EXPECT_EQ(rel[0].side, CarrierSide::Both);
  EXPECT_EQ(rel[1].side, CarrierSide::Neither);
  EXPECT_FALSE(rel[0].deviation.has_value());
}

EpsilonSample oracle_sample(std::uint64_t seed, double eps, double w1_scale) {
  const auto spec = unit_spec(2, eps);
  const std::array<double, 2> w0{2.0, 4.0};
  return {seed, eps, exact_factor_2x2(spec, {Branch::Direct, w0, w1_scale * max_w1_1(spec, w0[1])})};
}

TEST(EstimateSlopes, OracleSlopesAreConstant) {
  const auto base = oracle_sample(1, 0.0, 0.0);
  const std::vector<EpsilonSample> samples{oracle_sample(1, 1e-4, 1.0), oracle_sample(1, 1e-2, 1.0),
                                           oracle_sample(1, 1e-3, 1.0)};
  const auto r = estimate_slopes(samples, base);
  EXPECT_EQ(r.side, ParameterSide::W);
  ASSERT_EQ(r.parameters.size(), 3u);
  const auto& w1 = r.parameters[2];
  EXPECT_EQ(w1.parameter, "w1(1)");
  EXPECT_EQ(w1.epsilons, (std::vector<double>{1e-2, 1e-3, 1e-4}));
  for (double s : w1.slopes) EXPECT_NEAR(s, 4.0, 1e-12);
  for (double c : w1.slope_changes) EXPECT_LE(c, 1e-12);
  for (double s : r.parameters[0].slopes) EXPECT_EQ(s, 0.0);
}

TEST(EstimateSlopes, SwitchesToHSideWhenWCarriesNothing) {
  const auto base = oracle_sample(2, 0.0, 0.0);
  const std::vector<EpsilonSample> samples{oracle_sample(2, 1e-2, 0.0), oracle_sample(2, 1e-3, 0.0)};
  const auto r = estimate_slopes(samples, base);
  EXPECT_EQ(r.side, ParameterSide::H);
  EXPECT_EQ(r.parameters[2].source, "h1(1)");
  EXPECT_EQ(r.parameters[2].parameter, "w1(1)");
  for (double s : r.parameters[2].slopes) EXPECT_NEAR(s, 0.5, 1e-12);
}

TEST(EstimateSlopes, Errors) {
  const auto base = oracle_sample(1, 0.0, 0.0);
  EXPECT_THROW(estimate_slopes({}, base), std::invalid_argument);
  const std::vector<EpsilonSample> other_seed{oracle_sample(7, 1e-3, 1.0)};
  EXPECT_THROW(estimate_slopes(other_seed, base), std::invalid_argument);
  const std::vector<EpsilonSample> dup{oracle_sample(1, 1e-3, 1.0), oracle_sample(1, 1e-3, 0.5)};
  EXPECT_THROW(estimate_slopes(dup, base), std::invalid_argument);
  std::vector<EpsilonSample> zero{oracle_sample(1, 1e-3, 1.0)};
  zero[0].epsilon = 0.0;
  EXPECT_THROW(estimate_slopes(zero, base), std::invalid_argument);
}

TEST(SolutionType, NamesRoundTrip) {
  for (auto t : {SolutionType::TypeI, SolutionType::TypeII, SolutionType::TypeIII, SolutionType::TypeIV,
                 SolutionType::Mixed}) {
    EXPECT_EQ(parse_solution_type(to_string(t)), t);
  }
  EXPECT_FALSE(parse_solution_type("V").has_value());
}

}  // namespace
}  // namespace nmftc
