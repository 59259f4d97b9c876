#include <gtest/gtest.h>

#include "recipstab/equation.hpp"
#include "test_support.hpp"

using namespace recipstab;
using namespace recipstab::testing;

namespace {

// Literal evaluation of the primary equation's two sides from its written
// definition, with C(l,k) from Pascal's triangle and powers by repeated
// multiplication.
std::pair<Rational, Rational> primary_sides_oracle(const Rational& r, unsigned l,
                                                   const Rational& x, const Rational& y) {
  auto f = [&](const Rational& t) { return repeated_pow(r / t, static_cast<int>(l)); };
  auto froot = [&](const Rational& t, unsigned j) { return repeated_pow(r / t, static_cast<int>(j)); };
  Rational sum = 0;
  for (unsigned k = 0; k <= l; k += 2)
    sum += repeated_pow(Rational(2), static_cast<int>(l - k)) * Rational(pascal_binomial(l, k)) *
           froot(x, k) * froot(y, l - k);
  const Rational den = repeated_pow(4 * froot(y, 2) - froot(x, 2), static_cast<int>(l));
  return {f(2 * x + y) + f(2 * x - y), 2 * f(x) * f(y) * sum / den};
}

std::pair<Rational, Rational> generalized_sides_oracle(const Rational& r, unsigned n,
                                                       const Rational& x, const Rational& y) {
  auto f = [&](const Rational& t) { return repeated_pow(r / t, static_cast<int>(n)); };
  auto froot = [&](const Rational& t, unsigned j) { return repeated_pow(r / t, static_cast<int>(j)); };
  Rational sum = 0;
  for (unsigned k = 0; k <= n; ++k)
    sum += (repeated_pow(Rational(2), static_cast<int>(n - k)) +
            repeated_pow(Rational(2), static_cast<int>(k))) *
           Rational(pascal_binomial(n, k)) * froot(x, k) * froot(y, n - k);
  const Rational den = repeated_pow(
      2 * froot(x, 2) + 5 * froot(x, 1) * froot(y, 1) + 2 * froot(y, 2), static_cast<int>(n));
  return {f(2 * x + y) + f(x + 2 * y), f(x) * f(y) * sum / den};
}

EvalPoint random_point(std::mt19937_64& gen, const EquationVariant& v) {
  for (;;) {
    EvalPoint pt{random_nonzero_rational(gen), random_nonzero_rational(gen)};
    if (is_admissible(v, pt)) return pt;
  }
}

}  // namespace

TEST(ReciprocalParams, Invariants) {
  EXPECT_THROW(ReciprocalParams(0, 2), DomainError);
  EXPECT_THROW(ReciprocalParams(1, 0), DomainError);
  EXPECT_EQ(ReciprocalParams(Rational(2, 3), 3).scale(), Rational(8, 27));
  EXPECT_THROW(EquationVariant::primary(0), DomainError);
}

TEST(EvalF, Examples) {
  EXPECT_EQ(eval_f(ReciprocalParams(1, 1), 3), Rational(1, 3));
  EXPECT_EQ(eval_f(ReciprocalParams(2, 2), -3), repeated_pow(make_rational(2, -3), 2));
  EXPECT_EQ(eval_f(ReciprocalParams(2, 2), -3), Rational(4, 9));
  EXPECT_EQ(eval_f(ReciprocalParams(5, 3), 1), 125);
  EXPECT_THROW(eval_f(ReciprocalParams(1, 1), 0), DomainError);
}

TEST(EvalFractionalPower, Examples) {
  EXPECT_EQ(eval_fractional_power(ReciprocalParams(1, 7), 2, 2), Rational(1, 4));
  EXPECT_EQ(eval_fractional_power(ReciprocalParams(3, 4), 1, 0), 1);
  // square root of f(4) = 1/4 through the root channel
  const ReciprocalParams p(2, 2);
  EXPECT_EQ(eval_f(p, 4), Rational(1, 4));
  EXPECT_EQ(eval_fractional_power(p, 4, 1), Rational(1, 2));
  EXPECT_THROW(eval_fractional_power(p, 4, 3), DomainError);
  EXPECT_THROW(eval_fractional_power(p, 0, 1), DomainError);
}

TEST(LambdaResidual, Examples) {
  const auto v1 = EquationVariant::primary(1);
  {
    const auto [lhs, rhs] = primary_sides_oracle(1, 1, 1, 1);
    EXPECT_EQ(lhs, Rational(4, 3));
    EXPECT_EQ(rhs, Rational(4, 3));  // 2*1*1*2 / 3
    EXPECT_EQ(lambda_residual(v1, ReciprocalParams(1, 1), {1, 1}), 0);
  }
  {
    const auto [lhs, rhs] = primary_sides_oracle(2, 3, 2, 5);
    EXPECT_EQ(lhs, rhs);
    EXPECT_EQ(lambda_residual(EquationVariant::primary(3), ReciprocalParams(2, 3), {2, 5}), 0);
  }
}

TEST(LambdaResidual, DegenerateDenominatorNamesGuard) {
  const auto v = EquationVariant::primary(2);
  try {
    lambda_residual(v, ReciprocalParams(1, 2), {1, 2});
    FAIL() << "expected DegenerateDenominator";
  } catch (const DegenerateDenominator& e) {
    EXPECT_EQ(e.guard(), "y != 2x");
  }
  try {
    lambda_residual(v, ReciprocalParams(1, 2), {1, -2});
    FAIL();
  } catch (const DegenerateDenominator& e) {
    EXPECT_EQ(e.guard(), "y != -2x");
  }
  try {
    lambda_residual(EquationVariant::generalized(2), ReciprocalParams(1, 2), {2, -1});
    FAIL();
  } catch (const DegenerateDenominator& e) {
    EXPECT_EQ(e.guard(), "x+2y != 0");
  }
  EXPECT_THROW(lambda_residual(v, ReciprocalParams(1, 2), {0, 1}), DegenerateDenominator);
}

TEST(LambdaResidual, DegreeMismatchRejected) {
  EXPECT_THROW(lambda_residual(EquationVariant::primary(3), ReciprocalParams(1, 2), {1, 1}),
               DomainError);
}

TEST(LambdaResidual, AgreesWithLiteralOracleOffSolution) {
  // Literature coefficients with one entry moved: residual must equal the
  // oracle's LHS - RHS computed with the same moved entry.
  const auto v = EquationVariant::primary(2);
  CoefficientMap moved{{0, 1}, {2, 4}};
  const ReciprocalParams p(1, 2);
  const Rational x = 1, y = 3;
  const Rational got = residual_with_coefficients(v, moved, p, {x, y});
  // f(5) + f(-1) - 2 f(1) f(3) (1 * (1/3)^2 + 4 * 1) / (4/9 - 1)^2
  const Rational expected = Rational(1, 25) + 1 -
                            2 * Rational(1, 9) * (Rational(1, 9) + 4) /
                                repeated_pow(Rational(4, 9) - 1, 2);
  EXPECT_EQ(got, expected);
  EXPECT_NE(got, 0);
}

TEST(LambdaResidual, ExactSolutionNullityPrimary) {
  auto gen = rng(42);
  for (int i = 0; i < 500; ++i) {
    const unsigned l = static_cast<unsigned>(uniform(gen, 1, 8));
    const auto v = EquationVariant::primary(l);
    const ReciprocalParams p(random_nonzero_rational(gen), l);
    const EvalPoint pt = random_point(gen, v);
    ASSERT_EQ(lambda_residual(v, p, pt), 0);
    const auto [lhs, rhs] = primary_sides_oracle(p.root_coeff(), l, pt.x, pt.y);
    ASSERT_EQ(lhs, rhs);
  }
}

TEST(LambdaResidual, ExactSolutionNullityGeneralized) {
  auto gen = rng(43);
  for (int i = 0; i < 500; ++i) {
    const unsigned n = static_cast<unsigned>(uniform(gen, 1, 6));
    const auto v = EquationVariant::generalized(n);
    const ReciprocalParams p(random_nonzero_rational(gen), n);
    const EvalPoint pt = random_point(gen, v);
    ASSERT_EQ(lambda_residual(v, p, pt), 0);
    const auto [lhs, rhs] = generalized_sides_oracle(p.root_coeff(), n, pt.x, pt.y);
    ASSERT_EQ(lhs, rhs);
  }
}

TEST(LambdaResidual, EvenInY) {
  // Residual of a non-solution coefficient set is nonzero but still even in y.
  auto gen = rng(5);
  for (int i = 0; i < 200; ++i) {
    const unsigned l = static_cast<unsigned>(uniform(gen, 1, 8));
    const auto v = EquationVariant::primary(l);
    const ReciprocalParams p(random_nonzero_rational(gen), l);
    const EvalPoint pt = random_point(gen, v);
    ASSERT_EQ(lambda_residual(v, p, pt), lambda_residual(v, p, {pt.x, -pt.y}));
    CoefficientMap perturbed = specialize_coefficients(v);
    perturbed[0] += 1;
    ASSERT_EQ(residual_with_coefficients(v, perturbed, p, pt),
              residual_with_coefficients(v, perturbed, p, {pt.x, -pt.y}));
  }
}

TEST(LambdaResidualNumeric, ExactSolutionVanishes) {
  const auto v = EquationVariant::primary(2);
  const ReciprocalParams p(1, 2);
  auto f = [&](const Rational& x) { return to_real(eval_f(p, x)); };
  const Real lam = lambda_residual_numeric(v, f, {1, 3});
  EXPECT_LE(abs(lam), ldexp(Real(1), -100));
}

TEST(LambdaResidualNumeric, ShiftedReciprocal) {
  const auto v = EquationVariant::primary(1);
  auto f = [](const Rational& x) { return to_real(1 / x) + Real("0.01"); };
  const Real lam = lambda_residual_numeric(v, f, {1, 1});
  // At y = x the residual reduces to f(3x) - f(x)/3 = 0.01 * 2/3.
  EXPECT_TRUE(near_rel(lam, Real("0.01") * 2 / 3, Real("1e-30")));
  EXPECT_NE(lam, 0);
  EXPECT_LT(abs(lam), Real("0.1"));
}

TEST(LambdaResidualNumeric, NonpositiveSampleIsRootBranchError) {
  const auto v = EquationVariant::primary(1);
  auto f = [](const Rational& x) { return x == 1 ? Real(-1) : to_real(1 / x); };
  EXPECT_THROW(lambda_residual_numeric(v, f, {1, Rational(1, 2)}), RootBranchError);
  // f(1) needed as f(2x - y) with x = 1, y = 1: 2 - 1 = 1
  EXPECT_THROW(lambda_residual_numeric(v, f, {2, 3}), RootBranchError);
  EXPECT_THROW(lambda_residual_numeric(v, f, {1, 2}), DegenerateDenominator);
}

TEST(ScalingCheck, Examples) {
  {
    const auto [a, b] = scaling_check(ReciprocalParams(1, 1), 1);
    EXPECT_EQ(a, Rational(1, 3));
    EXPECT_EQ(b, Rational(1, 3));
  }
  {
    const auto [a, b] = scaling_check(ReciprocalParams(2, 2), -3);
    EXPECT_EQ(a, Rational(4, 81));
    EXPECT_EQ(b, Rational(4, 81));
  }
  {
    const auto [a, b] = scaling_check(ReciprocalParams(1, 5), Rational(1, 3));
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, 1);
  }
  EXPECT_THROW(scaling_check(ReciprocalParams(1, 1), 0), DomainError);
}

TEST(SpecializeCoefficients, LiteratureValues) {
  using M = CoefficientMap;
  EXPECT_EQ(specialize_coefficients(EquationVariant::primary(2)), (M{{0, 4}, {2, 1}}));
  EXPECT_EQ(specialize_coefficients(EquationVariant::primary(4)), (M{{0, 16}, {2, 24}, {4, 1}}));
  EXPECT_EQ(specialize_coefficients(EquationVariant::primary(7)),
            (M{{0, 128}, {2, 672}, {4, 280}, {6, 14}}));
  EXPECT_EQ(specialize_coefficients(EquationVariant::primary(8)),
            (M{{0, 256}, {2, 1792}, {4, 1120}, {6, 112}, {8, 1}}));
  EXPECT_EQ(specialize_coefficients(EquationVariant::generalized(2)), (M{{0, 5}, {1, 8}, {2, 5}}));
  EXPECT_EQ(specialize_coefficients(EquationVariant::generalized(3)),
            (M{{0, 9}, {1, 18}, {2, 18}, {3, 9}}));
}

TEST(SpecializeCoefficients, SumMatchesIdentity) {
  for (unsigned l = 1; l <= 30; ++l) {
    BigInt sum = 0;
    for (const auto& [k, c] : specialize_coefficients(EquationVariant::primary(l))) sum += c;
    ASSERT_EQ(sum, even_binomial_sum(l));
    ASSERT_EQ(2 * sum, boost::multiprecision::pow(BigInt(3), l) + 1);
  }
}

TEST(LiteratureComparison, Verdicts) {
  EXPECT_EQ(compare_with_literature(EquationVariant::primary(2)).verdict,
            SpecializationVerdict::kMatch);
  EXPECT_EQ(compare_with_literature(EquationVariant::primary(4)).verdict,
            SpecializationVerdict::kMatch);
  EXPECT_EQ(compare_with_literature(EquationVariant::primary(8)).verdict,
            SpecializationVerdict::kMatch);
  EXPECT_EQ(compare_with_literature(EquationVariant::generalized(2)).verdict,
            SpecializationVerdict::kMatch);
  EXPECT_EQ(compare_with_literature(EquationVariant::generalized(3)).verdict,
            SpecializationVerdict::kMatch);
  EXPECT_EQ(compare_with_literature(EquationVariant::primary(5)).verdict,
            SpecializationVerdict::kNoReference);
}

TEST(LiteratureComparison, SepticLeadingTermNote) {
  const auto cmp = compare_with_literature(EquationVariant::primary(7));
  EXPECT_EQ(cmp.verdict, SpecializationVerdict::kMatchWithNote);
  EXPECT_EQ(cmp.expanded_residual, 0);
  ASSERT_TRUE(cmp.reference_residual.has_value());
  EXPECT_NE(*cmp.reference_residual, 0);
  EXPECT_NE(cmp.note.find("published 128*f(x)^{7/7}f(y)^{0/7} vs expanded k=0"), std::string::npos)
      << cmp.note;
  EXPECT_NE(cmp.note.find("expanded form only"), std::string::npos);
}
