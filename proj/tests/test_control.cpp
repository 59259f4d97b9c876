#include <gtest/gtest.h>

#include "recipstab/control.hpp"
#include "test_support.hpp"

using namespace recipstab;
using namespace recipstab::testing;

namespace {

// Plain summation of the series for a fixed, large number of terms; used as
// the limit oracle for controls whose ratio is comfortably below 1.
Real brute_force_series(const ControlFunction& q, unsigned l, const Real& x, unsigned terms) {
  Real sum = 0;
  for (unsigned s = 0; s < terms; ++s) {
    const Real t = x / pow(Real(3), Real(s + 1));
    sum += eval_control(q, t, t) / pow(Real(3), Real(l * s));
  }
  return sum;
}

}  // namespace

TEST(EvalControl, Examples) {
  EXPECT_EQ(eval_control(ControlFunction::constant(2), 5, 7), 2);
  EXPECT_EQ(eval_control(ControlFunction::sum_power(1, 2), 2, 3), 13);
  EXPECT_EQ(eval_control(ControlFunction::product_power(1, 1, 1), 2, 3), 6);
  // 1 * (2^1 * 3^1 + 4 + 9) with alpha = 2: sqrt(4) sqrt(9) + 4 + 9
  EXPECT_EQ(eval_control(ControlFunction::mixed_power(1, 2), 2, 3), 19);
  const auto sub = ControlFunction::submultiplicative(2, AlphaFunction::power_law(1, -2));
  EXPECT_TRUE(near_rel(eval_control(sub, 1, 2), Real(2) * (1 + Real(1) / 4), Real("1e-35")));
}

TEST(EvalControl, Errors) {
  EXPECT_THROW(ControlFunction::constant(-1), DomainError);
  EXPECT_THROW(eval_control(ControlFunction::sum_power(1, -1), 0, 1), DomainError);
  EXPECT_EQ(eval_control(ControlFunction::sum_power(1, 2), 0, 1), 1);
}

TEST(SeriesBound, ConstantTendsToThreeHalves) {
  const auto q = ControlFunction::constant(1);
  const auto s = series_bound(q, 1, 1, 10, Real("1e-40"));
  EXPECT_FALSE(s.converged);
  EXPECT_EQ(s.terms_used, 10u);
  EXPECT_LT(s.partial_sum, Real(3) / 2);
  EXPECT_GT(s.partial_sum, Real(3) / 2 - Real("1e-4"));
  const auto full = series_bound(q, 1, 1, 4096, Real("1e-30"));
  EXPECT_TRUE(full.converged);
  EXPECT_TRUE(near_rel(full.partial_sum, Real(3) / 2, Real("1e-29")));
}

TEST(SeriesBound, TwoTermsOfConstant) {
  const auto s = series_bound(ControlFunction::constant(1), 1, 1, 2, Real("1e-40"));
  EXPECT_EQ(s.terms_used, 2u);
  EXPECT_TRUE(near_rel(s.partial_sum, Real(4) / 3, Real("1e-36")));
  ASSERT_TRUE(s.tail_bound.has_value());
  // exact geometric tail: 1/9 + 1/27 + ... = 1/6
  EXPECT_TRUE(near_rel(*s.tail_bound, Real(1) / 6, Real("1e-36")));
}

TEST(SeriesBound, SumPowerLimit) {
  const auto s = series_bound(ControlFunction::sum_power(1, 1), 1, 1, 4096, Real("1e-30"));
  EXPECT_TRUE(s.converged);
  EXPECT_TRUE(near_rel(s.partial_sum, Real(3) / 4, Real("1e-29")));
}

TEST(SeriesBound, DivergentSeriesIsUnbounded) {
  for (const Real& alpha : {Real(-1), Real(-2), Real("-1.5")}) {
    const auto s = series_bound(ControlFunction::sum_power(1, alpha), 1, 1, 50, Real("1e-20"));
    EXPECT_FALSE(s.converged);
    EXPECT_FALSE(s.tail_bound.has_value());
    EXPECT_FALSE(s.upper().has_value());
    EXPECT_EQ(s.terms_used, 50u);
  }
}

TEST(SeriesBound, ZeroControlConvergesImmediately) {
  const auto s = series_bound(ControlFunction::constant(0), 3, 2, 100, Real("1e-20"));
  EXPECT_TRUE(s.converged);
  EXPECT_EQ(s.partial_sum, 0);
  EXPECT_EQ(*s.tail_bound, 0);
  EXPECT_EQ(s.terms_used, 1u);
}

TEST(SeriesBound, PreconditionErrors) {
  EXPECT_THROW(series_bound(ControlFunction::constant(1), 1, 1, 0, Real(1)), DomainError);
  EXPECT_THROW(series_bound(ControlFunction::constant(1), 1, 0, 4, Real(1)), DomainError);
}

TEST(SeriesBound, SubmultiplicativeAgainstBruteForce) {
  // alpha(t) = t^2 + t^3 is submultiplicative on t >= 0 up to its own factor.
  AlphaFunction alpha;
  alpha.label = "t^2+t^3";
  alpha.fn = [](const Real& t) { return t * t + t * t * t; };
  const auto q = ControlFunction::submultiplicative(Real("0.5"), alpha);
  const auto s = series_bound(q, 2, Real(4), 4096, Real("1e-30"));
  ASSERT_TRUE(s.converged);
  const Real oracle = brute_force_series(q, 2, Real(4), 200);
  EXPECT_TRUE(near_rel(s.partial_sum, oracle, Real("1e-28")));
  EXPECT_LE(s.partial_sum, oracle);
  EXPECT_GE(*s.upper(), oracle);
}

TEST(ClosedFormBound, Examples) {
  const auto c = closed_form_bound(ControlFunction::constant(1), 2, 1);
  ASSERT_TRUE(c.is_finite());
  EXPECT_TRUE(near_rel(c.value, Real(9) / 8, Real("1e-36")));
  const auto p = closed_form_bound(ControlFunction::product_power(1, 1, 1), 1, 1);
  ASSERT_TRUE(p.is_finite());
  EXPECT_TRUE(near_rel(p.value, Real(3) / 26, Real("1e-36")));
  EXPECT_THROW(closed_form_bound(ControlFunction::sum_power(1, -1), 1, 1), ParameterExclusion);
  EXPECT_THROW(closed_form_bound(ControlFunction::product_power(1, -1, -1), 2, 1),
               ParameterExclusion);
  EXPECT_EQ(closed_form_bound(ControlFunction::sum_power(1, -3), 1, 1).status,
            BoundStatus::kUnbounded);
  EXPECT_EQ(closed_form_bound(ControlFunction::submultiplicative(1, AlphaFunction::power_law(1, 2)),
                              1, 1)
                .status,
            BoundStatus::kNotApplicable);
}

TEST(ClosedFormBound, AgreesWithSeriesOnRandomSweep) {
  auto gen = rng(2024);
  for (int i = 0; i < 400; ++i) {
    const unsigned l = static_cast<unsigned>(uniform(gen, 1, 8));
    const Real eps = random_real(gen, 1e-6, 10);
    const Real x = random_real(gen, 1e-6, 10);
    const Real alpha = random_real(gen, -static_cast<double>(l) + 0.1, 5);
    ControlFunction q = ControlFunction::constant(eps);
    switch (i % 4) {
      case 1: q = ControlFunction::sum_power(eps, alpha); break;
      case 2: q = ControlFunction::mixed_power(eps, alpha); break;
      case 3: {
        const Real p = random_real(gen, -3, 3);
        q = ControlFunction::product_power(eps, p, alpha - p);
        break;
      }
      default: break;
    }
    const auto closed = closed_form_bound(q, l, x);
    ASSERT_TRUE(closed.is_finite());
    const auto series = series_bound(q, l, x, 100000, Real("1e-30"));
    ASSERT_TRUE(series.converged) << "i=" << i;
    ASSERT_TRUE(near_rel(series.partial_sum, closed.value, Real("1e-20"))) << "i=" << i;
    // the limit lies in [partial, partial + tail]
    ASSERT_LE(series.partial_sum, closed.value * (1 + Real("1e-34")));
    ASSERT_GE(*series.upper(), closed.value * (1 - Real("1e-34")));
  }
}

TEST(SeriesBound, PartialSumsAreMonotone) {
  const auto q = ControlFunction::sum_power(Real("0.3"), Real("-0.5"));
  Real previous = -1;
  for (unsigned m = 1; m <= 40; ++m) {
    const auto s = series_bound(q, 1, 2, m, Real("1e-60"));
    ASSERT_GE(s.partial_sum, previous);
    previous = s.partial_sum;
  }
}
