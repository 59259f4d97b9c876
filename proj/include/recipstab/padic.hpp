#pragma once

// p-adic valuations and norms on rationals, and the non-Archimedean stability
// machinery: the vanishing condition on |1/3^l|^m G(x/3^{m+1}, y/3^{m+1}),
// the direct bound max_k |1/3^l|^{k+1} G(x/3^{k+1}, x/3^{k+1}), and the
// published closed forms it is compared against.
//
// G is real-valued and is evaluated at p-adic magnitudes. Along the
// contraction x -> x/3 a magnitude t becomes t * u, with u = 1/|3|_p, which
// is 3 for p = 3 and 1 otherwise.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "recipstab/control.hpp"
#include "recipstab/equation.hpp"
#include "recipstab/errors.hpp"
#include "recipstab/exact.hpp"

namespace recipstab {

inline bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t d = 2; d <= n / d; ++d)
    if (n % d == 0) return false;
  return true;
}

class PadicContext {
 public:
  explicit PadicContext(std::uint64_t prime) : prime_(prime) {
    if (!is_prime(prime)) throw DomainError(std::to_string(prime) + " is not prime");
  }
  std::uint64_t prime() const noexcept { return prime_; }

 private:
  std::uint64_t prime_;
};

namespace detail {
inline std::int64_t integer_valuation(BigInt n, std::uint64_t p) {
  std::int64_t v = 0;
  const BigInt bp = p;
  n = abs(n);
  while (n % bp == 0) {
    n /= bp;
    ++v;
  }
  return v;
}
}  // namespace detail

/// v_p(q); nullopt stands for +infinity (q = 0).
inline std::optional<std::int64_t> valuation(const PadicContext& ctx, const Rational& q) {
  if (q == 0) return std::nullopt;
  return detail::integer_valuation(boost::multiprecision::numerator(q), ctx.prime()) -
         detail::integer_valuation(boost::multiprecision::denominator(q), ctx.prime());
}

/// |q|_p = p^{-v_p(q)}, exact.
inline Rational padic_norm(const PadicContext& ctx, const Rational& q) {
  const auto v = valuation(ctx, q);
  if (!v) return 0;
  return rational_pow(Rational(BigInt(ctx.prime())), -*v);
}

// 1/|3|_p: the factor by which a magnitude grows per contraction step.
inline Real contraction_growth(const PadicContext& ctx) {
  return to_real(1 / padic_norm(ctx, 3));
}

enum class C0Status { kHolds, kFails, kUnknown };

inline const char* to_string(C0Status s) {
  switch (s) {
    case C0Status::kHolds: return "HOLDS";
    case C0Status::kFails: return "FAILS";
    case C0Status::kUnknown: return "UNKNOWN";
  }
  return "?";
}

inline constexpr unsigned kDefaultProbeDepth = 32;

namespace detail {

// |1/3^l|^{m + shift} G(x u^{m+1}, y u^{m+1}) for m = 0..count-1
inline std::vector<Real> contracted_terms(const PadicContext& ctx, const ControlFunction& g,
                                          unsigned l, const Real& x_norm, const Real& y_norm,
                                          unsigned count, unsigned shift) {
  const Real u = contraction_growth(ctx);
  const Real ul = pow(u, Real(l));
  std::vector<Real> terms;
  terms.reserve(count);
  Real weight = pow(ul, Real(shift));
  Real sx = x_norm * u, sy = y_norm * u;
  for (unsigned m = 0; m < count; ++m) {
    terms.push_back(weight * eval_control(g, sx, sy));
    weight *= ul;
    sx *= u;
    sy *= u;
  }
  return terms;
}

// Band around 1 inside which a term ratio counts as 1.
inline Real ratio_band() {
  return ldexp(Real(1), -static_cast<int>(precision_bits() / 2));
}

struct Trend {
  bool all_zero = false;
  bool has_zero = false;
  Real min_ratio = 0;
  Real max_ratio = 0;
};

inline Trend trend_of(const std::vector<Real>& terms) {
  Trend t;
  t.all_zero = std::all_of(terms.begin(), terms.end(), [](const Real& v) { return v == 0; });
  t.has_zero = std::any_of(terms.begin(), terms.end(), [](const Real& v) { return v == 0; });
  if (t.all_zero || t.has_zero) return t;
  bool first = true;
  for (std::size_t i = 0; i + 1 < terms.size(); ++i) {
    const Real r = terms[i + 1] / terms[i];
    if (first || r < t.min_ratio) t.min_ratio = r;
    if (first || r > t.max_ratio) t.max_ratio = r;
    first = false;
  }
  return t;
}

// Growth exponent of the terms in powers of u, for power-family controls.
inline std::optional<Real> growth_exponent(const ControlFunction& g, unsigned l) {
  const auto diag = diagonal_power(g);
  if (!diag) return std::nullopt;
  return Real(l) + diag->exponent;
}

}  // namespace detail

/// Numeric trend probe of the vanishing condition over m = 0..probe_m.
inline C0Status c0_probe(const PadicContext& ctx, const ControlFunction& g, unsigned l,
                         const Real& x_norm, const Real& y_norm, unsigned probe_m) {
  const auto terms = detail::contracted_terms(ctx, g, l, x_norm, y_norm, probe_m + 1, 0);
  const auto t = detail::trend_of(terms);
  if (t.all_zero) return C0Status::kHolds;
  if (t.has_zero) return C0Status::kUnknown;
  const Real band = detail::ratio_band();
  if (t.max_ratio <= 1 - band) return C0Status::kHolds;
  if (t.min_ratio >= 1 - band) return C0Status::kFails;
  return C0Status::kUnknown;
}

/// Decides lim_m |1/3^l|^m G(x/3^{m+1}, y/3^{m+1}) = 0. Power families are
/// decided from the sign of the growth exponent; other controls are probed.
inline C0Status c0_condition_check(const PadicContext& ctx, const ControlFunction& g, unsigned l,
                                   const Real& x_norm, const Real& y_norm,
                                   unsigned probe_m = kDefaultProbeDepth) {
  if (probe_m < 4) throw DomainError("c0 probe needs probe_m >= 4");
  if (!(x_norm > 0) || !(y_norm > 0)) throw DomainError("norms must be positive");
  const auto exponent = detail::growth_exponent(g, l);
  if (!exponent) return c0_probe(ctx, g, l, x_norm, y_norm, probe_m);
  if (g.magnitude() == 0) return C0Status::kHolds;
  if (contraction_growth(ctx) == 1) return C0Status::kFails;  // terms are constant
  return *exponent < 0 ? C0Status::kHolds : C0Status::kFails;
}

struct DirectBound {
  bool diverging = false;
  Real bound = 0;      // max over the probed k (also kept when diverging)
  unsigned k_argmax = 0;
  std::vector<Real> terms;
};

/// max over k = 0..K of |1/3^l|^{k+1} G(x/3^{k+1}, x/3^{k+1}).
inline DirectBound direct_bound(const PadicContext& ctx, const ControlFunction& g, unsigned l,
                                   const Real& x_norm, unsigned max_k = kDefaultProbeDepth) {
  if (max_k < 1) throw DomainError("direct_bound needs K >= 1");
  if (!(x_norm > 0)) throw DomainError("norms must be positive");
  DirectBound out;
  out.terms = detail::contracted_terms(ctx, g, l, x_norm, x_norm, max_k + 1, 1);
  for (unsigned k = 0; k < out.terms.size(); ++k) {
    if (out.terms[k] > out.bound) {
      out.bound = out.terms[k];
      out.k_argmax = k;
    }
  }
  if (const auto exponent = detail::growth_exponent(g, l)) {
    out.diverging = g.magnitude() > 0 && contraction_growth(ctx) > 1 && *exponent > 0;
  } else {
    const auto t = detail::trend_of(out.terms);
    const Real band = detail::ratio_band();
    out.diverging = !t.has_zero && t.min_ratio >= 1 - band &&
                    out.terms.back() > out.terms.front() * (1 + band);
  }
  return out;
}

// How the numeric constants in the published closed forms are read.
enum class ConstantReading {
  kPadic,  // |2|, |3| as p-adic norms, as printed
  kReal,   // the 2 and 3 that come from G(x, x) taken as real multipliers
};

/// Published closed-form bound for the control's family, with |u| = x_norm.
inline BoundValue corollary_closed_form(const PadicContext& ctx, const ControlFunction& g,
                                        unsigned l, const Real& x_norm,
                                        ConstantReading reading = ConstantReading::kPadic) {
  if (!(x_norm > 0)) throw DomainError("norms must be positive");
  const Real n2 = reading == ConstantReading::kPadic ? to_real(padic_norm(ctx, 2)) : Real(2);
  const Real n3_lead = reading == ConstantReading::kPadic ? to_real(padic_norm(ctx, 3)) : Real(3);
  const Real n3 = to_real(padic_norm(ctx, 3));
  auto power_case = [&](const Real& mu, const Real& a, const Real& lead) -> BoundValue {
    const Real shift = a + l;
    if (shift == 0) throw ParameterExclusion("exponent equals -l");
    const Real xa = pow(x_norm, a);
    if (shift > 0) return BoundValue::finite(lead * mu * xa / pow(n3, a));
    return BoundValue::finite(lead * mu * pow(n3, Real(l)) * xa);
  };
  return std::visit([&](const auto& c) -> BoundValue {
    using C = std::decay_t<decltype(c)>;
    if constexpr (std::is_same_v<C, ConstantControl>) {
      return BoundValue::finite(c.epsilon);
    } else if constexpr (std::is_same_v<C, SumPowerControl>) {
      return power_case(c.epsilon, c.alpha, n2);
    } else if constexpr (std::is_same_v<C, MixedPowerControl>) {
      return power_case(c.epsilon, c.alpha, n3_lead);
    } else if constexpr (std::is_same_v<C, ProductPowerControl>) {
      return power_case(c.epsilon, c.p_exp + c.q_exp, 1);
    } else {
      return BoundValue::finite(2 * c.delta * c.alpha_fn(x_norm / n3));
    }
  }, g.get());
}

enum class Agreement { kMatch, kMismatch, kNotCompared };

inline const char* to_string(Agreement a) {
  switch (a) {
    case Agreement::kMatch: return "MATCH";
    case Agreement::kMismatch: return "MISMATCH";
    case Agreement::kNotCompared: return "NOT_COMPARED";
  }
  return "?";
}

struct NonArchVerdict {
  std::uint64_t prime = 0;
  unsigned degree = 1;
  Real x_norm;
  C0Status c0_status = C0Status::kUnknown;
  DirectBound direct;
  BoundValue corollary;
  BoundValue corollary_real_constants;
  Agreement agreement = Agreement::kNotCompared;
  std::optional<Real> ratio;  // direct / corollary
};

inline Real default_match_tolerance() { return Real("1e-12"); }

/// Joins the vanishing condition, the direct bound and the closed form.
inline NonArchVerdict compare_bounds(const PadicContext& ctx, const ControlFunction& g, unsigned l,
                                     const Real& x_norm, unsigned max_k = kDefaultProbeDepth) {
  if (max_k < 1) throw DomainError("compare_bounds needs K >= 1");
  NonArchVerdict v;
  v.prime = ctx.prime();
  v.degree = l;
  v.x_norm = x_norm;
  v.corollary = corollary_closed_form(ctx, g, l, x_norm, ConstantReading::kPadic);
  v.corollary_real_constants = corollary_closed_form(ctx, g, l, x_norm, ConstantReading::kReal);
  v.c0_status = c0_condition_check(ctx, g, l, x_norm, x_norm, std::max(max_k, 4u));
  v.direct = direct_bound(ctx, g, l, x_norm, max_k);
  if (!v.direct.diverging && v.corollary.is_finite() && v.corollary.value != 0)
    v.ratio = v.direct.bound / v.corollary.value;
  if (v.c0_status == C0Status::kFails || v.direct.diverging || !v.corollary.is_finite()) {
    v.agreement = Agreement::kNotCompared;
    return v;
  }
  const Real diff = abs(v.direct.bound - v.corollary.value);
  const Real scale = std::max(abs(v.direct.bound), abs(v.corollary.value));
  v.agreement = diff <= default_match_tolerance() * scale ? Agreement::kMatch : Agreement::kMismatch;
  return v;
}

struct SubmultiplicativeVerdict {
  bool property_holds = false;
  bool contraction_holds = false;
  Real contraction_factor;  // |1/3^l| alpha(|3|^{-1})
};

/// Checks alpha(t/|3|) <= alpha(1/|3|) alpha(t) on the grid and
/// |1/3^l| alpha(1/|3|) < 1.
inline SubmultiplicativeVerdict submultiplicative_check(const PadicContext& ctx,
                                                        const AlphaFunction& alpha, unsigned l,
                                                        std::span<const Real> grid) {
  if (grid.empty()) throw DomainError("submultiplicative_check needs a nonempty grid");
  const Real u = contraction_growth(ctx);
  const Real alpha_u = alpha(u);
  const Real band = detail::ratio_band();
  SubmultiplicativeVerdict out;
  out.property_holds = std::all_of(grid.begin(), grid.end(), [&](const Real& t) {
    if (!(t > 0)) throw DomainError("grid values must be positive");
    return alpha(u * t) <= alpha_u * alpha(t) * (1 + band);
  });
  out.contraction_factor = pow(u, Real(l)) * alpha_u;
  out.contraction_holds = out.contraction_factor < 1 - band;
  return out;
}

/// |Lambda(x, y)|_p of the exact residual.
inline Rational nonarch_lambda_norm(const PadicContext& ctx, const EquationVariant& v,
                                    const ReciprocalParams& params, const EvalPoint& pt) {
  return padic_norm(ctx, lambda_residual(v, params, pt));
}

inline Rational nonarch_lambda_norm(const PadicContext& ctx, const ReciprocalParams& params,
                                    const EvalPoint& pt) {
  return nonarch_lambda_norm(ctx, EquationVariant::primary(params.degree()), params, pt);
}

}  // namespace recipstab
