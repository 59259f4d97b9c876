#pragma once

// Both reciprocal equation families, evaluated exactly through the root
// representation f(x) = (r/x)^l, plus a numeric channel for sampled
// (perturbed) functions that uses positive real l-th roots.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "recipstab/errors.hpp"
#include "recipstab/exact.hpp"

namespace recipstab {

// f(x) = (r/x)^l. Every fractional power f(x)^{j/l} is the exact rational
// (r/x)^j, for either sign of x and either parity of l.
class ReciprocalParams {
 public:
  ReciprocalParams(Rational root_coeff, unsigned degree)
      : root_coeff_(std::move(root_coeff)), degree_(degree) {
    if (root_coeff_ == 0) throw DomainError("root coefficient must be nonzero");
    if (degree_ < 1) throw DomainError("degree must be >= 1");
  }

  const Rational& root_coeff() const noexcept { return root_coeff_; }
  unsigned degree() const noexcept { return degree_; }
  // The constant c in f(x) = c / x^l.
  Rational scale() const { return rational_pow(root_coeff_, degree_); }

 private:
  Rational root_coeff_;
  unsigned degree_;
};

enum class EquationForm {
  kPrimary,      // f(2x+y) + f(2x-y) = ...  (degree l, even-k sum)
  kGeneralized,  // f(2x+y) + f(x+2y) = ...  (degree n, full sum)
};

inline const char* to_string(EquationForm form) {
  return form == EquationForm::kPrimary ? "primary" : "generalized";
}

class EquationVariant {
 public:
  EquationVariant(EquationForm form, unsigned degree) : form_(form), degree_(degree) {
    if (degree_ < 1) throw DomainError("equation degree must be >= 1");
  }
  static EquationVariant primary(unsigned l) { return {EquationForm::kPrimary, l}; }
  static EquationVariant generalized(unsigned n) { return {EquationForm::kGeneralized, n}; }

  EquationForm form() const noexcept { return form_; }
  unsigned degree() const noexcept { return degree_; }

 private:
  EquationForm form_;
  unsigned degree_;
};

struct EvalPoint {
  Rational x;
  Rational y;
};

// Name of the first failed admissibility guard, or nullopt.
inline std::optional<std::string> failed_guard(const EquationVariant& v, const EvalPoint& pt) {
  if (pt.x == 0) return "x != 0";
  if (pt.y == 0) return "y != 0";
  if (v.form() == EquationForm::kPrimary) {
    if (pt.y == 2 * pt.x) return "y != 2x";
    if (pt.y == -2 * pt.x) return "y != -2x";
  } else {
    if (2 * pt.x + pt.y == 0) return "2x+y != 0";
    if (pt.x + 2 * pt.y == 0) return "x+2y != 0";
  }
  return std::nullopt;
}

inline bool is_admissible(const EquationVariant& v, const EvalPoint& pt) {
  return !failed_guard(v, pt).has_value();
}

inline void require_admissible(const EquationVariant& v, const EvalPoint& pt) {
  if (auto guard = failed_guard(v, pt)) throw DegenerateDenominator(*guard);
}

inline Rational eval_f(const ReciprocalParams& params, const Rational& x) {
  if (x == 0) throw DomainError("f is undefined at x = 0");
  return rational_pow(params.root_coeff() / x, params.degree());
}

/// f(x)^{j/l}, computed as (r/x)^j.
inline Rational eval_fractional_power(const ReciprocalParams& params, const Rational& x,
                                      unsigned j) {
  if (x == 0) throw DomainError("f is undefined at x = 0");
  if (j > params.degree()) throw DomainError("fractional power index exceeds degree");
  return rational_pow(params.root_coeff() / x, j);
}

// Numerator coefficients of the right-hand side, keyed by k, the exponent of
// f(x)^{1/l}; the matching f(y)^{1/l} exponent is l-k.
using CoefficientMap = std::map<unsigned, BigInt>;

inline CoefficientMap specialize_coefficients(const EquationVariant& v) {
  const unsigned l = v.degree();
  CoefficientMap out;
  if (v.form() == EquationForm::kPrimary) {
    for (unsigned k = 0; k <= l; k += 2) out[k] = binomial(l, k) << (l - k);
  } else {
    for (unsigned k = 0; k <= l; ++k) {
      const BigInt weight = (BigInt(1) << (l - k)) + (BigInt(1) << k);
      out[k] = weight * binomial(l, k);
    }
  }
  return out;
}

namespace detail {

template <class T>
T ipow(T base, unsigned e) {
  T result = 1;
  while (e) {
    if (e & 1u) result *= base;
    e >>= 1;
    if (e) base *= base;
  }
  return result;
}

template <class T>
T to_scalar(const BigInt& n) {
  if constexpr (std::is_same_v<T, Rational>) {
    return Rational(n);
  } else {
    return T(n);
  }
}

template <class T>
struct RhsValue {
  T numerator;
  T denominator;
};

// Right-hand side of the given form with arbitrary numerator coefficients.
// root_x = f(x)^{1/l}, root_y = f(y)^{1/l}; f_x, f_y are the full values.
template <class T>
RhsValue<T> rhs_parts(EquationForm form, unsigned l, const CoefficientMap& coeffs,
                             const T& root_x, const T& root_y, const T& f_x, const T& f_y) {
  T sum = 0;
  for (const auto& [k, c] : coeffs) {
    sum += to_scalar<T>(c) * ipow(root_x, k) * ipow(root_y, l - k);
  }
  T base;
  T lead;
  if (form == EquationForm::kPrimary) {
    base = 4 * root_y * root_y - root_x * root_x;
    lead = 2;
  } else {
    base = 2 * root_x * root_x + 5 * root_x * root_y + 2 * root_y * root_y;
    lead = 1;
  }
  return {lead * f_x * f_y * sum, ipow(base, l)};
}

inline std::pair<Rational, Rational> shifted_arguments(EquationForm form, const EvalPoint& pt) {
  if (form == EquationForm::kPrimary) return {2 * pt.x + pt.y, 2 * pt.x - pt.y};
  return {2 * pt.x + pt.y, pt.x + 2 * pt.y};
}

inline const char* denominator_guard(EquationForm form) {
  return form == EquationForm::kPrimary ? "4f(y)^{2/l} != f(x)^{2/l}"
                                        : "2f(x)^{2/n}+5f(x)^{1/n}f(y)^{1/n}+2f(y)^{2/n} != 0";
}

inline void require_matching_degree(const EquationVariant& v, const ReciprocalParams& p) {
  if (v.degree() != p.degree())
    throw DomainError("equation degree and function degree differ");
}

}  // namespace detail

// LHS - RHS with the numerator coefficients replaced by `coeffs`; used to test
// literature forms against the exact solution.
inline Rational residual_with_coefficients(const EquationVariant& v, const CoefficientMap& coeffs,
                                           const ReciprocalParams& params, const EvalPoint& pt) {
  detail::require_matching_degree(v, params);
  require_admissible(v, pt);
  const unsigned l = v.degree();
  const auto [u, w] = detail::shifted_arguments(v.form(), pt);
  const Rational lhs = eval_f(params, u) + eval_f(params, w);
  const Rational root_x = params.root_coeff() / pt.x;
  const Rational root_y = params.root_coeff() / pt.y;
  const auto rhs = detail::rhs_parts<Rational>(v.form(), l, coeffs, root_x, root_y,
                                               rational_pow(root_x, l), rational_pow(root_y, l));
  if (rhs.denominator == 0) throw DegenerateDenominator(detail::denominator_guard(v.form()));
  return lhs - rhs.numerator / rhs.denominator;
}

/// Lambda(x, y) = LHS - RHS, exactly. Zero for every ReciprocalParams.
inline Rational lambda_residual(const EquationVariant& v, const ReciprocalParams& params,
                                const EvalPoint& pt) {
  return residual_with_coefficients(v, specialize_coefficients(v), params, pt);
}

// Lambda for a sampled positive function `f : Rational -> Real`, using the
// positive real l-th root for fractional powers.
template <class F>
Real lambda_residual_numeric(const EquationVariant& v, F&& f, const EvalPoint& pt) {
  require_admissible(v, pt);
  const unsigned l = v.degree();
  const auto [u, w] = detail::shifted_arguments(v.form(), pt);
  const Rational args[] = {pt.x, pt.y, u, w};
  Real values[4];
  for (int i = 0; i < 4; ++i) {
    values[i] = f(args[i]);
    if (!(values[i] > 0))
      throw RootBranchError("f(" + format_rational(args[i]) + ") is not strictly positive");
  }
  const Real inv_l = Real(1) / l;
  const Real root_x = pow(values[0], inv_l);
  const Real root_y = pow(values[1], inv_l);
  const auto rhs = detail::rhs_parts<Real>(v.form(), l, specialize_coefficients(v), root_x,
                                           root_y, values[0], values[1]);
  if (rhs.denominator == 0) throw DegenerateDenominator(detail::denominator_guard(v.form()));
  return values[2] + values[3] - rhs.numerator / rhs.denominator;
}

/// (f(3x), f(x)/3^l); equal for every exact solution.
inline std::pair<Rational, Rational> scaling_check(const ReciprocalParams& params,
                                                   const Rational& x) {
  if (x == 0) throw DomainError("f is undefined at x = 0");
  return {eval_f(params, 3 * x), eval_f(params, x) / rational_pow(Rational(3), params.degree())};
}

// ---------------------------------------------------------------------------
// Known special cases from the literature, transcribed as published.

struct LiteratureForm {
  std::string name;
  EquationForm form;
  unsigned degree;
  CoefficientMap coefficients;  // keyed like specialize_coefficients
};

inline const std::vector<LiteratureForm>& literature_forms() {
  static const std::vector<LiteratureForm> forms = {
      {"reciprocal-quadratic f(2x+y)+f(2x-y)", EquationForm::kPrimary, 2, {{0, 4}, {2, 1}}},
      {"reciprocal-quartic q(2x+y)+q(2x-y)", EquationForm::kPrimary, 4,
       {{0, 16}, {2, 24}, {4, 1}}},
      // Published with the 128 term on S(x) rather than S(y).
      {"reciprocal-septic S(2x+y)+S(2x-y)", EquationForm::kPrimary, 7,
       {{7, 128}, {2, 672}, {4, 280}, {6, 14}}},
      {"reciprocal-octic O(2x+y)+O(2x-y)", EquationForm::kPrimary, 8,
       {{0, 256}, {2, 1792}, {4, 1120}, {6, 112}, {8, 1}}},
      {"reciprocal-quadratic r(x+2y)+r(2x+y)", EquationForm::kGeneralized, 2,
       {{0, 5}, {1, 8}, {2, 5}}},
      {"reciprocal-cubic c(2x+y)+c(x+2y)", EquationForm::kGeneralized, 3,
       {{0, 9}, {1, 18}, {2, 18}, {3, 9}}},
  };
  return forms;
}

inline const LiteratureForm* find_literature_form(const EquationVariant& v) {
  for (const auto& f : literature_forms())
    if (f.form == v.form() && f.degree == v.degree()) return &f;
  return nullptr;
}

enum class SpecializationVerdict { kMatch, kMatchWithNote, kMismatch, kNoReference };

inline const char* to_string(SpecializationVerdict v) {
  switch (v) {
    case SpecializationVerdict::kMatch: return "MATCH";
    case SpecializationVerdict::kMatchWithNote: return "MATCH-WITH-NOTE";
    case SpecializationVerdict::kMismatch: return "MISMATCH";
    case SpecializationVerdict::kNoReference: return "NO-REFERENCE";
  }
  return "?";
}

struct SpecializationComparison {
  EquationVariant variant;
  CoefficientMap expanded;
  std::optional<LiteratureForm> reference{};
  SpecializationVerdict verdict = SpecializationVerdict::kNoReference;
  std::string note{};
  // Residual of each form for the exact solution (r = 1) at the probe point.
  EvalPoint probe{1, 3};
  Rational expanded_residual = 0;
  std::optional<Rational> reference_residual{};
};

inline SpecializationComparison compare_with_literature(const EquationVariant& v) {
  SpecializationComparison out{.variant = v, .expanded = specialize_coefficients(v)};
  const ReciprocalParams unit(1, v.degree());
  out.expanded_residual = lambda_residual(v, unit, out.probe);
  const LiteratureForm* ref = find_literature_form(v);
  if (!ref) return out;
  out.reference = *ref;
  out.reference_residual = residual_with_coefficients(v, ref->coefficients, unit, out.probe);

  if (ref->coefficients == out.expanded) {
    out.verdict = SpecializationVerdict::kMatch;
    return out;
  }
  std::vector<BigInt> a, b;
  for (const auto& [k, c] : out.expanded) a.push_back(c);
  for (const auto& [k, c] : ref->coefficients) b.push_back(c);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a != b) {
    out.verdict = SpecializationVerdict::kMismatch;
    out.note = "coefficient multisets differ";
    return out;
  }
  out.verdict = SpecializationVerdict::kMatchWithNote;
  std::string note = "same coefficient multiset, different term placement:";
  for (const auto& [k, c] : ref->coefficients) {
    auto it = out.expanded.find(k);
    if (it == out.expanded.end() || it->second != c) {
      note += " published " + c.str() + "*f(x)^{" + std::to_string(k) + "/" +
              std::to_string(v.degree()) + "}f(y)^{" + std::to_string(v.degree() - k) + "/" +
              std::to_string(v.degree()) + "}";
      for (const auto& [ek, ec] : out.expanded)
        if (ec == c && !ref->coefficients.count(ek))
          note += " vs expanded k=" + std::to_string(ek);
      note += ";";
    }
  }
  note += out.reference_residual && *out.reference_residual != 0
              ? " the exact solution satisfies the expanded form only"
              : " the exact solution satisfies both forms at the probe point";
  out.note = note;
  return out;
}

}  // namespace recipstab
