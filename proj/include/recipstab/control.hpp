#pragma once

// Control functions Q(|x|, |y|) bounding the residual, the rescaled series
//   sum_{s>=0} 3^{-ls} Q(|x|/3^{s+1}, |x|/3^{s+1})
// and the closed forms that series sums to for the power families.

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>

#include "recipstab/errors.hpp"
#include "recipstab/exact.hpp"

namespace recipstab {

// A nonnegative function of a nonnegative real, with a printable label. The
// power form c * t^e keeps its parameters so configs can round-trip it.
struct AlphaFunction {
  std::function<Real(const Real&)> fn;
  std::string label;
  std::optional<std::pair<Real, Real>> power;  // (coefficient, exponent)

  static AlphaFunction power_law(Real coeff, Real exponent) {
    AlphaFunction a;
    a.label = format_real(coeff) + "*t^" + format_real(exponent);
    a.power = std::make_pair(coeff, exponent);
    a.fn = [coeff, exponent](const Real& t) -> Real {
      if (t == 0 && exponent < 0) throw DomainError("alpha(0) with negative exponent");
      return coeff * pow(t, exponent);
    };
    return a;
  }

  Real operator()(const Real& t) const {
    Real v = fn(t);
    if (!(v >= 0)) throw DomainError("alpha function returned a negative value");
    return v;
  }
};

struct ConstantControl {
  Real epsilon;
};
struct SumPowerControl {
  Real epsilon;
  Real alpha;
};
struct MixedPowerControl {
  Real epsilon;
  Real alpha;
};
struct ProductPowerControl {
  Real epsilon;
  Real p_exp;
  Real q_exp;
};
struct SubmultiplicativeControl {
  Real delta;
  AlphaFunction alpha_fn;
};

enum class ControlKind { kConstant, kSumPower, kMixedPower, kProductPower, kSubmultiplicative };

inline const char* to_string(ControlKind k) {
  switch (k) {
    case ControlKind::kConstant: return "constant";
    case ControlKind::kSumPower: return "sum_power";
    case ControlKind::kMixedPower: return "mixed_power";
    case ControlKind::kProductPower: return "product_power";
    case ControlKind::kSubmultiplicative: return "submultiplicative";
  }
  return "?";
}

class ControlFunction {
 public:
  using Variant = std::variant<ConstantControl, SumPowerControl, MixedPowerControl,
                               ProductPowerControl, SubmultiplicativeControl>;

  static ControlFunction constant(Real epsilon) {
    check_magnitude(epsilon);
    return ControlFunction(ConstantControl{std::move(epsilon)});
  }
  static ControlFunction sum_power(Real epsilon, Real alpha) {
    check_magnitude(epsilon);
    return ControlFunction(SumPowerControl{std::move(epsilon), std::move(alpha)});
  }
  static ControlFunction mixed_power(Real epsilon, Real alpha) {
    check_magnitude(epsilon);
    return ControlFunction(MixedPowerControl{std::move(epsilon), std::move(alpha)});
  }
  static ControlFunction product_power(Real epsilon, Real p_exp, Real q_exp) {
    check_magnitude(epsilon);
    return ControlFunction(
        ProductPowerControl{std::move(epsilon), std::move(p_exp), std::move(q_exp)});
  }
  static ControlFunction submultiplicative(Real delta, AlphaFunction alpha_fn) {
    check_magnitude(delta);
    if (!alpha_fn.fn) throw DomainError("submultiplicative control needs an alpha function");
    return ControlFunction(SubmultiplicativeControl{std::move(delta), std::move(alpha_fn)});
  }

  const Variant& get() const noexcept { return value_; }
  ControlKind kind() const noexcept { return static_cast<ControlKind>(value_.index()); }

  // Leading magnitude parameter (epsilon, or delta).
  const Real& magnitude() const {
    return std::visit([](const auto& c) -> const Real& {
      if constexpr (std::is_same_v<std::decay_t<decltype(c)>, SubmultiplicativeControl>)
        return c.delta;
      else
        return c.epsilon;
    }, value_);
  }

  // Same shape, new leading magnitude.
  ControlFunction with_magnitude(Real m) const {
    check_magnitude(m);
    ControlFunction out = *this;
    std::visit([&](auto& c) {
      if constexpr (std::is_same_v<std::decay_t<decltype(c)>, SubmultiplicativeControl>)
        c.delta = m;
      else
        c.epsilon = m;
    }, out.value_);
    return out;
  }

 private:
  explicit ControlFunction(Variant v) : value_(std::move(v)) {}
  static void check_magnitude(const Real& m) {
    if (!(m >= 0)) throw DomainError("control magnitude must be nonnegative");
  }
  Variant value_;
};

namespace detail {
inline Real checked_pow(const Real& t, const Real& e) {
  if (t == 0 && e < 0) throw DomainError("zero magnitude raised to a negative exponent");
  return pow(t, e);
}
}  // namespace detail

/// Q(x, y) as a function of |x| and |y|.
inline Real eval_control(const ControlFunction& q, const Real& x_abs, const Real& y_abs) {
  if (x_abs < 0 || y_abs < 0) throw DomainError("control arguments are magnitudes");
  using detail::checked_pow;
  return std::visit([&](const auto& c) -> Real {
    using C = std::decay_t<decltype(c)>;
    if constexpr (std::is_same_v<C, ConstantControl>) {
      return c.epsilon;
    } else if constexpr (std::is_same_v<C, SumPowerControl>) {
      return c.epsilon * (checked_pow(x_abs, c.alpha) + checked_pow(y_abs, c.alpha));
    } else if constexpr (std::is_same_v<C, MixedPowerControl>) {
      const Real half = c.alpha / 2;
      return c.epsilon * (checked_pow(x_abs, half) * checked_pow(y_abs, half) +
                          checked_pow(x_abs, c.alpha) + checked_pow(y_abs, c.alpha));
    } else if constexpr (std::is_same_v<C, ProductPowerControl>) {
      return c.epsilon * checked_pow(x_abs, c.p_exp) * checked_pow(y_abs, c.q_exp);
    } else {
      return c.delta * (c.alpha_fn(x_abs) + c.alpha_fn(y_abs));
    }
  }, q.get());
}

// On the diagonal every power family is weight * epsilon * t^exponent.
struct DiagonalPower {
  Real weight;
  Real exponent;
};

inline std::optional<DiagonalPower> diagonal_power(const ControlFunction& q) {
  return std::visit([](const auto& c) -> std::optional<DiagonalPower> {
    using C = std::decay_t<decltype(c)>;
    if constexpr (std::is_same_v<C, ConstantControl>) return DiagonalPower{1, 0};
    else if constexpr (std::is_same_v<C, SumPowerControl>) return DiagonalPower{2, c.alpha};
    else if constexpr (std::is_same_v<C, MixedPowerControl>) return DiagonalPower{3, c.alpha};
    else if constexpr (std::is_same_v<C, ProductPowerControl>)
      return DiagonalPower{1, c.p_exp + c.q_exp};
    else return std::nullopt;
  }, q.get());
}

struct SeriesEvaluation {
  Real partial_sum = 0;
  unsigned terms_used = 0;
  std::optional<Real> tail_bound;  // nullopt: unbounded
  bool converged = false;

  // partial_sum + tail_bound, or nullopt when unbounded.
  std::optional<Real> upper() const {
    if (!tail_bound) return std::nullopt;
    return partial_sum + *tail_bound;
  }
};

/// Partial sums of sum_s 3^{-ls} Q(|x|/3^{s+1}, |x|/3^{s+1}) with a geometric
/// tail bound. Power families use their exact term ratio 3^{-(l+e)};
/// submultiplicative controls use 3^{-l} alpha(1/3), valid when alpha is
/// submultiplicative.
inline SeriesEvaluation series_bound(const ControlFunction& q, unsigned l, const Real& x_abs,
                                     unsigned max_terms, const Real& tol) {
  if (max_terms < 1) throw DomainError("series_bound needs max_terms >= 1");
  if (!(x_abs > 0)) throw DomainError("series_bound needs |x| > 0");
  if (l < 1) throw DomainError("degree must be >= 1");

  std::optional<Real> ratio;
  if (auto diag = diagonal_power(q)) {
    ratio = pow(Real(3), -(Real(l) + diag->exponent));
  } else {
    const auto& c = std::get<SubmultiplicativeControl>(q.get());
    ratio = pow(Real(3), -Real(l)) * c.alpha_fn(Real(1) / 3);
  }
  const bool geometric = *ratio < 1;

  const Real inv3l = pow(Real(3), -Real(l));
  Real weight = 1;  // 3^{-ls}
  Real point = x_abs / 3;
  auto term = [&]() { return weight * eval_control(q, point, point); };

  SeriesEvaluation out;
  Real current = term();
  for (unsigned s = 0; s < max_terms; ++s) {
    out.partial_sum += current;
    out.terms_used = s + 1;
    weight *= inv3l;
    point /= 3;
    const Real next = term();
    if (geometric) {
      out.tail_bound = next / (1 - *ratio);
      if (*out.tail_bound == 0 || *out.tail_bound <= tol * out.partial_sum) {
        out.converged = true;
        return out;
      }
    }
    current = next;
  }
  if (!geometric) out.tail_bound.reset();
  return out;
}

enum class BoundStatus { kFinite, kNotApplicable, kUnbounded };

struct BoundValue {
  BoundStatus status = BoundStatus::kNotApplicable;
  Real value = 0;

  static BoundValue finite(Real v) { return {BoundStatus::kFinite, std::move(v)}; }
  static BoundValue not_applicable() { return {BoundStatus::kNotApplicable, 0}; }
  static BoundValue unbounded() { return {BoundStatus::kUnbounded, 0}; }
  bool is_finite() const noexcept { return status == BoundStatus::kFinite; }
};

inline const char* to_string(BoundStatus s) {
  switch (s) {
    case BoundStatus::kFinite: return "FINITE";
    case BoundStatus::kNotApplicable: return "NOT_APPLICABLE";
    case BoundStatus::kUnbounded: return "UNBOUNDED";
  }
  return "?";
}

/// Real-field corollary bound on |f(x) - g(x)| for the power families.
/// Exponents below -l make the series diverge and yield UNBOUNDED.
inline BoundValue closed_form_bound(const ControlFunction& q, unsigned l, const Real& x_abs) {
  if (l < 1) throw DomainError("degree must be >= 1");
  const Real three_l = pow(Real(3), Real(l));
  auto power_case = [&](const Real& eps, const Real& e, const Real& lead) -> BoundValue {
    const Real shift = e + l;
    if (shift == 0) throw ParameterExclusion("exponent equals -l");
    if (shift < 0) return BoundValue::unbounded();
    return BoundValue::finite(lead * three_l * eps * detail::checked_pow(x_abs, e) /
                              (pow(Real(3), shift) - 1));
  };
  return std::visit([&](const auto& c) -> BoundValue {
    using C = std::decay_t<decltype(c)>;
    if constexpr (std::is_same_v<C, ConstantControl>) {
      return BoundValue::finite(three_l * c.epsilon / (three_l - 1));
    } else if constexpr (std::is_same_v<C, SumPowerControl>) {
      return power_case(c.epsilon, c.alpha, 2);
    } else if constexpr (std::is_same_v<C, MixedPowerControl>) {
      return power_case(c.epsilon, c.alpha, 3);
    } else if constexpr (std::is_same_v<C, ProductPowerControl>) {
      return power_case(c.epsilon, c.p_exp + c.q_exp, 1);
    } else {
      return BoundValue::not_applicable();
    }
  }, q.get());
}

}  // namespace recipstab
