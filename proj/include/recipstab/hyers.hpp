#pragma once

// Direct-method construction g(x) = lim 3^{-lm} f(x/3^m) for perturbed
// reciprocal functions, with Cauchy diagnostics and a check of the resulting
// stability inequality |f(x) - g(x)| <= sum_s 3^{-ls} Q(x/3^{s+1}, x/3^{s+1}).

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "recipstab/control.hpp"
#include "recipstab/equation.hpp"
#include "recipstab/errors.hpp"
#include "recipstab/exact.hpp"

namespace recipstab {

struct ZeroDelta {};

// f(x) = (1 + epsilon |x|^beta) (r/x)^l
struct PowerEnvelope {
  Real epsilon;
  Real beta;
};

// f given directly by its samples.
struct Tabulated {
  std::map<Rational, Real> values;
};

class PerturbedReciprocal {
 public:
  using Delta = std::variant<ZeroDelta, PowerEnvelope, Tabulated>;

  PerturbedReciprocal(ReciprocalParams base, Delta delta)
      : base_(std::move(base)), delta_(std::move(delta)) {
    if (auto* env = std::get_if<PowerEnvelope>(&delta_)) {
      if (!(env->epsilon >= 0)) throw DomainError("envelope epsilon must be >= 0");
      if (!(env->beta > 0)) throw DomainError("envelope beta must be > 0");
    }
    if (auto* tab = std::get_if<Tabulated>(&delta_)) {
      for (const auto& [x, v] : tab->values)
        if (!(v > 0)) throw DomainError("tabulated value at " + format_rational(x) + " is not positive");
    } else if (base_.root_coeff() < 0 && base_.degree() % 2 == 1) {
      throw DomainError("f must be positive on positive x: need r > 0 or even l");
    }
  }

  static PerturbedReciprocal exact(ReciprocalParams base) { return {std::move(base), ZeroDelta{}}; }

  // Tabulates `fn` on every point x / 3^m for x in `points`, m = 0..depth.
  template <class Fn>
  static PerturbedReciprocal tabulate(ReciprocalParams base, Fn&& fn,
                                      std::span<const Rational> points, unsigned depth) {
    Tabulated tab;
    for (const auto& x : points) {
      Rational p = x;
      for (unsigned m = 0; m <= depth; ++m, p /= 3) tab.values.emplace(p, fn(p));
    }
    return {std::move(base), std::move(tab)};
  }

  const ReciprocalParams& base() const noexcept { return base_; }
  const Delta& delta() const noexcept { return delta_; }
  unsigned degree() const noexcept { return base_.degree(); }

  Real operator()(const Rational& x) const { return value(x); }

  Real value(const Rational& x) const {
    if (x == 0) throw DomainError("f is undefined at x = 0");
    return std::visit([&](const auto& d) -> Real {
      using D = std::decay_t<decltype(d)>;
      if constexpr (std::is_same_v<D, ZeroDelta>) {
        return to_real(eval_f(base_, x));
      } else if constexpr (std::is_same_v<D, PowerEnvelope>) {
        const Real ax = to_real(abs(x));
        return (1 + d.epsilon * pow(ax, d.beta)) * to_real(eval_f(base_, x));
      } else {
        auto it = d.values.find(x);
        if (it == d.values.end())
          throw DomainError("no tabulated sample at x = " + format_rational(x));
        return it->second;
      }
    }, delta_);
  }

 private:
  ReciprocalParams base_;
  Delta delta_;
};

/// 3^{-lm} f(x / 3^m).
inline Real direct_method_iterate(const PerturbedReciprocal& f, const Rational& x, unsigned m) {
  if (x <= 0) throw DomainError("direct-method iterates are taken at positive x");
  const Rational point = x / boost::multiprecision::pow(BigInt(3), m);
  return f.value(point) / pow(Real(3), Real(f.degree()) * m);
}

// Rational-channel iterate for an exact solution.
inline Rational direct_method_iterate_exact(const ReciprocalParams& params, const Rational& x,
                                            unsigned m) {
  const BigInt p3 = boost::multiprecision::pow(BigInt(3), m);
  return eval_f(params, x / p3) / rational_pow(Rational(p3), params.degree());
}

struct ApproximationSequence {
  Rational point;
  std::vector<Real> iterates;        // g_m, m = 0, 1, ...
  std::vector<Real> cauchy_defects;  // |g_{m+1} - g_m|
  Real limit_estimate = 0;
  bool converged = false;
  std::optional<unsigned> converged_at;  // index of the second small defect
};

inline Real default_cauchy_tolerance() { return ldexp(Real(1), -60); }

/// Iterates until two successive defects are <= tol relative to the newer
/// iterate, or until max_m.
inline ApproximationSequence build_sequence(const PerturbedReciprocal& f, const Rational& x,
                                            unsigned max_m, const Real& tol) {
  if (max_m < 2) throw DomainError("build_sequence needs max_m >= 2");
  if (!(tol > 0)) throw DomainError("tolerance must be positive");
  ApproximationSequence seq;
  seq.point = x;
  seq.iterates.push_back(direct_method_iterate(f, x, 0));
  for (unsigned m = 1; m <= max_m; ++m) {
    seq.iterates.push_back(direct_method_iterate(f, x, m));
    const Real& g = seq.iterates.back();
    seq.cauchy_defects.push_back(abs(g - seq.iterates[m - 1]));
    const Real scale = g == 0 ? Real(1) : Real(abs(g));
    auto small = [&](const Real& d) { return d <= tol * scale; };
    const auto& d = seq.cauchy_defects;
    if (d.size() >= 2 && small(d[d.size() - 1]) && small(d[d.size() - 2])) {
      seq.converged = true;
      seq.converged_at = static_cast<unsigned>(d.size() - 1);
      break;
    }
  }
  seq.limit_estimate = seq.iterates.back();
  return seq;
}

// ---------------------------------------------------------------------------
// Sampling of residual pairs.

// Ordered pairs (u, v) at each contraction level s = 0..depth, with u and v
// drawn from {x / 3^s : x in grid}. Only pairs whose shifted arguments stay
// positive are kept, since the numeric channel works on positive x.
inline std::vector<EvalPoint> sample_pairs(const EquationVariant& v,
                                           std::span<const Rational> grid, unsigned depth) {
  std::vector<EvalPoint> out;
  for (unsigned s = 0; s <= depth; ++s) {
    const Rational scale = Rational(boost::multiprecision::pow(BigInt(3), s));
    for (const auto& a : grid) {
      for (const auto& b : grid) {
        EvalPoint pt{a / scale, b / scale};
        if (pt.x <= 0 || pt.y <= 0 || !is_admissible(v, pt)) continue;
        if (v.form() == EquationForm::kPrimary && 2 * pt.x - pt.y <= 0) continue;
        out.push_back(std::move(pt));
      }
    }
  }
  return out;
}

struct ObservedResidual {
  Real magnitude;  // |Lambda|, flushed to 0 below rounding noise
  EvalPoint point;
};

namespace detail {
// |Lambda| with values below the rounding noise of the left-hand side
// flushed to zero.
inline Real observed_residual(const EquationVariant& v, const PerturbedReciprocal& f,
                              const EvalPoint& pt) {
  const Real lam = abs(lambda_residual_numeric(v, f, pt));
  const auto args = shifted_arguments(v.form(), pt);
  const Real noise = rounding_slack() * (abs(f.value(args.first)) + abs(f.value(args.second)) +
                                         abs(f.value(pt.x)) + abs(f.value(pt.y)));
  return lam <= noise ? Real(0) : lam;
}
}  // namespace detail

/// Smallest control of the given family (its exponents or alpha function are
/// kept, its magnitude refitted) dominating |Lambda| on every pair.
inline ControlFunction empirical_control(const PerturbedReciprocal& f, const EquationVariant& v,
                                         std::span<const EvalPoint> pairs,
                                         const ControlFunction& family) {
  if (v.degree() != f.degree()) throw DomainError("equation degree and function degree differ");
  const ControlFunction unit = family.with_magnitude(1);
  Real fitted = 0;
  std::size_t used = 0;
  for (const auto& pt : pairs) {
    if (!is_admissible(v, pt)) continue;
    ++used;
    const Real lam = detail::observed_residual(v, f, pt);
    if (lam == 0) continue;
    const Real shape = eval_control(unit, to_real(abs(pt.x)), to_real(abs(pt.y)));
    if (shape == 0)
      throw HypothesisViolation("control family vanishes at a pair with nonzero residual");
    fitted = std::max(fitted, Real(lam / shape));
  }
  if (used == 0) throw DomainError("no admissible pair to fit a control on");
  return family.with_magnitude(fitted);
}

inline constexpr unsigned kDefaultContractionDepth = 24;

inline ControlFunction empirical_control(const PerturbedReciprocal& f, const EquationVariant& v,
                                         std::span<const Rational> grid,
                                         const ControlFunction& family,
                                         unsigned depth = kDefaultContractionDepth) {
  const auto pairs = sample_pairs(v, grid, depth);
  return empirical_control(f, v, std::span<const EvalPoint>(pairs), family);
}

// ---------------------------------------------------------------------------

struct StabilityOptions {
  unsigned max_m = 200;
  Real cauchy_tol = default_cauchy_tolerance();
  unsigned series_terms = 4096;
  Real series_tol = Real("1e-30");
  unsigned contraction_depth = kDefaultContractionDepth;
  Real report_tolerance = Real("1e-12");
};

struct StabilityRecord {
  Rational x;
  Real f_x;
  Real g_x;
  Real deviation;  // |f(x) - g(x)|
  std::optional<Real> bound;  // nullopt when the series diverges
  Real ratio;
  bool converged = false;
  bool violation = false;
  unsigned iterations = 0;
  std::optional<Real> scaling_error;  // |g(x/3) - 3^l g(x)| / |3^l g(x)|
};

struct StabilityReport {
  std::vector<Rational> grid;
  ControlFunction residual_bound_used;
  unsigned degree = 1;
  std::vector<StabilityRecord> records{};
  Real max_ratio = 0;
  unsigned violations = 0;
  unsigned non_converged = 0;
  unsigned unbounded = 0;
  Real scaling_probe_max_error = 0;
  Real report_tolerance{};
  // Sampled hypothesis domain: the pairs the domination check covered.
  std::size_t sampled_pairs = 0;
  unsigned sample_depth = 0;
  Real worst_domination_ratio = 0;  // max |Lambda| / Q over the sample
};

/// Checks that `q` dominates |Lambda| on the sampled pairs, then compares
/// |f(x) - g(x)| with the series bound at every grid point.
inline StabilityReport verify_stability(const PerturbedReciprocal& f, const ControlFunction& q,
                                        std::span<const Rational> grid,
                                        const StabilityOptions& opt = {}) {
  if (grid.empty()) throw DomainError("empty grid");
  for (const auto& x : grid)
    if (x <= 0) throw DomainError("grid points must be positive");
  const unsigned l = f.degree();
  const auto v = EquationVariant::primary(l);

  StabilityReport report{.grid = {grid.begin(), grid.end()}, .residual_bound_used = q, .degree = l};
  report.report_tolerance = opt.report_tolerance;
  report.sample_depth = opt.contraction_depth;

  const auto pairs = sample_pairs(v, grid, opt.contraction_depth);
  report.sampled_pairs = pairs.size();
  std::optional<EvalPoint> worst;
  Real worst_excess = 0;
  for (const auto& pt : pairs) {
    const Real lam = detail::observed_residual(v, f, pt);
    const Real cap = eval_control(q, to_real(pt.x), to_real(pt.y));
    if (lam == 0) continue;
    const Real r = cap == 0 ? Real(std::numeric_limits<double>::infinity()) : Real(lam / cap);
    report.worst_domination_ratio = std::max(report.worst_domination_ratio, r);
    if (lam > cap * (1 + opt.report_tolerance) && (!worst || r > worst_excess)) {
      worst = pt;
      worst_excess = r;
    }
  }
  if (worst) {
    std::ostringstream msg;
    msg << "control does not dominate the residual; worst pair (x, y) = ("
        << format_rational(worst->x) << ", " << format_rational(worst->y)
        << "), |Lambda|/Q = " << format_real(worst_excess);
    throw HypothesisViolation(msg.str());
  }

  const Real three_l = pow(Real(3), Real(l));
  for (const auto& x : grid) {
    StabilityRecord rec;
    rec.x = x;
    const auto seq = build_sequence(f, x, opt.max_m, opt.cauchy_tol);
    rec.f_x = f.value(x);
    rec.g_x = seq.limit_estimate;
    rec.deviation = abs(rec.f_x - rec.g_x);
    rec.converged = seq.converged;
    rec.iterations = static_cast<unsigned>(seq.iterates.size() - 1);
    const auto series = series_bound(q, l, to_real(x), opt.series_terms, opt.series_tol);
    rec.bound = series.upper();
    if (rec.bound) {
      if (*rec.bound > 0) {
        rec.ratio = rec.deviation / *rec.bound;
      } else {
        const Real noise = rounding_slack() * abs(rec.f_x);
        rec.ratio = rec.deviation <= noise ? Real(0) : Real(std::numeric_limits<double>::infinity());
      }
      rec.violation = rec.ratio > 1 + opt.report_tolerance;
    } else {
      rec.ratio = 0;
      ++report.unbounded;
    }
    if (!rec.converged) ++report.non_converged;
    if (rec.converged) {
      try {
        const auto inner = build_sequence(f, x / 3, opt.max_m, opt.cauchy_tol);
        const Real target = three_l * rec.g_x;
        rec.scaling_error = abs(inner.limit_estimate - target) / abs(target);
        report.scaling_probe_max_error =
            std::max(report.scaling_probe_max_error, *rec.scaling_error);
      } catch (const DomainError&) {
        // tabulated data without samples below x/3^{m+1}
      }
    }
    if (rec.violation) ++report.violations;
    report.max_ratio = std::max(report.max_ratio, rec.ratio);
    report.records.push_back(std::move(rec));
  }
  return report;
}

}  // namespace recipstab
