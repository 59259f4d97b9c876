#pragma once

// Experiment orchestration behind the recipstab command line: JSON configs
// (unknown fields rejected), seeded sweeps, and deterministic CSV/JSON
// artifacts. Each command returns a RunSummary; the process exit status is
// success iff summary.failed == 0.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "recipstab/control.hpp"
#include "recipstab/equation.hpp"
#include "recipstab/errors.hpp"
#include "recipstab/exact.hpp"
#include "recipstab/hyers.hpp"
#include "recipstab/padic.hpp"
#include "recipstab/report.hpp"

namespace recipstab {

// MT19937-64 with its raw 64-bit output mapped to ranges by rejection, so a
// seed yields the same sweep on every platform (std distributions do not
// guarantee that).
class SweepRng {
 public:
  explicit SweepRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw DomainError("empty integer range");
    const std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(next());  // full 64-bit range
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t draw;
    do draw = next(); while (draw >= limit);
    return static_cast<std::int64_t>(static_cast<std::uint64_t>(lo) + draw % span);
  }

  // Uniform on [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

struct GlobalOptions {
  std::uint64_t seed = 42;
  unsigned precision_bits = kDefaultPrecisionBits;
  std::optional<std::filesystem::path> out_dir;
};

struct RunSummary {
  std::string command;
  double wall_time_ms = 0;
  std::size_t checks = 0;
  std::size_t passed = 0;
  std::size_t failed = 0;
  std::size_t flagged = 0;
  std::vector<std::string> artifacts;
  std::vector<std::string> messages;

  bool success() const noexcept { return failed == 0; }

  void record(bool ok) {
    ++checks;
    ok ? ++passed : ++failed;
  }

  Json to_json() const {
    Json j;
    j["command"] = command;
    j["wall_time_ms"] = wall_time_ms;
    j["checks"] = checks;
    j["passed"] = passed;
    j["failed"] = failed;
    j["flagged"] = flagged;
    j["artifacts"] = artifacts;
    j["messages"] = messages;
    j["success"] = success();
    return j;
  }

  std::string text() const {
    std::ostringstream out;
    out << command << ": checks=" << checks << " passed=" << passed << " failed=" << failed
        << " flagged=" << flagged << " (" << std::fixed << std::setprecision(1) << wall_time_ms
        << " ms)\n";
    for (const auto& m : messages) out << "  " << m << "\n";
    for (const auto& a : artifacts) out << "  wrote " << a << "\n";
    return out.str();
  }
};

// ---------------------------------------------------------------------------
// Config access

inline Json parse_config_text(const std::string& text, const std::string& source = "config") {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::size_t line = 1, column = 1;
    const std::size_t limit = std::min<std::size_t>(e.byte ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < limit; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ConfigError(source + ": malformed JSON at line " + std::to_string(line) + ", column " +
                      std::to_string(column));
  }
}

inline Json load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path.string());
}

// A JSON object whose fields are consumed by name; finish() rejects any field
// that was never read.
class ConfigObject {
 public:
  ConfigObject(const Json& j, std::string path) : json_(j), path_(std::move(path)) {
    if (!json_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const std::string& key) const { return json_.contains(key); }

  std::string field(const std::string& key) const { return path_ + "." + key; }

  const Json* raw(const std::string& key) {
    used_.insert(key);
    auto it = json_.find(key);
    return it == json_.end() ? nullptr : &*it;
  }

  std::uint64_t uint(const std::string& key, std::uint64_t fallback, std::uint64_t min = 0) {
    const Json* v = raw(key);
    if (!v) return fallback;
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0))
      throw ConfigError(field(key) + ": expected a nonnegative integer");
    const auto out = v->get<std::uint64_t>();
    if (out < min) throw ConfigError(field(key) + ": must be >= " + std::to_string(min));
    return out;
  }

  std::string string(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    const Json* v = raw(key);
    if (!v) {
      if (fallback) return *fallback;
      throw ConfigError(field(key) + ": required field missing");
    }
    if (!v->is_string()) throw ConfigError(field(key) + ": expected a string");
    return v->get<std::string>();
  }

  // Accepts a JSON number or a decimal/fraction string.
  Rational rational(const std::string& key, std::optional<Rational> fallback = std::nullopt) {
    const Json* v = raw(key);
    if (!v) {
      if (fallback) return *fallback;
      throw ConfigError(field(key) + ": required field missing");
    }
    return to_rational(*v, field(key));
  }

  Real real(const std::string& key, std::optional<Real> fallback = std::nullopt) {
    const Json* v = raw(key);
    if (!v) {
      if (fallback) return *fallback;
      throw ConfigError(field(key) + ": required field missing");
    }
    return to_real_value(*v, field(key));
  }

  ConfigObject object(const std::string& key) {
    const Json* v = raw(key);
    if (!v) throw ConfigError(field(key) + ": required field missing");
    return ConfigObject(*v, field(key));
  }

  std::optional<ConfigObject> optional_object(const std::string& key) {
    const Json* v = raw(key);
    if (!v) return std::nullopt;
    return ConfigObject(*v, field(key));
  }

  const Json& array(const std::string& key) {
    const Json* v = raw(key);
    if (!v || !v->is_array() || v->empty())
      throw ConfigError(field(key) + ": expected a nonempty array");
    return *v;
  }

  void finish() const {
    for (auto it = json_.begin(); it != json_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(field(it.key()) + ": unknown field");
  }

  static Rational to_rational(const Json& v, const std::string& where) {
    try {
      if (v.is_string()) return parse_rational(v.get<std::string>());
      if (v.is_number()) return parse_rational(v.dump());
    } catch (const DomainError& e) {
      throw ConfigError(where + ": " + e.what());
    } catch (const DivisionByZero& e) {
      throw ConfigError(where + ": " + e.what());
    }
    throw ConfigError(where + ": expected a number or a numeric string");
  }

  static Real to_real_value(const Json& v, const std::string& where) {
    // Decimal text keeps 0.01 as 0.01 rather than its binary double value.
    std::string text;
    if (v.is_string()) text = v.get<std::string>();
    else if (v.is_number()) text = v.dump();
    else throw ConfigError(where + ": expected a number or a numeric string");
    try {
      return Real(text);
    } catch (const std::exception&) {
      throw ConfigError(where + ": not a real number: '" + text + "'");
    }
  }

 private:
  const Json& json_;
  std::string path_;
  std::set<std::string> used_;
};

enum class GridSpacing { kLinear, kGeometric };

struct GridSpec {
  Rational min;
  Rational max;
  unsigned count = 8;
  GridSpacing spacing = GridSpacing::kGeometric;
};

// Linear grids are exact; geometric grid points are rounded to 9 decimals,
// with both endpoints kept exact.
inline std::vector<Rational> make_grid(const GridSpec& g) {
  if (!(g.min > 0)) throw ConfigError("grid.min must be > 0");
  if (g.max < g.min) throw ConfigError("grid.max must be >= grid.min");
  if (g.count < 1) throw ConfigError("grid.count must be >= 1");
  std::vector<Rational> out;
  if (g.count == 1) return {g.min};
  for (unsigned i = 0; i < g.count; ++i) {
    if (i == 0) { out.push_back(g.min); continue; }
    if (i + 1 == g.count) { out.push_back(g.max); continue; }
    if (g.spacing == GridSpacing::kLinear) {
      out.push_back(g.min + (g.max - g.min) * Rational(i) / Rational(g.count - 1));
    } else {
      const Real ratio = pow(to_real(g.max / g.min), Real(1) / Real(g.count - 1));
      const Real value = to_real(g.min) * pow(ratio, Real(i));
      const BigInt scaled = static_cast<BigInt>(round(value * Real("1e9")));
      const Rational p = make_rational(scaled, BigInt(1000000000));
      if (!(p > 0)) throw ConfigError("grid point rounds to zero; raise grid.min");
      out.push_back(p);
    }
  }
  return out;
}

inline GridSpec parse_grid(ConfigObject obj) {
  GridSpec g;
  g.min = obj.rational("min");
  g.max = obj.rational("max");
  g.count = static_cast<unsigned>(obj.uint("count", 8, 1));
  const auto spacing = obj.string("spacing", std::string("geometric"));
  if (spacing == "linear" || spacing == "LINEAR") g.spacing = GridSpacing::kLinear;
  else if (spacing == "geometric" || spacing == "GEOMETRIC") g.spacing = GridSpacing::kGeometric;
  else throw ConfigError(obj.field("spacing") + ": expected linear or geometric");
  obj.finish();
  return g;
}

inline AlphaFunction parse_alpha(ConfigObject obj) {
  const auto kind = obj.string("kind", std::string("power"));
  if (kind != "power") throw ConfigError(obj.field("kind") + ": only 'power' alpha functions are supported");
  const Real coeff = obj.real("coeff", Real(1));
  const Real exponent = obj.real("exponent");
  if (!(coeff > 0)) throw ConfigError(obj.field("coeff") + ": must be > 0");
  obj.finish();
  return AlphaFunction::power_law(coeff, exponent);
}

// {"kind": "...", ...parameters}. With `magnitude_optional` the leading
// magnitude may be omitted (families whose magnitude is refitted).
inline ControlFunction parse_control(ConfigObject& obj, bool magnitude_optional = false) {
  const auto kind = obj.string("kind");
  const std::optional<Real> unit = magnitude_optional ? std::optional<Real>(Real(1)) : std::nullopt;
  try {
    if (kind == "constant") return ControlFunction::constant(obj.real("epsilon", unit));
    if (kind == "sum_power")
      return ControlFunction::sum_power(obj.real("epsilon", unit), obj.real("alpha"));
    if (kind == "mixed_power")
      return ControlFunction::mixed_power(obj.real("epsilon", unit), obj.real("alpha"));
    if (kind == "product_power")
      return ControlFunction::product_power(obj.real("epsilon", unit), obj.real("p"), obj.real("q"));
    if (kind == "submultiplicative")
      return ControlFunction::submultiplicative(obj.real("delta", unit),
                                                parse_alpha(obj.object("alpha_fn")));
  } catch (const DomainError& e) {
    throw ConfigError(obj.field("kind") + ": " + e.what());
  }
  throw ConfigError(obj.field("kind") + ": unknown control kind '" + kind + "'");
}

// ---------------------------------------------------------------------------

namespace detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline void emit(RunSummary& s, const GlobalOptions& g, const std::string& name,
                 const std::string& text) {
  if (!g.out_dir) return;
  const auto path = *g.out_dir / name;
  write_text_file(path, text);
  s.artifacts.push_back(path.string());
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

inline Json run_header(const std::string& command, const GlobalOptions& g) {
  Json j;
  j["command"] = command;
  j["seed"] = g.seed;
  j["precision_bits"] = g.precision_bits;
  return j;
}

}  // namespace detail

/// 2 * sum_{k even} 2^{l-k} C(l,k) == 3^l + 1 for l = 0..l_max.
inline RunSummary cmd_verify_identity(unsigned l_max, const GlobalOptions& g) {
  if (l_max < 1) throw ConfigError("--l-max must be >= 1");
  detail::Stopwatch clock;
  RunSummary s;
  s.command = "verify-identity";
  CsvWriter csv({"l", "even_binomial_sum", "three_pow_l_plus_one", "status"});
  Json rows = Json::array();
  for (unsigned l = 0; l <= l_max; ++l) {
    const BigInt sum = even_binomial_sum(l);
    const BigInt closed = boost::multiprecision::pow(BigInt(3), l) + 1;
    const bool ok = 2 * sum == closed;
    s.record(ok);
    csv.row({std::to_string(l), sum.str(), closed.str(), ok ? "PASS" : "FAIL"});
    rows.push_back({{"l", l}, {"sum", sum.str()}, {"three_pow_l_plus_one", closed.str()}, {"ok", ok}});
  }
  Json j = detail::run_header(s.command, g);
  j["l_max"] = l_max;
  j["passed"] = s.passed;
  j["failed"] = s.failed;
  j["rows"] = rows;
  detail::emit(s, g, "verify-identity.csv", csv.str());
  detail::emit(s, g, "verify-identity.json", detail::dump(j));
  s.wall_time_ms = clock.ms();
  return s;
}

struct SolutionSweepConfig {
  unsigned instances_primary = 500;
  unsigned instances_generalized = 500;
  unsigned max_degree_primary = 8;
  unsigned max_degree_generalized = 6;
  std::int64_t numerator_max = 20;
  std::int64_t denominator_max = 12;
  double degenerate_fraction = 0;
};

inline SolutionSweepConfig parse_solution_config(const Json& j) {
  ConfigObject obj(j, "$");
  SolutionSweepConfig c;
  c.instances_primary = static_cast<unsigned>(obj.uint("instances_primary", c.instances_primary));
  c.instances_generalized =
      static_cast<unsigned>(obj.uint("instances_generalized", c.instances_generalized));
  c.max_degree_primary = static_cast<unsigned>(obj.uint("max_degree_primary", c.max_degree_primary, 1));
  c.max_degree_generalized =
      static_cast<unsigned>(obj.uint("max_degree_generalized", c.max_degree_generalized, 1));
  c.numerator_max = static_cast<std::int64_t>(obj.uint("numerator_max", 20, 1));
  c.denominator_max = static_cast<std::int64_t>(obj.uint("denominator_max", 12, 1));
  if (const Json* f = obj.raw("degenerate_fraction")) {
    if (!f->is_number()) throw ConfigError("$.degenerate_fraction: expected a number");
    c.degenerate_fraction = f->get<double>();
    if (c.degenerate_fraction < 0 || c.degenerate_fraction > 1)
      throw ConfigError("$.degenerate_fraction: must lie in [0, 1]");
  }
  obj.finish();
  return c;
}

/// Randomized exact nullity and scaling checks for both equation families.
inline RunSummary cmd_check_solution(const Json& config, const GlobalOptions& g) {
  const auto cfg = parse_solution_config(config);
  detail::Stopwatch clock;
  RunSummary s;
  s.command = "check-solution";
  SweepRng rng(g.seed);
  CsvWriter csv({"index", "variant", "degree", "r", "x", "y", "residual", "f_3x",
                 "f_x_over_3_pow_l", "status", "inadmissible_skipped_so_far"});
  std::size_t inadmissible = 0, index = 0;
  auto draw = [&]() {
    std::int64_t n = 0;
    while (n == 0) n = rng.uniform_int(-cfg.numerator_max, cfg.numerator_max);
    return make_rational(n, rng.uniform_int(1, cfg.denominator_max));
  };
  Json guards = Json::object();
  auto sweep = [&](EquationForm form, unsigned count, unsigned max_degree) {
    for (unsigned i = 0; i < count; ++i, ++index) {
      const unsigned degree = static_cast<unsigned>(rng.uniform_int(1, max_degree));
      const EquationVariant v(form, degree);
      const ReciprocalParams params(draw(), degree);
      EvalPoint pt{draw(), draw()};
      if (rng.unit() < cfg.degenerate_fraction)
        pt.y = form == EquationForm::kPrimary ? 2 * pt.x : -pt.x / 2;
      if (auto guard = failed_guard(v, pt)) {
        ++inadmissible;
        ++s.flagged;
        guards[*guard] = guards.value(*guard, 0) + 1;
        continue;
      }
      const Rational residual = lambda_residual(v, params, pt);
      const auto [lhs, rhs] = scaling_check(params, pt.x);
      const bool ok = residual == 0 && lhs == rhs;
      s.record(residual == 0);
      s.record(lhs == rhs);
      csv.row({std::to_string(index), to_string(form), std::to_string(degree),
               format_rational(params.root_coeff()), format_rational(pt.x), format_rational(pt.y),
               format_rational(residual), format_rational(lhs), format_rational(rhs),
               ok ? "PASS" : "FAIL", std::to_string(inadmissible)});
    }
  };
  sweep(EquationForm::kPrimary, cfg.instances_primary, cfg.max_degree_primary);
  sweep(EquationForm::kGeneralized, cfg.instances_generalized, cfg.max_degree_generalized);
  if (inadmissible) s.messages.push_back("flagged inadmissible points: " + std::to_string(inadmissible));

  Json j = detail::run_header(s.command, g);
  j["instances"] = cfg.instances_primary + cfg.instances_generalized;
  j["checked_instances"] = csv.rows();
  j["inadmissible"] = inadmissible;
  j["inadmissible_by_guard"] = guards;
  j["checks"] = s.checks;
  j["passed"] = s.passed;
  j["failed"] = s.failed;
  detail::emit(s, g, "check-solution.csv", csv.str());
  detail::emit(s, g, "check-solution.json", detail::dump(j));
  s.wall_time_ms = clock.ms();
  return s;
}

/// Expanded numerator coefficients and the comparison with the published form.
inline RunSummary cmd_specialize(EquationForm form, unsigned degree, const GlobalOptions& g) {
  if (degree < 1) throw ConfigError("--degree must be >= 1");
  detail::Stopwatch clock;
  RunSummary s;
  s.command = "specialize";
  const auto cmp = compare_with_literature(EquationVariant(form, degree));
  s.record(cmp.expanded_residual == 0);
  if (cmp.verdict == SpecializationVerdict::kMatchWithNote ||
      cmp.verdict == SpecializationVerdict::kMismatch)
    ++s.flagged;

  std::string coeffs;
  for (const auto& [k, c] : cmp.expanded)
    coeffs += (coeffs.empty() ? "" : ", ") + std::to_string(k) + ":" + c.str();
  s.messages.push_back("coefficients {" + coeffs + "}");
  s.messages.push_back(std::string("verdict ") + to_string(cmp.verdict) +
                       (cmp.reference ? " vs " + cmp.reference->name : std::string()));
  if (!cmp.note.empty()) s.messages.push_back("note: " + cmp.note);

  CsvWriter csv({"k", "x_exponent", "y_exponent", "coefficient", "published_coefficient"});
  std::set<unsigned> keys;
  for (const auto& [k, c] : cmp.expanded) keys.insert(k);
  if (cmp.reference)
    for (const auto& [k, c] : cmp.reference->coefficients) keys.insert(k);
  for (unsigned k : keys) {
    auto e = cmp.expanded.find(k);
    std::string pub = "NA";
    if (cmp.reference) {
      auto it = cmp.reference->coefficients.find(k);
      pub = it == cmp.reference->coefficients.end() ? "0" : it->second.str();
    }
    csv.row({std::to_string(k), std::to_string(k) + "/" + std::to_string(degree),
             std::to_string(degree - k) + "/" + std::to_string(degree),
             e == cmp.expanded.end() ? "0" : e->second.str(), pub});
  }

  Json j = detail::run_header(s.command, g);
  j["variant"] = to_string(form);
  j["degree"] = degree;
  j["coefficients"] = coefficients_json(cmp.expanded);
  j["verdict"] = to_string(cmp.verdict);
  if (cmp.reference) {
    j["reference"] = {{"name", cmp.reference->name},
                      {"coefficients", coefficients_json(cmp.reference->coefficients)}};
  } else {
    j["reference"] = nullptr;
  }
  j["note"] = cmp.note;
  j["probe_point"] = {format_rational(cmp.probe.x), format_rational(cmp.probe.y)};
  j["expanded_residual"] = format_rational(cmp.expanded_residual);
  j["reference_residual"] =
      cmp.reference_residual ? Json(format_rational(*cmp.reference_residual)) : Json(nullptr);
  detail::emit(s, g, "specialize.csv", csv.str());
  detail::emit(s, g, "specialize.json", detail::dump(j));
  s.wall_time_ms = clock.ms();
  return s;
}

struct StabilityRunConfig {
  unsigned degree = 1;
  Rational root_coeff = 1;
  enum class Perturbation { kZero, kPowerEnvelope, kConstantShift } perturbation =
      Perturbation::kPowerEnvelope;
  Real epsilon = Real("0.01");
  Real beta = 1;
  Rational shift = 0;
  GridSpec grid{Rational(1, 10), Rational(10), 8, GridSpacing::kGeometric};
  bool empirical = true;
  std::optional<ControlFunction> control;  // declared control or fitted family
  StabilityOptions options;
};

inline StabilityRunConfig parse_stability_config(const Json& j) {
  ConfigObject obj(j, "$");
  StabilityRunConfig c;
  c.degree = static_cast<unsigned>(obj.uint("degree", 1, 1));
  c.root_coeff = obj.rational("root_coeff", Rational(1));
  if (c.root_coeff == 0) throw ConfigError("$.root_coeff: must be nonzero");
  if (auto p = obj.optional_object("perturbation")) {
    const auto kind = p->string("kind");
    if (kind == "zero") {
      c.perturbation = StabilityRunConfig::Perturbation::kZero;
    } else if (kind == "power_envelope") {
      c.perturbation = StabilityRunConfig::Perturbation::kPowerEnvelope;
      c.epsilon = p->real("epsilon");
      c.beta = p->real("beta");
    } else if (kind == "constant_shift") {
      c.perturbation = StabilityRunConfig::Perturbation::kConstantShift;
      c.shift = p->rational("c0");
    } else {
      throw ConfigError(p->field("kind") + ": expected zero, power_envelope or constant_shift");
    }
    p->finish();
  }
  if (auto gobj = obj.optional_object("grid")) c.grid = parse_grid(*gobj);
  if (auto q = obj.optional_object("control")) {
    const auto mode = q->string("mode", std::string("empirical"));
    if (mode == "empirical") {
      c.empirical = true;
      if (q->has("family")) {
        auto fam = q->object("family");
        c.control = parse_control(fam, true);
        fam.finish();
      }
    } else if (mode == "declared") {
      c.empirical = false;
      auto decl = q->object("function");
      c.control = parse_control(decl);
      decl.finish();
    } else {
      throw ConfigError(q->field("mode") + ": expected empirical or declared");
    }
    q->finish();
  }
  auto& o = c.options;
  o.max_m = static_cast<unsigned>(obj.uint("max_m", o.max_m, 2));
  o.cauchy_tol = obj.real("cauchy_tol", o.cauchy_tol);
  o.series_terms = static_cast<unsigned>(obj.uint("series_terms", o.series_terms, 1));
  o.series_tol = obj.real("series_tol", o.series_tol);
  o.contraction_depth = static_cast<unsigned>(obj.uint("contraction_depth", o.contraction_depth));
  o.report_tolerance = obj.real("report_tolerance", o.report_tolerance);
  if (!(o.cauchy_tol > 0) || !(o.series_tol > 0) || !(o.report_tolerance > 0))
    throw ConfigError("$: tolerances must be > 0");
  obj.finish();
  return c;
}

inline PerturbedReciprocal build_perturbed(const StabilityRunConfig& c,
                                           const std::vector<Rational>& grid) {
  const ReciprocalParams base(c.root_coeff, c.degree);
  switch (c.perturbation) {
    case StabilityRunConfig::Perturbation::kZero:
      return PerturbedReciprocal::exact(base);
    case StabilityRunConfig::Perturbation::kPowerEnvelope:
      return PerturbedReciprocal(base, PowerEnvelope{c.epsilon, c.beta});
    case StabilityRunConfig::Perturbation::kConstantShift:
      break;
  }
  // Every value the run can touch: grid chains down to x / 3^{max_m + 1}
  // (scaling probe included) and all arguments of the sampled pairs.
  const auto value = [&](const Rational& x) { return to_real(eval_f(base, x) + c.shift); };
  Tabulated tab;
  for (const auto& x : grid) {
    Rational p = x;
    for (unsigned m = 0; m <= c.options.max_m + 1; ++m, p /= 3) tab.values.emplace(p, value(p));
  }
  const auto v = EquationVariant::primary(c.degree);
  for (const auto& pt : sample_pairs(v, std::span<const Rational>(grid), c.options.contraction_depth)) {
    const auto [s1, s2] = detail::shifted_arguments(v.form(), pt);
    for (const Rational* p : {&pt.x, &pt.y, &s1, &s2}) tab.values.emplace(*p, value(*p));
  }
  return PerturbedReciprocal(base, std::move(tab));
}

/// Fits or checks a control, then verifies the stability bound on the grid.
inline RunSummary cmd_stability_run(const Json& config, const GlobalOptions& g) {
  auto cfg = parse_stability_config(config);
  detail::Stopwatch clock;
  RunSummary s;
  s.command = "stability-run";
  Json j = detail::run_header(s.command, g);
  try {
    const auto grid = make_grid(cfg.grid);
    const auto f = build_perturbed(cfg, grid);
    ControlFunction q = cfg.control.value_or(ControlFunction::constant(1));
    if (cfg.empirical)
      q = empirical_control(f, EquationVariant::primary(cfg.degree),
                            std::span<const Rational>(grid), q, cfg.options.contraction_depth);
    j["control_mode"] = cfg.empirical ? "empirical" : "declared";
    const auto report = verify_stability(f, q, std::span<const Rational>(grid), cfg.options);
    for (const auto& rec : report.records) s.record(!rec.violation);
    s.flagged += report.non_converged + report.unbounded;
    s.messages.push_back("violations=" + std::to_string(report.violations) +
                         " max_ratio=" + format_real(report.max_ratio) +
                         " scaling_probe_max_error=" + format_real(report.scaling_probe_max_error));
    j["report"] = stability_json(report);
    detail::emit(s, g, "stability.csv", stability_csv(report).str());
  } catch (const HypothesisViolation& e) {
    s.record(false);
    s.messages.push_back(std::string("HypothesisViolation: ") + e.what());
    j["hypothesis_violation"] = e.what();
  }
  detail::emit(s, g, "stability.json", detail::dump(j));
  s.wall_time_ms = clock.ms();
  return s;
}

struct PadicRunConfig {
  std::vector<std::uint64_t> primes;
  std::vector<unsigned> degrees;
  std::vector<Real> x_norms;
  std::vector<ControlFunction> controls;
  std::vector<Real> submultiplicative_grid;
  unsigned max_k = kDefaultProbeDepth;
  unsigned probe_m = kDefaultProbeDepth;
};

inline PadicRunConfig parse_padic_config(const Json& j) {
  ConfigObject obj(j, "$");
  PadicRunConfig c;
  for (const auto& p : obj.array("primes")) {
    if (!p.is_number_unsigned()) throw ConfigError("$.primes: expected positive integers");
    const auto prime = p.get<std::uint64_t>();
    if (!is_prime(prime)) throw ConfigError("$.primes: " + std::to_string(prime) + " is not prime");
    c.primes.push_back(prime);
  }
  if (obj.has("degrees")) {
    for (const auto& d : obj.array("degrees")) {
      if (!d.is_number_unsigned() || d.get<std::uint64_t>() < 1)
        throw ConfigError("$.degrees: expected integers >= 1");
      c.degrees.push_back(d.get<unsigned>());
    }
  } else {
    c.degrees = {1};
  }
  if (obj.has("x_norms")) {
    for (const auto& x : obj.array("x_norms")) {
      Real v = ConfigObject::to_real_value(x, "$.x_norms");
      if (!(v > 0)) throw ConfigError("$.x_norms: norms must be > 0");
      c.x_norms.push_back(v);
    }
  } else {
    c.x_norms = {Real(1)};
  }
  std::size_t i = 0;
  for (const auto& q : obj.array("controls")) {
    ConfigObject cobj(q, "$.controls[" + std::to_string(i++) + "]");
    c.controls.push_back(parse_control(cobj));
    cobj.finish();
  }
  if (obj.has("submultiplicative_grid")) {
    for (const auto& t : obj.array("submultiplicative_grid")) {
      Real v = ConfigObject::to_real_value(t, "$.submultiplicative_grid");
      if (!(v > 0)) throw ConfigError("$.submultiplicative_grid: values must be > 0");
      c.submultiplicative_grid.push_back(v);
    }
  } else {
    for (const char* t : {"0.1", "0.5", "1", "2", "3", "10"}) c.submultiplicative_grid.emplace_back(t);
  }
  c.max_k = static_cast<unsigned>(obj.uint("max_k", c.max_k, 1));
  c.probe_m = static_cast<unsigned>(obj.uint("probe_m", c.probe_m, 4));
  obj.finish();
  return c;
}

/// One verdict per (prime, degree, control, |x|). Closed-form mismatches
/// and failed vanishing conditions are flagged; only internal consistency
/// checks can fail the run.
inline RunSummary cmd_padic_run(const Json& config, const GlobalOptions& g) {
  const auto cfg = parse_padic_config(config);
  detail::Stopwatch clock;
  RunSummary s;
  s.command = "padic-run";
  CsvWriter csv({"p", "l", "control", "x_norm", "c0_status", "direct_bound", "k_argmax",
                 "corollary_bound", "corollary_bound_real_constants", "agreement", "ratio",
                 "submult_property", "submult_contraction", "status"});
  Json rows = Json::array();
  for (const auto p : cfg.primes) {
    const PadicContext ctx(p);
    for (const unsigned l : cfg.degrees) {
      // |3|_p <= 1 and |1/3^l|_p >= 1 in every p-adic field
      s.record(padic_norm(ctx, 3) <= 1 && padic_norm(ctx, 1 / rational_pow(Rational(3), l)) >= 1);
      for (const auto& q : cfg.controls) {
        for (const auto& xn : cfg.x_norms) {
          std::string submult_property = "NA", submult_contraction = "NA";
          Json row;
          if (const auto* sub = std::get_if<SubmultiplicativeControl>(&q.get())) {
            const auto sv = submultiplicative_check(ctx, sub->alpha_fn, l,
                                                    std::span<const Real>(cfg.submultiplicative_grid));
            submult_property = sv.property_holds ? "true" : "false";
            submult_contraction = sv.contraction_holds ? "true" : "false";
          }
          try {
            const auto v = compare_bounds(ctx, q, l, xn, cfg.max_k);
            // consistency: the direct bound never shrinks as K grows
            if (cfg.max_k > 1) {
              const auto shorter = direct_bound(ctx, q, l, xn, cfg.max_k - 1);
              s.record(v.direct.bound >= shorter.bound);
            }
            // consistency: analytic and probed vanishing decisions agree
            if (diagonal_power(q))
              s.record(c0_condition_check(ctx, q, l, xn, xn, cfg.probe_m) ==
                       c0_probe(ctx, q, l, xn, xn, cfg.probe_m));
            std::string status = "OK";
            if (v.agreement == Agreement::kMismatch) status = "FLAG_MISMATCH";
            else if (v.c0_status != C0Status::kHolds) status = "FLAG_C0_" + std::string(to_string(v.c0_status));
            else if (v.direct.diverging) status = "FLAG_DIVERGING";
            if (status != "OK") ++s.flagged;
            csv.row({std::to_string(p), std::to_string(l), control_label(q), format_real(xn),
                     to_string(v.c0_status),
                     v.direct.diverging ? "DIVERGING" : format_real(v.direct.bound),
                     v.direct.diverging ? "NONE" : std::to_string(v.direct.k_argmax),
                     bound_text(v.corollary), bound_text(v.corollary_real_constants),
                     to_string(v.agreement), optional_real(v.ratio, "NA"), submult_property,
                     submult_contraction, status});
            row = verdict_json(v, q);
            row["status"] = status;
          } catch (const ParameterExclusion& e) {
            ++s.flagged;
            csv.row({std::to_string(p), std::to_string(l), control_label(q), format_real(xn), "NA",
                     "NA", "NA", "NA", "NA", "NOT_COMPARED", "NA", submult_property,
                     submult_contraction, "FLAG_PARAMETER_EXCLUSION"});
            row = {{"prime", p}, {"degree", l}, {"control", control_to_json(q)},
                   {"x_norm", format_real(xn)}, {"status", "FLAG_PARAMETER_EXCLUSION"},
                   {"error", e.what()}};
          }
          if (submult_property != "NA") {
            row["submultiplicative"] = {{"property_holds", submult_property == "true"},
                                        {"contraction_holds", submult_contraction == "true"}};
          }
          rows.push_back(row);
        }
      }
    }
  }
  Json j = detail::run_header(s.command, g);
  j["max_k"] = cfg.max_k;
  j["probe_m"] = cfg.probe_m;
  j["verdicts"] = rows;
  j["checks"] = s.checks;
  j["failed"] = s.failed;
  j["flagged"] = s.flagged;
  detail::emit(s, g, "padic.csv", csv.str());
  detail::emit(s, g, "padic.json", detail::dump(j));
  s.wall_time_ms = clock.ms();
  return s;
}

}  // namespace recipstab
