#pragma once

// CSV and JSON renderings of the result types. Reals are written in
// scientific notation with 17 significant digits and rationals as "num/den",
// so identical inputs give byte-identical files.

#include <fstream>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "recipstab/control.hpp"
#include "recipstab/equation.hpp"
#include "recipstab/hyers.hpp"
#include "recipstab/padic.hpp"

namespace recipstab {

using Json = nlohmann::ordered_json;

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
    append(header);
  }

  void row(const std::vector<std::string>& fields) {
    if (fields.size() != columns_) throw Error("csv row has the wrong number of fields");
    append(fields);
    ++rows_;
  }

  std::size_t rows() const noexcept { return rows_; }
  const std::string& str() const noexcept { return text_; }

 private:
  void append(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) text_ += ',';
      const auto& f = fields[i];
      if (f.find_first_of(",\"\n") == std::string::npos) {
        text_ += f;
      } else {
        text_ += '"';
        for (char c : f) {
          if (c == '"') text_ += '"';
          text_ += c;
        }
        text_ += '"';
      }
    }
    text_ += '\n';
  }

  std::size_t columns_;
  std::size_t rows_ = 0;
  std::string text_;
};

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

inline std::string optional_real(const std::optional<Real>& v, const char* none) {
  return v ? format_real(*v) : std::string(none);
}

inline std::string bound_text(const BoundValue& b) {
  return b.is_finite() ? format_real(b.value) : std::string(to_string(b.status));
}

inline Json control_to_json(const ControlFunction& q) {
  Json j;
  j["kind"] = to_string(q.kind());
  std::visit([&](const auto& c) {
    using C = std::decay_t<decltype(c)>;
    if constexpr (std::is_same_v<C, ConstantControl>) {
      j["epsilon"] = format_real(c.epsilon);
    } else if constexpr (std::is_same_v<C, SumPowerControl> || std::is_same_v<C, MixedPowerControl>) {
      j["epsilon"] = format_real(c.epsilon);
      j["alpha"] = format_real(c.alpha);
    } else if constexpr (std::is_same_v<C, ProductPowerControl>) {
      j["epsilon"] = format_real(c.epsilon);
      j["p"] = format_real(c.p_exp);
      j["q"] = format_real(c.q_exp);
    } else {
      j["delta"] = format_real(c.delta);
      j["alpha_fn"] = c.alpha_fn.label;
    }
  }, q.get());
  return j;
}

inline std::string control_label(const ControlFunction& q) {
  std::string out = to_string(q.kind());
  std::visit([&](const auto& c) {
    using C = std::decay_t<decltype(c)>;
    if constexpr (std::is_same_v<C, ConstantControl>) {
      out += "(eps=" + format_real(c.epsilon) + ")";
    } else if constexpr (std::is_same_v<C, SumPowerControl> || std::is_same_v<C, MixedPowerControl>) {
      out += "(eps=" + format_real(c.epsilon) + ";a=" + format_real(c.alpha) + ")";
    } else if constexpr (std::is_same_v<C, ProductPowerControl>) {
      out += "(eps=" + format_real(c.epsilon) + ";p=" + format_real(c.p_exp) +
             ";q=" + format_real(c.q_exp) + ")";
    } else {
      out += "(delta=" + format_real(c.delta) + ";alpha=" + c.alpha_fn.label + ")";
    }
  }, q.get());
  return out;
}

// One row per grid point.
inline CsvWriter stability_csv(const StabilityReport& r) {
  CsvWriter csv({"x", "f_x", "g_x", "abs_f_minus_g", "bound", "ratio", "converged", "iterations",
                 "violation", "scaling_error"});
  for (const auto& rec : r.records) {
    csv.row({format_rational(rec.x), format_real(rec.f_x), format_real(rec.g_x),
             format_real(rec.deviation), optional_real(rec.bound, "UNBOUNDED"),
             format_real(rec.ratio), rec.converged ? "true" : "false",
             std::to_string(rec.iterations), rec.violation ? "true" : "false",
             optional_real(rec.scaling_error, "NA")});
  }
  return csv;
}

inline Json stability_json(const StabilityReport& r) {
  Json j;
  j["degree"] = r.degree;
  j["control"] = control_to_json(r.residual_bound_used);
  Json grid = Json::array();
  for (const auto& x : r.grid) grid.push_back(format_rational(x));
  j["grid"] = grid;
  j["sampled_domain"] = {{"pairs", r.sampled_pairs},
                         {"contraction_depth", r.sample_depth},
                         {"worst_domination_ratio", format_real(r.worst_domination_ratio)}};
  j["max_ratio"] = format_real(r.max_ratio);
  j["violations"] = r.violations;
  j["non_converged"] = r.non_converged;
  j["unbounded"] = r.unbounded;
  j["scaling_probe_max_error"] = format_real(r.scaling_probe_max_error);
  j["report_tolerance"] = format_real(r.report_tolerance);
  Json records = Json::array();
  for (const auto& rec : r.records) {
    records.push_back({{"x", format_rational(rec.x)},
                       {"f_x", format_real(rec.f_x)},
                       {"g_x", format_real(rec.g_x)},
                       {"abs_f_minus_g", format_real(rec.deviation)},
                       {"bound", optional_real(rec.bound, "UNBOUNDED")},
                       {"ratio", format_real(rec.ratio)},
                       {"converged", rec.converged},
                       {"iterations", rec.iterations},
                       {"violation", rec.violation},
                       {"scaling_error", optional_real(rec.scaling_error, "NA")}});
  }
  j["records"] = records;
  return j;
}

inline Json verdict_json(const NonArchVerdict& v, const ControlFunction& g) {
  Json j;
  j["prime"] = v.prime;
  j["degree"] = v.degree;
  j["control"] = control_to_json(g);
  j["x_norm"] = format_real(v.x_norm);
  j["c0_status"] = to_string(v.c0_status);
  j["direct_bound"] = v.direct.diverging ? std::string("DIVERGING") : format_real(v.direct.bound);
  j["direct_probe_max"] = format_real(v.direct.bound);
  j["k_argmax"] = v.direct.diverging ? Json(nullptr) : Json(v.direct.k_argmax);
  j["corollary_bound"] = bound_text(v.corollary);
  j["corollary_bound_real_constants"] = bound_text(v.corollary_real_constants);
  j["agreement"] = to_string(v.agreement);
  j["ratio"] = optional_real(v.ratio, "NA");
  return j;
}

inline Json coefficients_json(const CoefficientMap& m) {
  Json j = Json::object();
  for (const auto& [k, c] : m) j[std::to_string(k)] = c.str();
  return j;
}

}  // namespace recipstab
