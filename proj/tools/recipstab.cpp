// recipstab: command-line harness for the reciprocal equation experiments.
//
// Exit status: 0 when no check failed, 1 when a check failed or the run hit an
// arithmetic error, 2 for usage and configuration errors.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "recipstab/harness.hpp"

namespace {

constexpr int kExitFailed = 1;
constexpr int kExitUsage = 2;

}  // namespace

int main(int argc, char** argv) {
  using namespace recipstab;

  CLI::App app{"Exact and high-precision experiments for reciprocal functional equations"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions global;
  bool json_output = false;
  std::string out_dir;
  app.add_option("--seed", global.seed, "Seed for randomized sweeps")->capture_default_str();
  app.add_option("--precision-bits", global.precision_bits, "Working precision of real arithmetic")
      ->check(CLI::Range(64u, 1u << 20))
      ->capture_default_str();
  app.add_flag("--json", json_output, "Print the run summary as JSON");

  unsigned l_max = 0;
  auto* identity = app.add_subcommand("verify-identity", "Check 2*sum C(l,k)2^{l-k} (k even) = 3^l + 1");
  identity->add_option("--l-max", l_max, "Largest degree to check")->required();
  identity->add_option("--out", out_dir, "Directory for CSV/JSON artifacts");

  std::string config_path;
  auto* solution = app.add_subcommand("check-solution", "Randomized exact nullity sweep");
  solution->add_option("--config", config_path, "JSON config")->required()->check(CLI::ExistingFile);
  solution->add_option("--out", out_dir, "Directory for CSV/JSON artifacts");

  std::string variant;
  unsigned degree = 0;
  auto* special = app.add_subcommand("specialize", "Expanded coefficients for one degree");
  special->add_option("--variant", variant, "Equation family")
      ->required()
      ->check(CLI::IsMember({"primary", "generalized"}));
  special->add_option("--degree", degree, "Degree l or n")->required();
  special->add_option("--out", out_dir, "Directory for CSV/JSON artifacts");

  auto* stability = app.add_subcommand("stability-run", "Direct-method stability run");
  stability->add_option("--config", config_path, "JSON config")->required()->check(CLI::ExistingFile);
  stability->add_option("--out", out_dir, "Directory for CSV/JSON artifacts")->required();

  auto* padic = app.add_subcommand("padic-run", "Non-Archimedean bound comparison");
  padic->add_option("--config", config_path, "JSON config")->required()->check(CLI::ExistingFile);
  padic->add_option("--out", out_dir, "Directory for CSV/JSON artifacts")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  if (!out_dir.empty()) global.out_dir = out_dir;

  try {
    set_precision_bits(global.precision_bits);
    RunSummary summary;
    if (identity->parsed()) {
      summary = cmd_verify_identity(l_max, global);
    } else if (solution->parsed()) {
      summary = cmd_check_solution(load_config(config_path), global);
    } else if (special->parsed()) {
      summary = cmd_specialize(variant == "primary" ? EquationForm::kPrimary
                                                    : EquationForm::kGeneralized,
                               degree, global);
    } else if (stability->parsed()) {
      summary = cmd_stability_run(load_config(config_path), global);
    } else {
      summary = cmd_padic_run(load_config(config_path), global);
    }
    if (json_output) std::cout << summary.to_json().dump(2) << "\n";
    else std::cout << summary.text();
    return summary.success() ? 0 : kExitFailed;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailed;
  }
}
