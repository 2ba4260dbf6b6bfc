#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "bssim/experiment.hpp"

namespace fs = std::filesystem;

namespace {

std::string default_out_dir(const bssim::ExperimentConfig& cfg) {
  const char* root = std::getenv("BSSIM_OUT_ROOT");
  fs::path base = root ? fs::path(root) : fs::path("out");
  return (base / (bssim::to_string(cfg.scenario) + "_" + bssim::config_hash(cfg))).string();
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

int run_one(const bssim::ExperimentConfig& cfg, const std::string& out_dir) {
  std::cout << "scenario " << bssim::to_string(cfg.scenario) << " -> " << out_dir << "\n";
  bssim::RunResult result = bssim::run_experiment(cfg, out_dir);
  if (result.exit_code == 0) {
    std::cout << "ok (" << result.artifacts.size() << " artifacts)\n";
  } else {
    std::cerr << "error: " << result.message << "\n";
  }
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blind-source-separation imaging simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir, profile, seed_text, param, values_text;

  CLI::App* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("config", config_path, "JSON config (or manifest) path")->required();
  run->add_option("--out", out_dir, "Output directory (default $BSSIM_OUT_ROOT/<run id>)");
  run->add_option("--seed", seed_text, "Override the base seed");
  run->add_option("--profile", profile, "Override the parameter profile (desk|paper)");

  CLI::App* validate = app.add_subcommand("validate", "Check a config without running");
  validate->add_option("config", config_path, "JSON config path")->required();
  validate->add_option("--profile", profile, "Override the parameter profile");

  CLI::App* sweep = app.add_subcommand("sweep", "Run a config across parameter values");
  sweep->add_option("config", config_path, "JSON config path")->required();
  sweep->add_option("--param", param, "Dotted parameter path, e.g. imaging.eta_f")
      ->required();
  sweep->add_option("--values", values_text, "Comma-separated values")->required();
  sweep->add_option("--out", out_dir, "Output root for the sweep");
  sweep->add_option("--profile", profile, "Override the parameter profile");

  CLI11_PARSE(app, argc, argv);

  std::vector<std::pair<std::string, std::string>> overrides;
  if (!profile.empty()) overrides.emplace_back("profile", profile);
  if (!seed_text.empty()) overrides.emplace_back("seed", seed_text);

  try {
    if (run->parsed()) {
      bssim::ExperimentConfig cfg = bssim::load_config_with_overrides(config_path, overrides);
      return run_one(cfg, out_dir.empty() ? default_out_dir(cfg) : out_dir);
    }
    if (validate->parsed()) {
      bssim::ExperimentConfig cfg = bssim::load_config_with_overrides(config_path, overrides);
      auto issues = bssim::validate_config(cfg);
      bool any_fatal = false;
      for (const auto& issue : issues) {
        std::cout << (issue.fatal ? "[fail] " : "[info] ") << issue.check << ": "
                  << issue.detail << "\n";
        any_fatal |= issue.fatal;
      }
      std::cout << (any_fatal ? "config has violations\n" : "config ok\n");
      return 0;
    }
    if (sweep->parsed()) {
      int worst = 0;
      for (const std::string& value : split_list(values_text)) {
        auto with_value = overrides;
        with_value.emplace_back(param, value);
        bssim::ExperimentConfig cfg =
            bssim::load_config_with_overrides(config_path, with_value);
        fs::path root = out_dir.empty() ? fs::path(default_out_dir(cfg)) : fs::path(out_dir);
        std::string safe_value = value;
        for (char& c : safe_value) {
          if (c == '.' ) c = 'p';
        }
        const int code =
            run_one(cfg, (root / ("sweep_" + param + "_" + safe_value)).string());
        worst = std::max(worst, code);
      }
      return worst;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
