#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"

#include "bssim/experiment.hpp"

using namespace bssim;
namespace fs = std::filesystem;

namespace {

/// Imaging config small enough for a unit test: two scatterers, few
/// illuminations, desk geometry.
ExperimentConfig mini_imaging_config() {
  ExperimentConfig cfg = default_config(Scenario::ShgU, "desk");
  cfg.scene.count = 2;
  cfg.scene.min_separation = 1.0;
  cfg.illuminations = 30;
  cfg.ica.restarts = 3;
  cfg.repetitions = 1;
  cfg.seed = 11;
  return cfg;
}

std::string slurp(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("profile defaults validate cleanly") {
  for (Scenario s : {Scenario::ShgU, Scenario::LinearU, Scenario::ShgV,
                     Scenario::TheoremSweep, Scenario::Diagnostics}) {
    ExperimentConfig desk = default_config(s, "desk");
    for (const auto& issue : validate_config(desk)) {
      INFO(to_string(s), " desk: ", issue.check, ": ", issue.detail);
      CHECK_FALSE(issue.fatal);
    }
    ExperimentConfig paper = default_config(s, "paper");
    for (const auto& issue : validate_config(paper)) {
      INFO(to_string(s), " paper: ", issue.check, ": ", issue.detail);
      CHECK_FALSE(issue.fatal);
    }
  }
  CHECK_THROWS_AS(default_config(Scenario::ShgU, "laptop"), std::invalid_argument);
}

TEST_CASE("validation catches an under-resolving grid") {
  ExperimentConfig cfg = default_config(Scenario::LinearU, "desk");
  cfg.optics.grid_points = 32;  // NA = 1.5 needs far finer sampling
  bool found = false;
  for (const auto& issue : validate_config(cfg)) {
    found |= (issue.check == "resolution" && issue.fatal);
  }
  CHECK(found);
}

TEST_CASE("validation catches infeasible packing") {
  ExperimentConfig cfg = default_config(Scenario::ShgU, "desk");
  cfg.scene.count = 50;
  cfg.scene.window_side = 1.0;
  cfg.scene.min_separation = 1.0;
  bool found = false;
  for (const auto& issue : validate_config(cfg)) {
    found |= (issue.check == "packing" && issue.fatal);
  }
  CHECK(found);
}

TEST_CASE("validation reports the stationary phase numbers for the paper profile") {
  ExperimentConfig cfg = default_config(Scenario::ShgU, "paper");
  bool reported = false;
  for (const auto& issue : validate_config(cfg)) {
    if (issue.check == "stationary_phase") {
      reported = true;
      CHECK_FALSE(issue.fatal);
    }
  }
  CHECK(reported);
}

TEST_CASE("config json round trip preserves the hash") {
  ExperimentConfig cfg = mini_imaging_config();
  const std::string text = config_json(cfg);
  TempDir dir("bssim_cfg_roundtrip");
  const fs::path path = dir.path / "cfg.json";
  std::ofstream(path) << text;
  ExperimentConfig loaded = load_config(path.string());
  CHECK(config_hash(loaded) == config_hash(cfg));
  CHECK(config_json(loaded) == text);
}

TEST_CASE("dotted overrides reach nested fields") {
  TempDir dir("bssim_cfg_override");
  const fs::path path = dir.path / "cfg.json";
  std::ofstream(path) << R"({"scenario": "shg_u"})";
  ExperimentConfig cfg = load_config_with_overrides(
      path.string(), {{"imaging.eta_f", "0.7"}, {"seed", "99"}, {"profile", "desk"}});
  CHECK(cfg.imaging.eta_f == 0.7);
  CHECK(cfg.seed == 99);
  CHECK(cfg.scenario == Scenario::ShgU);
}

TEST_CASE("missing scenario is rejected") {
  TempDir dir("bssim_cfg_bad");
  const fs::path path = dir.path / "cfg.json";
  std::ofstream(path) << R"({"profile": "desk"})";
  CHECK_THROWS_AS(load_config(path.string()), std::invalid_argument);
}

TEST_CASE("imaging run emits artifacts, manifest and byte-stable metrics") {
  ExperimentConfig cfg = mini_imaging_config();
  TempDir dir("bssim_run_mini");
  const fs::path out1 = dir.path / "run1";
  RunResult result = run_experiment(cfg, out1.string());
  REQUIRE(result.exit_code == 0);

  for (const char* name : {"manifest.json", "metrics.csv", "scene_0.csv", "improved_0.pgm",
                           "dort_0.pgm", "improved_0_peaks.csv", "dort_0_peaks.csv"}) {
    INFO(name);
    CHECK(fs::exists(out1 / name));
  }

  nlohmann::json manifest;
  std::ifstream(out1 / "manifest.json") >> manifest;
  CHECK(manifest["status"] == "ok");
  CHECK(manifest["derived"]["incoming_correlation_length"].get<double>() ==
        doctest::Approx(1.0 / 1.5));
  CHECK(manifest["derived"]["image_pixel"].get<double>() == doctest::Approx(1.0 / 3.0));
  CHECK(manifest["config"]["scenario"] == "shg_u");

  // Identical config and seed: byte-identical CSV output.
  const fs::path out2 = dir.path / "run2";
  REQUIRE(run_experiment(cfg, out2.string()).exit_code == 0);
  CHECK(slurp(out1 / "metrics.csv") == slurp(out2 / "metrics.csv"));
  CHECK(slurp(out1 / "improved_0.pgm") == slurp(out2 / "improved_0.pgm"));

  // The manifest alone reproduces the run.
  const fs::path out3 = dir.path / "run3";
  ExperimentConfig from_manifest = load_config((out1 / "manifest.json").string());
  CHECK(config_hash(from_manifest) == config_hash(cfg));
  REQUIRE(run_experiment(from_manifest, out3.string()).exit_code == 0);
  CHECK(slurp(out1 / "metrics.csv") == slurp(out3 / "metrics.csv"));
}

TEST_CASE("invalid config exits with code 2 and a failure manifest") {
  ExperimentConfig cfg = mini_imaging_config();
  cfg.optics.grid_points = 32;
  TempDir dir("bssim_run_invalid");
  RunResult result = run_experiment(cfg, (dir.path / "out").string());
  CHECK(result.exit_code == 2);
  nlohmann::json manifest;
  std::ifstream(dir.path / "out" / "manifest.json") >> manifest;
  CHECK(manifest["status"] == "config_error");
}

TEST_CASE("theorem sweep emits one csv row per point and seed") {
  ExperimentConfig cfg = default_config(Scenario::TheoremSweep, "desk");
  cfg.sweep.rho_values = {0.05, 0.12, 0.19, 0.26, 0.33, 0.4};
  cfg.sweep.noise_values = {};
  cfg.sweep.samples = 4000;
  cfg.sweep.seeds_per_point = 10;
  cfg.seed = 5;
  TempDir dir("bssim_run_sweep");
  RunResult result = run_experiment(cfg, (dir.path / "out").string());
  REQUIRE(result.exit_code == 0);

  std::ifstream f(dir.path / "out" / "sweep.csv");
  std::string line;
  std::getline(f, line);
  CHECK(line == "kind,parameter,seed,m_s,term1,term2,term3,m_n,dist,kurtosis_gap,ok");
  int rows = 0;
  while (std::getline(f, line)) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows == 60);
}

TEST_CASE("linear scenario manifest records the isoplanatic patch") {
  ExperimentConfig cfg = default_config(Scenario::LinearU, "desk");
  // k0 sigma = 3: l_c = 2 sqrt(2) * 4 / 3 = 3.77 lambda.
  CHECK(cfg.optics.isoplanatic_patch(cfg.modality()) == doctest::Approx(3.7712).epsilon(1e-4));
  ExperimentConfig shg = default_config(Scenario::ShgU, "desk");
  CHECK(shg.optics.isoplanatic_patch(shg.modality()) == doctest::Approx(5.6569).epsilon(1e-4));
}

TEST_CASE("diagnostics scenario writes the measured coherence") {
  ExperimentConfig cfg = default_config(Scenario::Diagnostics, "desk");
  cfg.seed = 3;
  TempDir dir("bssim_run_diag");
  RunResult result = run_experiment(cfg, (dir.path / "out").string());
  REQUIRE(result.exit_code == 0);
  const std::string text = slurp(dir.path / "out" / "diagnostics.csv");
  CHECK(text.find("screen_coherence_measured") != std::string::npos);
  CHECK(text.find("screen_coherence_formula") != std::string::npos);
  CHECK(text.find("circularity_re2") != std::string::npos);
}

}  // TEST_SUITE
