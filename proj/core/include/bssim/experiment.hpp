#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bssim/ica.hpp"
#include "bssim/imaging.hpp"
#include "bssim/optics.hpp"
#include "bssim/scene.hpp"
#include "bssim/separability.hpp"

namespace bssim {

enum class Scenario { ShgV, ShgU, LinearU, TheoremSweep, Diagnostics };

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& name);

struct SceneConfig {
  int count = 5;
  double window_side = 8.0;
  double min_separation = 0.0;
  bool screen_resonances = true;  // resample until rgo_scene_clean holds
};

struct IcaConfig {
  KurtosisSign sign = KurtosisSign::Free;
  int restarts = 5;
  int max_iterations = 200;
  double angle_tolerance = 1e-6;
  double init_scale = 0.05;
};

struct ImagingConfig {
  double eta_f = 0.99;
  double eta_i = 0.2;
  int svd_count = -1;  // < 0 keeps one triplet per scatterer
  double svd_relative_threshold = -1.0;
  bool subpixel_shifts = false;
};

struct SweepConfig {
  std::vector<double> rho_values{0.05, 0.12, 0.19, 0.26, 0.33, 0.4};
  std::vector<double> noise_values{};
  Eigen::Index samples = 100000;
  int seeds_per_point = 10;
};

/// Fully resolved experiment description; every length in lambda. The JSON
/// form round-trips through the manifest.
struct ExperimentConfig {
  int schema_version = 1;
  Scenario scenario = Scenario::ShgU;
  std::string profile = "desk";
  OpticsConfig optics;
  SceneConfig scene;
  Eigen::Index illuminations = 500;
  double noise_sigma = 0.0;
  IcaConfig ica;
  ImagingConfig imaging;
  SweepConfig sweep;
  std::uint64_t seed = 1;
  int repetitions = 1;

  Modality modality() const {
    return scenario == Scenario::LinearU ? Modality::Linear : Modality::Shg;
  }
};

/// Built-in defaults: "paper" follows the published simulation parameters,
/// "desk" is the scaled-down profile sized for a 512^2 grid.
ExperimentConfig default_config(Scenario scenario, const std::string& profile = "desk");

/// Parses a config (or a manifest, whose "config" object is honored) and
/// fills unset fields from the profile defaults. Throws on malformed input.
ExperimentConfig load_config(const std::string& path);

/// load_config with dotted-path overrides applied before resolution, e.g.
/// {"imaging.eta_f", "0.5"} or {"profile", "paper"}. Values are parsed as
/// JSON literals, falling back to strings.
ExperimentConfig load_config_with_overrides(
    const std::string& path,
    const std::vector<std::pair<std::string, std::string>>& overrides);

/// Fully resolved canonical JSON text of a config.
std::string config_json(const ExperimentConfig& cfg);

/// FNV-1a hash of the canonical config text, hex encoded.
std::string config_hash(const ExperimentConfig& cfg);

struct ValidationIssue {
  std::string check;
  std::string detail;
  bool fatal = false;
};

/// Schema and physics checks without running: grid resolution, chirp
/// sampling, camera coverage, stationary-phase numbers, packing feasibility.
std::vector<ValidationIssue> validate_config(const ExperimentConfig& cfg);

struct RunResult {
  int exit_code = 0;  // 0 success, 1 pipeline failure, 2 config failure
  std::string message;
  std::vector<std::string> artifacts;
};

/// Executes the scenario pipeline and writes images, CSV metrics and the
/// manifest into out_dir (created if needed).
RunResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir);

/// Per-repetition imaging outcome, also used by the acceptance suite.
struct ImagingOutcome {
  Scene scene;
  LocalizationScore improved;
  LocalizationScore dort;
  ImageGrid improved_image;
  ImageGrid dort_image;
  double min_pair_distance = 0.0;
  double mean_truth_correlation = 0.0;  // alignment of estimated vs true sources
  int scene_attempts = 1;
};

/// One imaging repetition (scene draw, reflection matrix, SVD, separation,
/// DORT and improved DORT, scoring).
ImagingOutcome run_imaging_once(const ExperimentConfig& cfg, std::uint64_t rep_seed);

}  // namespace bssim
