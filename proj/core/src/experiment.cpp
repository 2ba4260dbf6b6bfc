#include "bssim/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "bssim/moments.hpp"
#include "bssim/rng.hpp"

namespace bssim {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::ShgV: return "shg_v";
    case Scenario::ShgU: return "shg_u";
    case Scenario::LinearU: return "linear_u";
    case Scenario::TheoremSweep: return "theorem_sweep";
    case Scenario::Diagnostics: return "diagnostics";
  }
  return "unknown";
}

Scenario scenario_from_string(const std::string& name) {
  if (name == "shg_v") return Scenario::ShgV;
  if (name == "shg_u") return Scenario::ShgU;
  if (name == "linear_u") return Scenario::LinearU;
  if (name == "theorem_sweep") return Scenario::TheoremSweep;
  if (name == "diagnostics") return Scenario::Diagnostics;
  throw std::invalid_argument("unknown scenario '" + name + "'");
}

namespace {

std::string sign_name(KurtosisSign s) {
  switch (s) {
    case KurtosisSign::Free: return "free";
    case KurtosisSign::Negative: return "negative";
    case KurtosisSign::Positive: return "positive";
  }
  return "free";
}

KurtosisSign sign_from_string(const std::string& name) {
  if (name == "free") return KurtosisSign::Free;
  if (name == "negative") return KurtosisSign::Negative;
  if (name == "positive") return KurtosisSign::Positive;
  throw std::invalid_argument("unknown kurtosis sign '" + name + "'");
}

}  // namespace

ExperimentConfig default_config(Scenario scenario, const std::string& profile) {
  if (profile != "desk" && profile != "paper") {
    throw std::invalid_argument("unknown profile '" + profile + "' (desk|paper)");
  }
  const bool paper = profile == "paper";
  ExperimentConfig cfg;
  cfg.scenario = scenario;
  cfg.profile = profile;

  OpticsConfig& o = cfg.optics;
  if (paper) {
    o.L_D = 500.0;
    o.grid_points = 2048;
    o.z_s = 500.0;
    o.L = 125.0;
  } else {
    o.L_D = 64.0;
    o.grid_points = 512;
    o.z_s = 80.0;
    o.L = 20.0;
  }
  o.numerical_aperture = scenario == Scenario::LinearU ? 1.5 : 0.75;
  o.screen_correlation_length = 4.0;
  o.slm_correlation_length = 2.0;
  o.slm_sigma = 2.0;
  o.k0_sigma = scenario == Scenario::LinearU ? 3.0 : 1.0;
  if (scenario == Scenario::LinearU && !paper) {
    o.L = 12.0;  // keeps the camera inside the pupil shadow at NA = 1.5
  }

  switch (scenario) {
    case Scenario::ShgV:
      cfg.scene = {paper ? 50 : 25, 12.0, 0.0, false};
      cfg.illuminations = paper ? 10000 : 2500;
      cfg.ica.sign = KurtosisSign::Free;
      break;
    case Scenario::ShgU:
      cfg.scene = {paper ? 10 : 5, 8.0, 0.5, true};
      cfg.illuminations = 500;
      cfg.ica.sign = KurtosisSign::Negative;
      break;
    case Scenario::LinearU:
      cfg.scene = {paper ? 10 : 5, 5.0, 0.5, true};
      cfg.illuminations = 500;
      cfg.ica.sign = KurtosisSign::Negative;
      break;
    case Scenario::TheoremSweep:
    case Scenario::Diagnostics:
      cfg.scene = {2, 8.0, 0.0, false};
      cfg.illuminations = 100;
      break;
  }
  return cfg;
}

namespace {

json optics_to_json(const OpticsConfig& o) {
  return json{{"lambda", o.lambda},
              {"focal_length", o.z_s},
              {"screen_distance", o.L},
              {"window_side", o.L_D},
              {"grid_points", o.grid_points},
              {"numerical_aperture", o.numerical_aperture},
              {"slm_radius", o.slm_radius()},
              {"screen_radius", o.screen_radius()},
              {"camera_half_side", o.camera_half_side()},
              {"slm_correlation_length", o.slm_correlation_length},
              {"slm_sigma", o.slm_sigma},
              {"screen_correlation_length", o.screen_correlation_length},
              {"k0_sigma", o.k0_sigma}};
}

void optics_from_json(const json& j, OpticsConfig& o) {
  o.lambda = j.value("lambda", o.lambda);
  o.z_s = j.value("focal_length", o.z_s);
  o.L = j.value("screen_distance", o.L);
  o.L_D = j.value("window_side", o.L_D);
  o.grid_points = j.value("grid_points", o.grid_points);
  o.numerical_aperture = j.value("numerical_aperture", o.numerical_aperture);
  if (j.contains("slm_radius")) o.R_slm = j["slm_radius"].get<double>();
  if (j.contains("screen_radius")) o.R_s = j["screen_radius"].get<double>();
  if (j.contains("camera_half_side")) o.L_C = j["camera_half_side"].get<double>();
  o.slm_correlation_length = j.value("slm_correlation_length", o.slm_correlation_length);
  o.slm_sigma = j.value("slm_sigma", o.slm_sigma);
  o.screen_correlation_length =
      j.value("screen_correlation_length", o.screen_correlation_length);
  o.k0_sigma = j.value("k0_sigma", o.k0_sigma);
}

json config_to_json_object(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["scenario"] = to_string(c.scenario);
  j["profile"] = c.profile;
  j["optics"] = optics_to_json(c.optics);
  j["scene"] = json{{"count", c.scene.count},
                    {"window_side", c.scene.window_side},
                    {"min_separation", c.scene.min_separation},
                    {"screen_resonances", c.scene.screen_resonances}};
  j["illuminations"] = c.illuminations;
  j["noise_sigma"] = c.noise_sigma;
  j["ica"] = json{{"sign", sign_name(c.ica.sign)},
                  {"restarts", c.ica.restarts},
                  {"max_iterations", c.ica.max_iterations},
                  {"angle_tolerance", c.ica.angle_tolerance},
                  {"init_scale", c.ica.init_scale}};
  j["imaging"] = json{{"eta_f", c.imaging.eta_f},
                      {"eta_i", c.imaging.eta_i},
                      {"svd_count", c.imaging.svd_count},
                      {"svd_relative_threshold", c.imaging.svd_relative_threshold},
                      {"subpixel_shifts", c.imaging.subpixel_shifts}};
  j["sweep"] = json{{"rho_values", c.sweep.rho_values},
                    {"noise_values", c.sweep.noise_values},
                    {"samples", c.sweep.samples},
                    {"seeds_per_point", c.sweep.seeds_per_point}};
  j["seed"] = c.seed;
  j["repetitions"] = c.repetitions;
  return j;
}

ExperimentConfig config_from_json_object(const json& j) {
  if (!j.contains("scenario")) {
    throw std::invalid_argument("config: missing required field 'scenario'");
  }
  const int version = j.value("schema_version", 1);
  if (version != 1) {
    throw std::invalid_argument("config: unsupported schema_version " +
                                std::to_string(version));
  }
  const Scenario scenario = scenario_from_string(j["scenario"].get<std::string>());
  ExperimentConfig c = default_config(scenario, j.value("profile", std::string("desk")));
  if (j.contains("optics")) optics_from_json(j["optics"], c.optics);
  if (j.contains("scene")) {
    const json& s = j["scene"];
    c.scene.count = s.value("count", c.scene.count);
    c.scene.window_side = s.value("window_side", c.scene.window_side);
    c.scene.min_separation = s.value("min_separation", c.scene.min_separation);
    c.scene.screen_resonances = s.value("screen_resonances", c.scene.screen_resonances);
  }
  c.illuminations = j.value("illuminations", c.illuminations);
  c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
  if (j.contains("ica")) {
    const json& s = j["ica"];
    if (s.contains("sign")) c.ica.sign = sign_from_string(s["sign"].get<std::string>());
    c.ica.restarts = s.value("restarts", c.ica.restarts);
    c.ica.max_iterations = s.value("max_iterations", c.ica.max_iterations);
    c.ica.angle_tolerance = s.value("angle_tolerance", c.ica.angle_tolerance);
    c.ica.init_scale = s.value("init_scale", c.ica.init_scale);
  }
  if (j.contains("imaging")) {
    const json& s = j["imaging"];
    c.imaging.eta_f = s.value("eta_f", c.imaging.eta_f);
    c.imaging.eta_i = s.value("eta_i", c.imaging.eta_i);
    c.imaging.svd_count = s.value("svd_count", c.imaging.svd_count);
    c.imaging.svd_relative_threshold =
        s.value("svd_relative_threshold", c.imaging.svd_relative_threshold);
    c.imaging.subpixel_shifts = s.value("subpixel_shifts", c.imaging.subpixel_shifts);
  }
  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    if (s.contains("rho_values")) c.sweep.rho_values = s["rho_values"].get<std::vector<double>>();
    if (s.contains("noise_values"))
      c.sweep.noise_values = s["noise_values"].get<std::vector<double>>();
    c.sweep.samples = s.value("samples", c.sweep.samples);
    c.sweep.seeds_per_point = s.value("seeds_per_point", c.sweep.seeds_per_point);
  }
  c.seed = j.value("seed", c.seed);
  c.repetitions = j.value("repetitions", c.repetitions);
  return c;
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
  return load_config_with_overrides(path, {});
}

ExperimentConfig load_config_with_overrides(
    const std::string& path,
    const std::vector<std::pair<std::string, std::string>>& overrides) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_config: cannot open " + path);
  json j = json::parse(f);
  if (j.contains("config")) j = j["config"];  // manifests re-run as configs
  for (const auto& [dotted, text] : overrides) {
    std::string pointer = "/";
    for (char c : dotted) pointer += (c == '.') ? '/' : c;
    json value;
    try {
      value = json::parse(text);
    } catch (const json::parse_error&) {
      value = text;  // bare strings, e.g. profile names
    }
    j[json::json_pointer(pointer)] = value;
  }
  return config_from_json_object(j);
}

std::string config_json(const ExperimentConfig& cfg) {
  return config_to_json_object(cfg).dump(2);
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string text = config_to_json_object(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

std::vector<ValidationIssue> validate_config(const ExperimentConfig& cfg) {
  std::vector<ValidationIssue> issues;
  const OpticsConfig& o = cfg.optics;
  const Modality m = cfg.modality();
  const double k = o.return_wavenumber(m);
  auto add = [&](const std::string& check, const std::string& detail, bool fatal) {
    issues.push_back({check, detail, fatal});
  };

  if (o.grid_points < 8 || o.grid_points % 2 != 0) {
    add("grid", "grid_points must be even and at least 8", true);
  }
  const double h = o.pitch();
  const double resolution = o.lambda / (2.0 * o.numerical_aperture);
  if (h > resolution) {
    add("resolution",
        "grid pitch " + std::to_string(h) + " does not resolve lambda/2NA = " +
            std::to_string(resolution),
        true);
  }
  if (screen_covariance_scale(o.screen_correlation_length) <= 2.0 * h) {
    add("screen_field", "screen correlation length under-resolved by the grid", true);
  }
  if (screen_covariance_scale(o.slm_correlation_length) <= 2.0 * o.slm_pitch()) {
    add("slm_field", "SLM correlation length under-resolved by the SLM grid", true);
  }
  const double slm_chirp =
      o.k0() * o.L * o.slm_radius() / (o.z_s * o.z_s) * o.slm_pitch();
  if (slm_chirp > kPi) {
    add("slm_chirp",
        "SLM chirp advances " + std::to_string(slm_chirp) + " rad per pixel", true);
  }

  const bool imaging_scenario = cfg.scenario == Scenario::ShgV ||
                                cfg.scenario == Scenario::ShgU ||
                                cfg.scenario == Scenario::LinearU;
  if (imaging_scenario) {
    const double band_chirp = k * o.camera_half_side() / o.z_s * h;
    if (band_chirp > kPi) {
      add("green_chirp",
          "camera-band source chirp advances " + std::to_string(band_chirp) +
              " rad per pixel",
          true);
    }
    const double reach = o.screen_radius() + cfg.scene.window_side / std::sqrt(2.0);
    const double full_chirp = k * reach / o.L * h;
    if (full_chirp > kPi && band_chirp <= kPi) {
      add("green_chirp_pupil",
          "full-pupil source chirp advances " + std::to_string(full_chirp) +
              " rad per pixel; contributions far from the camera stationary points "
              "alias at a low level",
          false);
    }
    const double dual_half = o.grid_points / 2 * o.camera_pitch(k);
    if (o.camera_half_side() > dual_half) {
      add("camera_coverage",
          "camera half-side " + std::to_string(o.camera_half_side()) +
              " exceeds the dual window half-extent " + std::to_string(dual_half),
          true);
    }
    const double shadow = (o.screen_radius() - cfg.scene.window_side / std::sqrt(2.0)) *
                          o.z_s / o.L;
    if (shadow < o.camera_half_side()) {
      add("pupil_shadow",
          "camera extends past the pupil-limited support of the Green's function",
          false);
    }
    const double density = cfg.scene.count * kPi / 4.0 *
                           cfg.scene.min_separation * cfg.scene.min_separation /
                           (cfg.scene.window_side * cfg.scene.window_side);
    if (density > 0.55) {
      add("packing",
          "min separation " + std::to_string(cfg.scene.min_separation) +
              " infeasible for " + std::to_string(cfg.scene.count) +
              " scatterers in a window of side " + std::to_string(cfg.scene.window_side),
          true);
    }
  }

  const auto [a1, a2] = stationary_phase_validity(o, k);
  add("stationary_phase",
      "z_s/(k R_s^2) = " + std::to_string(a1) + ", sigma L/(l_0 R_s) = " + std::to_string(a2),
      a1 >= 1.0 || a2 >= 1.0);
  return issues;
}

ImagingOutcome run_imaging_once(const ExperimentConfig& cfg, std::uint64_t rep_seed) {
  const OpticsConfig& o = cfg.optics;
  const Modality modality = cfg.modality();
  const double k = o.return_wavenumber(modality);
  const CameraGrid cam = camera_grid(o, k);

  ImagingOutcome out;
  // Scene draw, resampled until the separability screening accepts it.
  const std::uint64_t scene_base = split_seed(rep_seed, 0xC0FFEE);
  Scene scene;
  int attempts = 0;
  for (;;) {
    ++attempts;
    scene = make_scene(cfg.scene.count, cfg.scene.window_side, cfg.scene.min_separation,
                       split_seed(scene_base, attempts));
    if (!cfg.scene.screen_resonances || rgo_scene_clean(scene, o, modality)) break;
    if (attempts > 200) {
      throw std::runtime_error("run_imaging_once: no resonance-free scene in 200 draws");
    }
  }
  out.scene = scene;
  out.scene_attempts = attempts;
  out.min_pair_distance = std::numeric_limits<double>::infinity();
  for (int i = 0; i < scene.count(); ++i) {
    for (int j = i + 1; j < scene.count(); ++j) {
      out.min_pair_distance =
          std::min(out.min_pair_distance, (scene.positions[i] - scene.positions[j]).norm());
    }
  }

  ReflectionMatrix r =
      reflection_matrix(scene, o, cfg.illuminations, modality, cfg.noise_sigma, rep_seed);

  SvdPolicy policy;
  if (cfg.imaging.svd_relative_threshold >= 0.0) {
    policy.relative_threshold = cfg.imaging.svd_relative_threshold;
  } else {
    policy.fixed_count = cfg.imaging.svd_count > 0 ? cfg.imaging.svd_count : scene.count();
  }
  TruncatedSvd svd = svd_truncate(r.entries, policy);
  const int n_src = svd.retained;

  ExtractionOptions opts;
  opts.sign = cfg.ica.sign;
  opts.restarts = cfg.ica.restarts;
  opts.max_iterations = cfg.ica.max_iterations;
  opts.angle_tolerance = cfg.ica.angle_tolerance;
  opts.init_scale = cfg.ica.init_scale;
  opts.seed = split_seed(rep_seed, 0x1CA);

  MatrixXcd g_est;
  SampleMatrix truth;
  if (cfg.scenario == Scenario::ShgV) {
    // Separation on V: sources are the illumination rows; the Green's
    // columns follow from G rho = U Sigma A_1.
    MatrixXcd x_raw = svd.v.adjoint();
    WhitenedData white = whiten(x_raw, n_src, SampleAxis::Realizations);
    SeparationResult sep = separate(white, n_src, opts);
    if (sep.extracted < n_src) {
      throw std::runtime_error("run_imaging_once: V-side separation incomplete");
    }
    const double n_sa = static_cast<double>(x_raw.cols());
    MatrixXcd centered = x_raw.colwise() - x_raw.rowwise().mean().eval();
    MatrixXcd c_xs = centered * sep.estimated_sources.adjoint() / n_sa;
    MatrixXcd c_ss = sep.estimated_sources * sep.estimated_sources.adjoint() / n_sa;
    MatrixXcd a1 = c_xs * c_ss.inverse();
    g_est = svd.u * svd.singular_values.asDiagonal() * a1;
    truth = sources_ground_truth(scene, o, modality, SourceSide::VSide, cfg.illuminations,
                                 rep_seed);
    AlignmentReport align = align_to_truth(sep.estimated_sources, truth.data);
    out.mean_truth_correlation = align.correlations.mean();
  } else {
    // Separation on U: sources are the conjugated Green's columns.
    MatrixXcd x_raw = svd.u.adjoint();
    WhitenedData white = whiten(x_raw, n_src, SampleAxis::CameraPixels);
    SeparationResult sep = separate(white, n_src, opts);
    if (sep.extracted < n_src) {
      throw std::runtime_error("run_imaging_once: U-side separation incomplete");
    }
    g_est = sep.estimated_sources.conjugate().transpose();
    truth = sources_ground_truth(scene, o, modality, SourceSide::USide, cfg.illuminations,
                                 rep_seed);
    AlignmentReport align = align_to_truth(sep.estimated_sources, truth.data);
    out.mean_truth_correlation = align.correlations.mean();
  }

  for (Eigen::Index c = 0; c < g_est.cols(); ++c) {
    const double ms = g_est.col(c).squaredNorm() / static_cast<double>(g_est.rows());
    if (ms > 0) g_est.col(c) /= std::sqrt(ms);
  }

  ImprovedDortOptions dopts;
  dopts.eta_f = cfg.imaging.eta_f;
  dopts.eta_i = cfg.imaging.eta_i;
  dopts.subpixel_shifts = cfg.imaging.subpixel_shifts;
  ImprovedDortResult improved = improved_dort(g_est, cam, k, o.z_s, dopts);
  out.improved_image = improved.image;

  std::vector<ComplexImage> j_images;
  j_images.reserve(n_src);
  for (int c = 0; c < n_src; ++c) {
    j_images.push_back(dort_image(svd.u.col(c), cam, k, o.z_s));
  }
  out.dort_image = dort_combined(j_images, cfg.imaging.eta_f);

  out.improved = localization_score(out.improved_image, scene.positions, 1.0);
  out.dort = localization_score(out.dort_image, scene.positions, 1.0);
  return out;
}

namespace {

json derived_quantities(const ExperimentConfig& cfg) {
  const OpticsConfig& o = cfg.optics;
  const Modality m = cfg.modality();
  const double k = o.return_wavenumber(m);
  const auto [a1, a2] = stationary_phase_validity(o, k);
  json d;
  d["incoming_correlation_length"] = o.incoming_correlation_length();
  d["outgoing_correlation_length"] = o.outgoing_correlation_length(m);
  d["isoplanatic_patch"] = o.isoplanatic_patch(m);
  d["image_pixel"] = o.outgoing_correlation_length(m);
  d["grid_pitch"] = o.pitch();
  d["stationary_phase_a1"] = a1;
  d["stationary_phase_a2"] = a2;
  d["return_wavenumber"] = k;
  try {
    const CameraGrid cam = camera_grid(o, k);
    d["camera_pixels_per_side"] = cam.count;
    d["camera_pitch"] = cam.pitch;
  } catch (const std::exception&) {
    d["camera_pixels_per_side"] = 0;
  }
  return d;
}

void write_manifest(const ExperimentConfig& cfg, const std::string& out_dir,
                    const std::vector<std::string>& artifacts, const std::string& status,
                    const std::string& message) {
  json m;
  m["config"] = config_to_json_object(cfg);
  m["config_hash"] = config_hash(cfg);
  m["derived"] = derived_quantities(cfg);
  m["artifacts"] = artifacts;
  m["status"] = status;
  if (!message.empty()) m["message"] = message;
  std::vector<std::uint64_t> rep_seeds;
  for (int r = 0; r < cfg.repetitions; ++r) {
    rep_seeds.push_back(split_seed(cfg.seed, 0xE0 + static_cast<std::uint64_t>(r)));
  }
  m["repetition_seeds"] = rep_seeds;
  std::ofstream f(fs::path(out_dir) / "manifest.json");
  f << m.dump(2) << '\n';
}

std::string run_imaging_scenario(const ExperimentConfig& cfg, const std::string& out_dir,
                                 std::vector<std::string>& artifacts) {
  std::ofstream metrics(fs::path(out_dir) / "metrics.csv");
  metrics.precision(17);
  metrics << "rep,seed,scene_attempts,min_pair_distance,hits_improved,misses_improved,"
             "false_improved,hits_dort,misses_dort,false_dort,mean_truth_correlation\n";
  artifacts.push_back("metrics.csv");
  for (int rep = 0; rep < cfg.repetitions; ++rep) {
    const std::uint64_t rep_seed = split_seed(cfg.seed, 0xE0 + static_cast<std::uint64_t>(rep));
    ImagingOutcome outcome = run_imaging_once(cfg, rep_seed);
    const std::string tag = std::to_string(rep);
    save_scene_csv(outcome.scene, (fs::path(out_dir) / ("scene_" + tag + ".csv")).string());
    save_pgm16(outcome.improved_image,
               (fs::path(out_dir) / ("improved_" + tag + ".pgm")).string());
    save_peaks_csv(outcome.improved_image,
                   (fs::path(out_dir) / ("improved_" + tag + "_peaks.csv")).string());
    save_pgm16(outcome.dort_image, (fs::path(out_dir) / ("dort_" + tag + ".pgm")).string());
    save_peaks_csv(outcome.dort_image,
                   (fs::path(out_dir) / ("dort_" + tag + "_peaks.csv")).string());
    artifacts.push_back("scene_" + tag + ".csv");
    artifacts.push_back("improved_" + tag + ".pgm");
    artifacts.push_back("improved_" + tag + "_peaks.csv");
    artifacts.push_back("dort_" + tag + ".pgm");
    artifacts.push_back("dort_" + tag + "_peaks.csv");
    metrics << rep << ',' << rep_seed << ',' << outcome.scene_attempts << ','
            << outcome.min_pair_distance << ',' << outcome.improved.hits << ','
            << outcome.improved.misses << ',' << outcome.improved.false_peaks << ','
            << outcome.dort.hits << ',' << outcome.dort.misses << ','
            << outcome.dort.false_peaks << ',' << outcome.mean_truth_correlation << '\n';
  }
  return "ok";
}

std::string run_sweep_scenario(const ExperimentConfig& cfg, const std::string& out_dir,
                               std::vector<std::string>& artifacts) {
  TheoremSweepResult result =
      theorem_scaling_experiment(cfg.sweep.rho_values, cfg.sweep.noise_values,
                                 cfg.sweep.seeds_per_point, cfg.sweep.samples, cfg.seed);
  std::ofstream f(fs::path(out_dir) / "sweep.csv");
  f.precision(17);
  f << "kind,parameter,seed,m_s,term1,term2,term3,m_n,dist,kurtosis_gap,ok\n";
  for (const SweepRow& row : result.rows) {
    f << (row.noise_point ? "noise" : "correlation") << ',' << row.parameter << ','
      << row.seed << ',' << row.m_s << ',' << row.term1 << ',' << row.term2 << ','
      << row.term3 << ',' << row.m_n << ',' << row.dist << ',' << row.kurtosis_gap << ','
      << (row.ok ? 1 : 0) << '\n';
  }
  artifacts.push_back("sweep.csv");
  std::ofstream s(fs::path(out_dir) / "sweep_summary.csv");
  s.precision(17);
  s << "fitted_exponent\n" << result.fitted_exponent << '\n';
  artifacts.push_back("sweep_summary.csv");
  return "ok";
}

std::string run_diagnostics_scenario(const ExperimentConfig& cfg, const std::string& out_dir,
                                     std::vector<std::string>& artifacts) {
  const OpticsConfig& o = cfg.optics;
  const Modality m = cfg.modality();
  const double k = o.return_wavenumber(m);
  std::ofstream f(fs::path(out_dir) / "diagnostics.csv");
  f.precision(17);
  f << "name,value\n";
  const json derived = derived_quantities(cfg);
  for (auto it = derived.begin(); it != derived.end(); ++it) {
    f << it.key() << ',' << it.value().dump() << '\n';
  }
  // Measured screen coherence against the formula value.
  const GridSpec grid{256, o.screen_correlation_length / 3.0};
  const double measured = measure_screen_coherence_length(
      o.screen_correlation_length, k, o.screen_sigma(), grid, 20, cfg.seed);
  f << "screen_coherence_measured," << measured << '\n';
  f << "screen_coherence_formula,"
    << screen_coherence_length(o.screen_correlation_length, k, o.screen_sigma()) << '\n';

  // Incoming-field circularity over a few seeds at a central point.
  const int seeds = 24;
  std::vector<cd> w_samples;
  for (int s = 0; s < seeds; ++s) {
    Field w = incoming_field(o, split_seed(cfg.seed, 0xD1A + static_cast<std::uint64_t>(s)));
    w_samples.push_back(w.values(w.n() / 2, w.n() / 2));
  }
  double re2 = 0, im2 = 0, cross = 0;
  for (cd v : w_samples) {
    re2 += v.real() * v.real();
    im2 += v.imag() * v.imag();
    cross += v.real() * v.imag();
  }
  f << "circularity_re2," << re2 / seeds << '\n';
  f << "circularity_im2," << im2 / seeds << '\n';
  f << "circularity_cross," << cross / seeds << '\n';
  artifacts.push_back("diagnostics.csv");
  return "ok";
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir) {
  RunResult result;
  std::vector<ValidationIssue> issues = validate_config(cfg);
  std::string fatal;
  for (const auto& issue : issues) {
    if (issue.fatal) fatal += issue.check + ": " + issue.detail + "; ";
  }
  fs::create_directories(out_dir);
  if (!fatal.empty()) {
    result.exit_code = 2;
    result.message = "config validation failed: " + fatal;
    write_manifest(cfg, out_dir, result.artifacts, "config_error", result.message);
    return result;
  }

  try {
    std::string status;
    switch (cfg.scenario) {
      case Scenario::ShgV:
      case Scenario::ShgU:
      case Scenario::LinearU:
        status = run_imaging_scenario(cfg, out_dir, result.artifacts);
        break;
      case Scenario::TheoremSweep:
        status = run_sweep_scenario(cfg, out_dir, result.artifacts);
        break;
      case Scenario::Diagnostics:
        status = run_diagnostics_scenario(cfg, out_dir, result.artifacts);
        break;
    }
    write_manifest(cfg, out_dir, result.artifacts, status, "");
    result.message = status;
  } catch (const std::exception& e) {
    result.exit_code = 1;
    result.message = e.what();
    write_manifest(cfg, out_dir, result.artifacts, "failed", result.message);
  }
  return result;
}

}  // namespace bssim
