#include "bssim/scene.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "bssim/parallel.hpp"
#include "bssim/random_field.hpp"
#include "bssim/rng.hpp"

namespace bssim {

namespace {

constexpr std::uint64_t kIlluminationStreamTag = 0x1E;
constexpr std::uint64_t kNoiseStreamTag = 0x4E;

}  // namespace

Scene make_scene(int count, double window_side, double min_separation, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("make_scene: count must be >= 1");
  Scene scene;
  scene.window_side = window_side;
  scene.min_separation = min_separation;
  scene.positions.reserve(count);
  scene.amplitudes.assign(count, cd(1.0, 0.0));

  Rng rng(seed);
  const double half = window_side / 2.0;
  const double min2 = min_separation * min_separation;
  const long budget = 200000L + 10000L * count;
  long draws = 0;
  while (scene.count() < count) {
    if (++draws > budget) {
      throw std::runtime_error(
          "make_scene: rejection budget exhausted placing " + std::to_string(count) +
          " scatterers with min separation " + std::to_string(min_separation) +
          " in a window of side " + std::to_string(window_side) +
          " (packing constraint infeasible)");
    }
    Vec2 p(rng.uniform(-half, half), rng.uniform(-half, half));
    bool ok = true;
    for (const Vec2& q : scene.positions) {
      if ((p - q).squaredNorm() < min2) {
        ok = false;
        break;
      }
    }
    if (ok) scene.positions.push_back(p);
  }
  return scene;
}

MatrixXcd green_columns(const Scene& scene, const OpticsConfig& cfg, Modality modality,
                        const RealField& profile, GreenModel model) {
  const double k = cfg.return_wavenumber(modality);
  const CameraGrid cam = camera_grid(cfg, k);
  const int n_d = scene.count();
  MatrixXcd g(cam.pixels(), n_d);
  parallel_for(n_d, [&](int l) {
    if (model == GreenModel::Rgo) {
      g.col(l) = green_rgo_camera(cfg, scene.positions[l], profile, k);
    } else {
      g.col(l) = camera_samples(green_full(cfg, scene.positions[l], profile, k), cam);
    }
  });
  return g;
}

MatrixXcd illumination_matrix(const Scene& scene, const OpticsConfig& cfg,
                              Modality modality, const RealField& profile,
                              Eigen::Index n_illuminations, std::uint64_t seed) {
  const int n_d = scene.count();
  const std::uint64_t base = split_seed(seed, kIlluminationStreamTag);
  const Field screen = screen_phase(cfg, profile, cfg.k0());
  MatrixXcd h(n_illuminations, n_d);
  parallel_for(static_cast<int>(n_illuminations), [&](int j) {
    Field w = incoming_field(cfg, screen, split_seed(base, static_cast<std::uint64_t>(j)));
    const GridSpec g = w.grid();
    for (int l = 0; l < n_d; ++l) {
      cd value = interpolate(w.values, g, scene.positions[l]);
      h(j, l) = modality == Modality::Shg ? value * value : value;
    }
  });
  return h;
}

ReflectionMatrix reflection_matrix(const Scene& scene, const OpticsConfig& cfg,
                                   Eigen::Index n_illuminations, Modality modality,
                                   double noise_sigma, std::uint64_t seed,
                                   GreenModel model) {
  ReflectionMatrix out;
  out.modality = modality;
  out.noise_sigma = noise_sigma;
  out.seed = seed;
  out.camera = camera_grid(cfg, cfg.return_wavenumber(modality));

  RealField profile = screen_profile(cfg, seed);
  MatrixXcd g = green_columns(scene, cfg, modality, profile, model);
  MatrixXcd h = illumination_matrix(scene, cfg, modality, profile, n_illuminations, seed);

  Eigen::VectorXcd rho(scene.count());
  for (int l = 0; l < scene.count(); ++l) rho(l) = scene.amplitudes[l];

  out.entries = g * rho.asDiagonal() * h.transpose();
  if (noise_sigma > 0.0) {
    out.entries += complex_circular_noise(out.entries.rows(), out.entries.cols(),
                                          noise_sigma, split_seed(seed, kNoiseStreamTag))
                       .data;
  }
  return out;
}

SampleMatrix sources_ground_truth(const Scene& scene, const OpticsConfig& cfg,
                                  Modality modality, SourceSide side,
                                  Eigen::Index n_illuminations, std::uint64_t seed,
                                  GreenModel model) {
  RealField profile = screen_profile(cfg, seed);
  SampleMatrix out;
  if (side == SourceSide::VSide) {
    MatrixXcd h = illumination_matrix(scene, cfg, modality, profile, n_illuminations, seed);
    out.data = h.transpose();
    out.axis = SampleAxis::Realizations;
  } else {
    MatrixXcd g = green_columns(scene, cfg, modality, profile, model);
    out.data = g.adjoint();  // rows are conj G(u_j; x_l) over pixels
    out.axis = SampleAxis::CameraPixels;
  }
  for (Eigen::Index i = 0; i < out.data.rows(); ++i) {
    const double m2 = out.data.row(i).squaredNorm() / static_cast<double>(out.data.cols());
    out.data.row(i) /= std::sqrt(m2);
  }
  return out;
}

void save_scene_csv(const Scene& scene, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_scene_csv: cannot open " + path);
  f << "x,y,re_amp,im_amp\n";
  f.precision(17);
  for (int i = 0; i < scene.count(); ++i) {
    f << scene.positions[i].x() << ',' << scene.positions[i].y() << ','
      << scene.amplitudes[i].real() << ',' << scene.amplitudes[i].imag() << '\n';
  }
}

Scene load_scene_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_scene_csv: cannot open " + path);
  std::string line;
  if (!std::getline(f, line) || line.rfind("x,y,", 0) != 0) {
    throw std::runtime_error("load_scene_csv: missing header line in " + path);
  }
  Scene scene;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    double v[4];
    for (int k = 0; k < 4; ++k) {
      if (!std::getline(ss, tok, ',')) {
        throw std::runtime_error("load_scene_csv: short row in " + path);
      }
      v[k] = std::stod(tok);
    }
    scene.positions.emplace_back(v[0], v[1]);
    scene.amplitudes.emplace_back(v[2], v[3]);
  }
  return scene;
}

}  // namespace bssim
