#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bssim/optics.hpp"
#include "bssim/types.hpp"

namespace bssim {

/// Point-scatterer configuration on the sample plane.
struct Scene {
  std::vector<Vec2> positions;      // lambda
  std::vector<cd> amplitudes;       // V_s(x_j)
  double window_side = 0.0;
  double min_separation = 0.0;

  int count() const { return static_cast<int>(positions.size()); }
};

/// Uniform i.i.d. scatterer positions in the centered square, resampled until
/// every pair is at least min_separation apart; identical unit amplitudes.
/// Throws when the rejection budget is exhausted (packing infeasible).
Scene make_scene(int count, double window_side, double min_separation, std::uint64_t seed);

/// Which Green's function model generates data. Full is the default forward
/// model; Rgo is the stationary-phase approximation used by oracles.
enum class GreenModel { Full, Rgo };

/// Measured data R = G rho H^T + n on camera pixels x illuminations.
struct ReflectionMatrix {
  MatrixXcd entries;  // N_p x N_r, camera pixels column-major per CameraGrid
  CameraGrid camera;
  Modality modality = Modality::Shg;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

/// Green's-function matrix: column l holds G(u_i; x_l) over camera pixels.
MatrixXcd green_columns(const Scene& scene, const OpticsConfig& cfg, Modality modality,
                        const RealField& profile, GreenModel model);

/// Illumination matrix H: row j holds H^j(x_l) over scatterers, with
/// H^j = (W^j)^2 in the SHG case and W^j in the linear case. Illumination j
/// draws its SLM pattern from a per-j derived seed.
MatrixXcd illumination_matrix(const Scene& scene, const OpticsConfig& cfg,
                              Modality modality, const RealField& profile,
                              Eigen::Index n_illuminations, std::uint64_t seed);

ReflectionMatrix reflection_matrix(const Scene& scene, const OpticsConfig& cfg,
                                   Eigen::Index n_illuminations, Modality modality,
                                   double noise_sigma, std::uint64_t seed,
                                   GreenModel model = GreenModel::Full);

/// Which side of the SVD factorization the sources live on.
enum class SourceSide { USide, VSide };

/// True source matrix for testing: rows are H^j(x_l) over illuminations
/// (V side) or conj G(u_j; x_l) over camera pixels (U side), each row
/// normalized to unit empirical second moment.
SampleMatrix sources_ground_truth(const Scene& scene, const OpticsConfig& cfg,
                                  Modality modality, SourceSide side,
                                  Eigen::Index n_illuminations, std::uint64_t seed,
                                  GreenModel model = GreenModel::Full);

/// Plain-text scene serialization, header line "x,y,re_amp,im_amp".
void save_scene_csv(const Scene& scene, const std::string& path);
Scene load_scene_csv(const std::string& path);

}  // namespace bssim
