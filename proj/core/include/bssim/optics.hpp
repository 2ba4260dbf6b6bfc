#pragma once

#include <cstdint>
#include <utility>

#include "bssim/random_field.hpp"
#include "bssim/types.hpp"

namespace bssim {

/// Scattering modality. The return path carries 2*k0 in the SHG case and k0
/// in the linear case; the illumination path is always at k0.
enum class Modality { Shg, Linear };

/// Geometry and statistical parameters of the optical train. All lengths in
/// units of the illumination wavelength lambda (= 1 by convention).
struct OpticsConfig {
  double lambda = 1.0;
  double z_s = 500.0;        // focal length
  double L = 125.0;          // screen distance from the sample plane
  double L_D = 500.0;        // computational window side (sample-type grids)
  int grid_points = 512;
  double numerical_aperture = 0.75;
  double R_slm = -1.0;       // SLM pupil radius; < 0 selects NA * z_s
  double R_s = -1.0;         // screen pupil radius; < 0 selects 0.45 * L_D
  double L_C = -1.0;         // camera half-side; < 0 selects NA * z_s

  double slm_correlation_length = 2.0;  // nominal l_SLM
  double slm_sigma = 2.0;               // sigma_SLM
  double screen_correlation_length = 4.0;  // nominal l_0
  double k0_sigma = 1.0;                   // k0 * sigma of the screen

  double k0() const { return 2.0 * kPi / lambda; }
  double return_wavenumber(Modality m) const {
    return m == Modality::Shg ? 2.0 * k0() : k0();
  }
  double screen_sigma() const { return k0_sigma / k0(); }
  double pitch() const { return L_D / grid_points; }
  double slm_radius() const { return R_slm < 0 ? numerical_aperture * z_s : R_slm; }
  double screen_radius() const { return R_s < 0 ? 0.45 * L_D : R_s; }
  double camera_half_side() const { return L_C < 0 ? numerical_aperture * z_s : L_C; }
  /// Pitch of the SLM-plane grid dual to the sample-type grid at k0.
  double slm_pitch() const { return lambda * z_s / L_D; }
  /// Pitch of the camera-plane grid dual to the sample-type grid at k.
  double camera_pitch(double k) const { return 2.0 * kPi * z_s / (k * L_D); }
  /// Diffraction-limited correlation length of the illumination at z = 0.
  double incoming_correlation_length() const {
    return lambda / (2.0 * numerical_aperture);
  }
  /// Width of the cross-Green peak, pi * z_s / (k * L_C).
  double outgoing_correlation_length(Modality m) const {
    return kPi * z_s / (return_wavenumber(m) * camera_half_side());
  }
  /// Isoplanatic patch size of the screen at the return wavenumber.
  double isoplanatic_patch(Modality m) const {
    return screen_coherence_length(screen_correlation_length,
                                   return_wavenumber(m), screen_sigma());
  }
};

/// Camera sampling: the sample-grid-dual points u with both coordinates in
/// [-L_C, L_C), trimmed to an even count per side for the image transforms.
struct CameraGrid {
  int first = 0;   // first index into the full dual grid, both axes
  int count = 0;   // points per side
  double pitch = 0.0;

  double coord(int local, int full_n) const {
    return (first + local - full_n / 2) * pitch;
  }
  Eigen::Index pixels() const { return static_cast<Eigen::Index>(count) * count; }
};

/// Camera grid for the return wavenumber k. Throws when the dual window of
/// the configured grid cannot cover the camera square.
CameraGrid camera_grid(const OpticsConfig& cfg, double k);

/// The random profile V behind the phase screen, sampled on the sample-type
/// grid. Shared between the illumination and return paths of one experiment.
RealField screen_profile(const OpticsConfig& cfg, std::uint64_t seed);

/// Phase screen exp(i k sigma V) masked by the screen pupil.
Field screen_phase(const OpticsConfig& cfg, const RealField& profile, double k);

/// Field at z = L produced by a fresh random SLM phase pattern: transform of
/// exp(i k0 L |v|^2 / 2 z_s^2) exp(i sigma_SLM V_SLM(v)) P_SLM(v), evaluated
/// on the sample-type grid. Throws when the SLM chirp is undersampled.
Field slm_illumination(const OpticsConfig& cfg, std::uint64_t seed);

/// Unitary paraxial propagator: angular-spectrum multiplication by
/// exp(i k distance) exp(-i distance |kappa|^2 / 2k). Rejects propagation
/// that would wrap the occupied band around more than half the window.
Field fresnel_propagate(const Field& f, double distance, double k);

/// Sample-plane illumination W(.,0): slm_illumination, screen at k0, Fresnel
/// propagation over L. The overload taking a prebuilt screen avoids
/// rebuilding the phase plate for every illumination of one experiment.
Field incoming_field(const OpticsConfig& cfg, const Field& screen, std::uint64_t seed);
Field incoming_field(const OpticsConfig& cfg, const RealField& profile, std::uint64_t seed);
Field incoming_field(const OpticsConfig& cfg, std::uint64_t seed);

/// Full Green's function at the camera plane from a scatterer at x_j:
/// transform of exp(i k |v - x_j|^2 / 2L) Screen_k(v), with the external
/// quadratic and constant phases. Returns the full dual-grid field.
Field green_full(const OpticsConfig& cfg, const Vec2& x_j, const RealField& profile, double k);

/// Random-geometrical-optics Green's function at one camera point:
/// exp(-i k u.x_j / z_s) exp(i k S(x_j + L u / z_s)) P(x_j + L u / z_s).
cd green_rgo(const OpticsConfig& cfg, const Vec2& u, const Vec2& x_j,
             const RealField& profile, double k);

/// green_rgo evaluated over every pixel of the camera grid, column-major.
VectorXcd green_rgo_camera(const OpticsConfig& cfg, const Vec2& x_j,
                           const RealField& profile, double k);

/// Column-major camera samples of a full dual-grid field.
VectorXcd camera_samples(const Field& camera_field, const CameraGrid& cam);

/// The two stationary-phase validity numbers (z_s / (k R_s^2),
/// sigma L / (l_0 R_s)); both must be small for the RGO regime.
std::pair<double, double> stationary_phase_validity(const OpticsConfig& cfg, double k);

}  // namespace bssim
