#pragma once

#include <cstdint>

#include "bssim/types.hpp"

namespace bssim {

/// Stationary Gaussian random field specification. The synthesized field has
/// Gaussian covariance C(r) = exp(-|r|^2 / correlation_length^2) and is
/// renormalized to exactly zero empirical mean and unit empirical variance.
struct RandomFieldSpec {
  double correlation_length = 1.0;  // lambda
  double side_length = 1.0;         // L_D, lambda
  int points_per_side = 0;
  std::uint64_t seed = 0;

  double pitch() const { return side_length / points_per_side; }
};

/// Spectral synthesis: white complex Gaussian noise filtered with the square
/// root of the spectrum of C, inverse transformed, real part kept. O(n log n),
/// deterministic given the seed.
/// Throws std::invalid_argument when the grid does not resolve the field
/// (correlation_length <= 2 * pitch).
RealField gaussian_field(const RandomFieldSpec& spec);

/// Phase screen exp(i * k * sigma * v(x)) restricted to the pupil disk of
/// radius support_radius: unit modulus inside the disk, zero outside.
Field phase_screen(const RealField& v, double k, double sigma, double support_radius);

/// Covariance scale of the field behind a phase screen of nominal correlation
/// length l0. The scale is 2*sqrt(2)*l0, which makes the screen mutual
/// coherence E{e^{ik(S(x)-S(y))}} = exp(-|x-y|^2 / l_c^2) in the quadratic
/// regime with l_c = 2*sqrt(2)*l0 / (k*sigma).
inline double screen_covariance_scale(double l0) { return 2.8284271247461903 * l0; }

/// Coherence length predicted for a screen of nominal correlation length l0
/// and fluctuation strength sigma at wavenumber k.
inline double screen_coherence_length(double l0, double k, double sigma) {
  return 2.8284271247461903 * l0 / (k * sigma);
}

/// Monte-Carlo estimate of the screen coherence length: builds `realizations`
/// screens of nominal correlation length l0 on the given grid, accumulates
/// the empirical mutual coherence over axis-aligned lags r <= l0, and fits
/// the quadratic decay -log E = (r/l_c)^2.
double measure_screen_coherence_length(double l0, double k, double sigma,
                                       const GridSpec& grid, int realizations,
                                       std::uint64_t seed);

/// I.i.d. circular complex Gaussian noise with per-entry E{|n|^2} = sigma_n^2.
SampleMatrix complex_circular_noise(Eigen::Index rows, Eigen::Index cols,
                                    double sigma_n, std::uint64_t seed);

}  // namespace bssim
