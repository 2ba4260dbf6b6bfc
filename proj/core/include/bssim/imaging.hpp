#pragma once

#include <string>
#include <vector>

#include "bssim/optics.hpp"
#include "bssim/scene.hpp"
#include "bssim/types.hpp"

namespace bssim {

/// Rank-truncated SVD of a reflection matrix.
struct TruncatedSvd {
  MatrixXcd u;  // N_p x N, orthonormal columns
  VectorXd singular_values;
  MatrixXcd v;  // N_r x N, orthonormal columns
  int retained = 0;
  double relative_threshold = 0.0;  // 0 when a fixed count was requested
};

/// Truncation policy: keep a fixed number of singular triplets, or every
/// triplet with sigma_k > threshold * sigma_1.
struct SvdPolicy {
  int fixed_count = -1;
  double relative_threshold = -1.0;
};

/// Top singular triplets by descending singular value. Throws when the
/// requested count exceeds the numerical rank.
TruncatedSvd svd_truncate(const MatrixXcd& r, const SvdPolicy& policy);

/// Complex image on the centered grid dual to the camera.
struct ComplexImage {
  ArrayXXcd values;
  double pitch = 0.0;

  int n() const { return static_cast<int>(values.rows()); }
  GridSpec grid() const { return {n(), pitch}; }
};

/// Non-negative image with peak metadata.
struct ImageGrid {
  ArrayXXd values;
  double pitch = 0.0;
  double window = 0.0;
  struct Peak {
    double x = 0.0, y = 0.0;
    double value = 0.0;
  };
  std::vector<Peak> peaks;

  int n() const { return static_cast<int>(values.rows()); }
  GridSpec grid() const { return {n(), pitch}; }
};

/// Back-propagation of a camera-pixel vector (column-major per CameraGrid):
/// image(y) = sum_u field(u) exp(i k y.u / z_s) q^2 on the dual y grid.
ComplexImage back_propagate(const VectorXcd& camera_field, const CameraGrid& cam,
                            double k, double z_s);

/// One DORT image: back-propagation of a singular column, normalized so the
/// largest magnitude is 1 (kept complex for the filtered average).
ComplexImage dort_image(const VectorXcd& u_column, const CameraGrid& cam, double k,
                        double z_s);

/// Binary filter mask {|g| > eta_f * max |g|} (strict inequality).
Eigen::ArrayXX<bool> filter_mask(const ArrayXXd& magnitude, double eta_f);

/// Combined DORT image J = | (1/N) sum_j J_j F(J_j) | with peak extraction.
ImageGrid dort_combined(const std::vector<ComplexImage>& images, double eta_f);

/// Cross-Green image g_ij: back-propagation of G_i conj(G_j) over the camera.
/// The random screen phases of the two columns cancel for nearby scatterers,
/// leaving a peak at x_i - x_j.
ComplexImage cross_green_image(const VectorXcd& g_i, const VectorXcd& g_j,
                               const CameraGrid& cam, double k, double z_s);

struct ImprovedDortOptions {
  double eta_f = 0.99;  // per-pair filter threshold
  double eta_i = 0.2;   // cross-term acceptance threshold
  bool subpixel_shifts = false;  // quadratic peak interpolation for merging
};

struct ImprovedDortResult {
  ImageGrid image;       // merged image, flipped to scene orientation:
                         // peaks at x_j - x_anchor for the visited anchors
  Eigen::MatrixXd beta;  // beta_ij = max |f_ij|
  std::vector<int> merge_order;
  std::vector<bool> low_confidence;  // per merged anchor: link below threshold
};

/// The improved DORT pipeline from estimated Green's columns: cross images
/// g_ij for j >= i, filtering, per-anchor images
/// I_i = sum_j |f_ij| h(beta_ij - eta_i beta_ii) / beta_ij with h(0) = 1,
/// and shift-and-add merging along strongest links.
ImprovedDortResult improved_dort(const MatrixXcd& green_columns, const CameraGrid& cam,
                                 double k, double z_s, const ImprovedDortOptions& opts);

struct LocalizationScore {
  int hits = 0;
  int misses = 0;
  int false_peaks = 0;
};

/// Greedy matching of image peaks (local maxima above half the global max)
/// to true positions after the best global shift; a hit is a truth matched
/// within tolerance_px image pixels.
LocalizationScore localization_score(const ImageGrid& image, const std::vector<Vec2>& truth,
                                     double tolerance_px);

/// 16-bit binary PGM (P5), big-endian samples, values scaled to the maximum.
void save_pgm16(const ImageGrid& image, const std::string& path);

/// Peak list CSV with header "x,y,value".
void save_peaks_csv(const ImageGrid& image, const std::string& path);

}  // namespace bssim
