#pragma once

#include <vector>

#include "bssim/types.hpp"

namespace bssim {

/// Empirical expectation: plain average over the sample axis.
/// Throws std::invalid_argument on an empty sample set.
cd empirical_expectation(const VectorXcd& samples);

/// Data with identity empirical covariance, together with the linear map
/// that produced it: data = map * (raw - row_mean).
struct WhitenedData {
  MatrixXcd data;      // N x N_sa, (1/N_sa) * data * data^* = I
  MatrixXcd map;       // N x N_raw
  VectorXcd row_mean;  // empirical row means of the raw input
  SampleAxis axis = SampleAxis::Realizations;

  Eigen::Index dim() const { return data.rows(); }
  Eigen::Index samples() const { return data.cols(); }
};

/// Pre-whitening of the top subspace by singular value. Rows are
/// mean-centered first; requested_dim < 0 keeps every component. Throws when
/// the numerical rank of the data is below the requested dimension.
WhitenedData whiten(const MatrixXcd& raw, Eigen::Index requested_dim = -1,
                    SampleAxis axis = SampleAxis::Realizations);

/// Normalized kurtosis of y = w^* x. The stored fourth moment and
/// pseudo-variance are normalized by the empirical second moment, so
/// value = fourth_moment - 2 - |pseudo_variance|^2 holds exactly.
struct KurtosisValue {
  double value = 0.0;
  double fourth_moment = 0.0;
  cd pseudo_variance{0.0, 0.0};
};

/// Kurtosis K(w) = E|y|^4 - 2 - |E y^2|^2 for whitened data and unit w
/// (evaluated in the scale-invariant normalized form). Throws when
/// | ||w|| - 1 | > 1e-10.
KurtosisValue kurtosis(const VectorXcd& w, const WhitenedData& x);

/// Pairwise second moments of a jointly Gaussian complex vector:
/// cov(i,j) = E{z_i conj(z_j)} and pcov(i,j) = E{z_i z_j}.
struct GaussianSecondMoments {
  MatrixXcd cov;
  MatrixXcd pcov;
};

/// One factor of a higher-order moment pattern: z_index or its conjugate.
struct MomentFactor {
  int index = 0;
  bool conjugated = false;
};

/// Isserlis (Wick) expansion: E{prod of pattern} as the sum over all perfect
/// pairings of products of second moments, honoring conjugation flags.
/// Supports even orders up to 8; throws on odd order.
cd isserlis_moment(const GaussianSecondMoments& m, const std::vector<MomentFactor>& pattern);

}  // namespace bssim
