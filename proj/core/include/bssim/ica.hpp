#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "bssim/moments.hpp"
#include "bssim/types.hpp"

namespace bssim {

/// Sign constraint on the kurtosis of the extracted source: a negative
/// (sub-Gaussian) source is a minimizer of the contrast, a positive one a
/// maximizer; Free picks the extremum of largest magnitude.
enum class KurtosisSign { Free, Negative, Positive };

struct ExtractionOptions {
  KurtosisSign sign = KurtosisSign::Free;
  int max_iterations = 200;
  double angle_tolerance = 1e-6;  // radians
  double init_scale = 0.05;       // identity-perturbation entries in [-scale, scale]
  int restarts = 5;
  VectorXcd init_vector;          // when set, replaces the perturbed-basis init
  std::uint64_t seed = 0;
};

/// Scale-invariant normalized contrast
/// K(w) = (E|y|^4 - 2(E|y|^2)^2 - |E y^2|^2) / (E|y|^2)^2 with y = w^* x.
double contrast_value(const VectorXcd& w, const MatrixXcd& x);

/// Wirtinger gradient of the contrast with respect to conj(w). Throws on
/// empty data.
VectorXcd contrast_gradient(const VectorXcd& w, const MatrixXcd& x);

struct LineSearchResult {
  double step = 0.0;
  bool stagnated = false;              // no real root improved on mu = 0
  std::array<double, 5> polynomial{};  // d/dmu contrast numerator, degree <= 4
};

/// Exact step selection: the contrast along w + mu*g is rational in real mu,
/// its derivative numerator a degree-4 polynomial whose real roots are the
/// candidate steps; picks the best root for the sign target.
LineSearchResult exact_line_search(const VectorXcd& w, const VectorXcd& g,
                                   const MatrixXcd& x, KurtosisSign sign);

struct ExtractionResult {
  VectorXcd w;                     // unit norm; largest-modulus entry real positive
  Eigen::RowVectorXcd source;      // unit empirical second moment
  double kurtosis = 0.0;
  int iterations = 0;
  bool converged = false;
  bool sign_satisfied = true;
};

/// One deflation round: gradient + exact line search + renormalization until
/// the angular update falls below tolerance; best restart wins.
ExtractionResult extract_one(const WhitenedData& x, const ExtractionOptions& opts);

/// Least-squares removal of a source: returns h = E{x s*} / E{|s|^2}.
VectorXcd deflation_coefficient(const MatrixXcd& x, const Eigen::RowVectorXcd& source);

/// x - h s with the least-squares h; the residual satisfies E{x' s*} = 0.
MatrixXcd deflate(const MatrixXcd& x, const Eigen::RowVectorXcd& source);

struct SeparationResult {
  MatrixXcd extraction_vectors;      // columns w_i, in the input coordinates
  MatrixXcd estimated_sources;       // N x N_sa
  MatrixXcd deflation_coefficients;  // columns h_i, in the input coordinates
  VectorXd kurtosis;
  std::vector<int> iterations;
  std::vector<bool> converged;
  std::vector<bool> sign_satisfied;
  int extracted = 0;                 // rounds completed; partial on failure
};

/// Full separation: n rounds of extract_one + deflate, re-whitening between
/// rounds, every quantity mapped back to the input coordinates.
SeparationResult separate(const WhitenedData& x, int n_sources, ExtractionOptions opts);

/// Optimal one-to-one matching between estimated and true sources by total
/// correlation, with sphere distances after per-pair phase alignment.
struct AlignmentReport {
  std::vector<int> assignment;  // estimated row i matches truth row assignment[i]
  VectorXd distances;           // arccos |<s_est, s_true>| per estimated row
  VectorXd correlations;        // |<s_est, s_true>| / (|s_est| |s_true|)
};

AlignmentReport align_to_truth(const MatrixXcd& estimated, const MatrixXcd& truth);

/// Hungarian algorithm: min-cost perfect matching of a square cost matrix;
/// returns the column assigned to each row.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

}  // namespace bssim
