#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "bssim/scene.hpp"
#include "bssim/types.hpp"

namespace bssim {

/// Angular distance on the complex unit sphere, arccos(Re (x, y)), clamped
/// to [0, pi]. Throws on non-unit inputs.
double sphere_distance(const VectorXcd& x, const VectorXcd& y);

/// Term-wise breakdown of the source-dependence constant. Every contribution
/// is >= 0 and vanishes for independent sources under true expectations.
struct DependenceBreakdown {
  // Displayed terms: max over j != 1 of (intensity_cov + pair_pseudo_cov),
  // max over i,j != 1, i != j of (triple_pseudo + triple_mixed), and the
  // max-abs-entry deviation of the correlation matrix from identity.
  double term1 = 0.0;
  double term2 = 0.0;
  double term3 = 0.0;
  // The five contributions, evaluated at the maximizing indices.
  double intensity_cov = 0.0;
  double pair_pseudo_cov = 0.0;
  double triple_pseudo = 0.0;
  double triple_mixed = 0.0;
  double corr_deviation = 0.0;
  int argmax_j1 = -1;
  int argmax_i2 = -1;
  int argmax_j2 = -1;

  double total() const { return term1 + term2 + term3; }
};

/// Empirical dependence measure of the sources with respect to the
/// distinguished row. Rows must have unit empirical second moment. Throws
/// with fewer than two sources.
DependenceBreakdown dependence_measure(const SampleMatrix& sources, int distinguished = 0);

/// Noise magnitude measure max_j E{|n_j|^2} + E{|n_j|^4}. The literal
/// unconjugated reading max_j |E{n_j^2}| + |E{n_j^4}| (which vanishes for
/// circular noise) is available behind the flag for comparison.
double noise_measure(const SampleMatrix& noise, bool literal_unconjugated = false);

/// Gap |E|s|^4 - 2 - |E s^2|^2| of one source row; the scaling experiment
/// requires it bounded away from zero.
double kurtosis_gap(const Eigen::RowVectorXcd& source);

/// RGO separability flags for a scene: pairs closer than the outgoing
/// correlation length, the distinguished scatterer too close to the origin,
/// and 3-scatterer resonances |x_i + x_j - 2 x_1| < l_c_out.
struct ResonanceReport {
  double l_c_out = 0.0;
  int distinguished = 0;
  std::vector<std::pair<int, int>> close_pairs;
  bool distinguished_near_origin = false;
  std::vector<std::array<int, 3>> resonant_triples;  // (i, j, distinguished)

  bool clean() const {
    return close_pairs.empty() && !distinguished_near_origin && resonant_triples.empty();
  }
};

ResonanceReport rgo_separability_check(const Scene& scene, const OpticsConfig& cfg,
                                       Modality modality, int distinguished = 0);

/// True when no choice of distinguished scatterer raises any flag, with the
/// pair threshold scaled by pair_margin.
bool rgo_scene_clean(const Scene& scene, const OpticsConfig& cfg, Modality modality,
                     double pair_margin = 1.0);

/// One row of the error-scaling experiment.
struct SweepRow {
  double parameter = 0.0;   // correlation rho or noise sigma
  bool noise_point = false; // false: correlation sweep, true: noise sweep
  std::uint64_t seed = 0;
  double m_s = 0.0;
  double term1 = 0.0, term2 = 0.0, term3 = 0.0;  // dependence contributions
  double m_n = 0.0;
  double dist = 0.0;        // sphere distance to the nearest target column
  double kurtosis_gap = 0.0;
  bool ok = true;           // extraction succeeded
};

struct TheoremSweepResult {
  std::vector<SweepRow> rows;
  double fitted_exponent = 0.0;  // log-log slope of median dist vs median m_s + m_n
};

/// Builds x = A s + n with controlled source correlation
/// (s2 = rho s1 + sqrt(1-rho^2) z over unimodular spread-phase sources),
/// extracts one source, phase-aligns it to the nearest theoretical optimum,
/// and records (m_s + m_n, dist) per sweep point and seed. Throws when the
/// kurtosis-gap hypothesis falls below 0.1.
TheoremSweepResult theorem_scaling_experiment(const std::vector<double>& correlation_sweep,
                                              const std::vector<double>& noise_sweep,
                                              int seeds_per_point,
                                              Eigen::Index n_samples,
                                              std::uint64_t seed);

}  // namespace bssim
