#include "bssim/separability.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bssim/ica.hpp"
#include "bssim/moments.hpp"
#include "bssim/random_field.hpp"
#include "bssim/rng.hpp"

namespace bssim {

double sphere_distance(const VectorXcd& x, const VectorXcd& y) {
  if (std::abs(x.norm() - 1.0) > 1e-8 || std::abs(y.norm() - 1.0) > 1e-8) {
    throw std::invalid_argument("sphere_distance: inputs must be unit vectors");
  }
  const double re = x.dot(y).real();  // Re (x, y) with (x, y) = x^* y
  return std::acos(std::clamp(re, -1.0, 1.0));
}

DependenceBreakdown dependence_measure(const SampleMatrix& sources, int distinguished) {
  const Eigen::Index n = sources.components();
  const Eigen::Index n_sa = sources.samples();
  if (n < 2) throw std::invalid_argument("dependence_measure: needs at least 2 sources");
  if (distinguished < 0 || distinguished >= n) {
    throw std::invalid_argument("dependence_measure: distinguished index out of range");
  }
  const MatrixXcd& s = sources.data;
  const double inv = 1.0 / static_cast<double>(n_sa);

  // Per-row derived samples.
  Eigen::MatrixXd abs2 = s.cwiseAbs2().real();
  MatrixXcd sq = s.cwiseProduct(s);
  const int d = distinguished;

  Eigen::RowVectorXd a1_abs2 = abs2.row(d);
  Eigen::RowVectorXcd s1c2 = sq.row(d).conjugate();

  const cd e_s1sq = sq.row(d).sum() * inv;
  Eigen::VectorXd e_abs2(n);
  Eigen::VectorXcd e_sq(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    e_abs2(i) = abs2.row(i).sum() * inv;
    e_sq(i) = sq.row(i).sum() * inv;
  }

  DependenceBreakdown out;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j == d) continue;
    const double e_jj11 = (abs2.row(j).array() * a1_abs2.array()).sum() * inv;
    const double a = std::abs(e_jj11 - e_abs2(j) * e_abs2(d));
    const cd e_j2_1c2 = (sq.row(j).array() * s1c2.array()).sum() * inv;
    const double b = std::abs(e_j2_1c2 - e_sq(j) * std::conj(e_s1sq));
    if (a + b > out.term1) {
      out.term1 = a + b;
      out.intensity_cov = a;
      out.pair_pseudo_cov = b;
      out.argmax_j1 = static_cast<int>(j);
    }
  }

  const MatrixXcd corr = s * s.adjoint() * inv;  // E{s s^*}
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i == d) continue;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == d || j == i) continue;
      const cd e_ji_1c2 =
          (s.row(j).array() * s.row(i).array() * s1c2.array()).sum() * inv;
      const cd e_ji = (s.row(j).array() * s.row(i).array()).sum() * inv;
      const double c = std::abs(e_ji_1c2 - e_ji * std::conj(e_s1sq));
      const cd e_jic_11 =
          (s.row(j).array() * s.row(i).conjugate().array() * a1_abs2.array().cast<cd>())
              .sum() *
          inv;
      const cd e_j1 = (s.row(j).array() * s.row(d).array()).sum() * inv;
      const cd e_ic1c = (s.row(i).conjugate().array() * s.row(d).conjugate().array()).sum() * inv;
      const double m = std::abs(e_jic_11 - e_j1 * e_ic1c);
      if (c + m > out.term2) {
        out.term2 = c + m;
        out.triple_pseudo = c;
        out.triple_mixed = m;
        out.argmax_i2 = static_cast<int>(i);
        out.argmax_j2 = static_cast<int>(j);
      }
    }
  }

  // Matrix norm per the notation in use: max-abs entry.
  out.term3 = (corr - MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
  out.corr_deviation = out.term3;
  return out;
}

double noise_measure(const SampleMatrix& noise, bool literal_unconjugated) {
  const Eigen::Index n = noise.components();
  if (n == 0 || noise.samples() == 0) return 0.0;
  const double inv = 1.0 / static_cast<double>(noise.samples());
  double worst = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    double value;
    if (literal_unconjugated) {
      cd m2(0, 0), m4(0, 0);
      for (Eigen::Index t = 0; t < noise.samples(); ++t) {
        const cd z = noise.data(j, t);
        m2 += z * z;
        m4 += z * z * z * z;
      }
      value = std::abs(m2 * inv) + std::abs(m4 * inv);
    } else {
      double m2 = 0, m4 = 0;
      for (Eigen::Index t = 0; t < noise.samples(); ++t) {
        const double a2 = std::norm(noise.data(j, t));
        m2 += a2;
        m4 += a2 * a2;
      }
      value = m2 * inv + m4 * inv;
    }
    worst = std::max(worst, value);
  }
  return worst;
}

double kurtosis_gap(const Eigen::RowVectorXcd& source) {
  const double inv = 1.0 / static_cast<double>(source.size());
  double m2 = 0, m4 = 0;
  cd p(0, 0);
  for (Eigen::Index t = 0; t < source.size(); ++t) {
    const double a2 = std::norm(source(t));
    m2 += a2;
    m4 += a2 * a2;
    p += source(t) * source(t);
  }
  m2 *= inv;
  m4 *= inv;
  p *= inv;
  return std::abs(m4 / (m2 * m2) - 2.0 - std::norm(p / m2));
}

ResonanceReport rgo_separability_check(const Scene& scene, const OpticsConfig& cfg,
                                       Modality modality, int distinguished) {
  ResonanceReport report;
  report.l_c_out = cfg.outgoing_correlation_length(modality);
  report.distinguished = distinguished;
  const int n = scene.count();
  const double lc = report.l_c_out;

  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if ((scene.positions[i] - scene.positions[j]).norm() < lc) {
        report.close_pairs.emplace_back(i, j);
      }
    }
  }
  report.distinguished_near_origin = scene.positions[distinguished].norm() < lc;
  for (int i = 0; i < n; ++i) {
    if (i == distinguished) continue;
    for (int j = 0; j < n; ++j) {
      if (j == distinguished || j == i) continue;
      const Vec2 r = scene.positions[j] + scene.positions[i] -
                     2.0 * scene.positions[distinguished];
      if (r.norm() < lc) {
        report.resonant_triples.push_back({i, j, distinguished});
      }
    }
  }
  return report;
}

bool rgo_scene_clean(const Scene& scene, const OpticsConfig& cfg, Modality modality,
                     double pair_margin) {
  const double lc = cfg.outgoing_correlation_length(modality);
  const int n = scene.count();
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if ((scene.positions[i] - scene.positions[j]).norm() < pair_margin * lc) return false;
    }
  }
  for (int d = 0; d < n; ++d) {
    ResonanceReport r = rgo_separability_check(scene, cfg, modality, d);
    if (r.distinguished_near_origin || !r.resonant_triples.empty()) return false;
  }
  return true;
}

namespace {

/// Unimodular row with i.i.d. uniformly spread phases; kurtosis exactly -1
/// under true expectations.
Eigen::RowVectorXcd spread_phase_row(Eigen::Index n, Rng& rng) {
  Eigen::RowVectorXcd row(n);
  for (Eigen::Index t = 0; t < n; ++t) row(t) = std::polar(1.0, 2.0 * kPi * rng.uniform());
  return row;
}

void normalize_rows(MatrixXcd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double m2 = m.row(i).squaredNorm() / static_cast<double>(m.cols());
    m.row(i) /= std::sqrt(m2);
  }
}

SweepRow run_sweep_point(double rho, double noise_sigma, bool noise_point,
                         Eigen::Index n_samples, std::uint64_t seed) {
  Rng rng(seed);
  MatrixXcd s(2, n_samples);
  s.row(0) = spread_phase_row(n_samples, rng);
  Eigen::RowVectorXcd z = spread_phase_row(n_samples, rng);
  s.row(1) = rho * s.row(0) + std::sqrt(1.0 - rho * rho) * z;
  normalize_rows(s);

  SweepRow row;
  row.parameter = noise_point ? noise_sigma : rho;
  row.noise_point = noise_point;
  row.seed = seed;
  row.kurtosis_gap = kurtosis_gap(s.row(0));
  if (row.kurtosis_gap < 0.1) {
    throw std::runtime_error("theorem_scaling_experiment: kurtosis gap below 0.1");
  }

  // Fixed well-conditioned mixing.
  MatrixXcd a(2, 2);
  a << cd(1.0, 0.2), cd(0.45, -0.3), cd(-0.35, 0.4), cd(0.9, -0.1);
  MatrixXcd x = a * s;
  SampleMatrix sm;
  sm.data = s;
  const DependenceBreakdown dep = dependence_measure(sm, 0);
  row.m_s = dep.total();
  row.term1 = dep.term1;
  row.term2 = dep.term2;
  row.term3 = dep.term3;

  MatrixXcd raw = x;
  SampleMatrix noise;
  if (noise_sigma > 0.0) {
    noise = complex_circular_noise(2, n_samples, noise_sigma, split_seed(seed, 0x77));
    raw += noise.data;
  }

  WhitenedData white = whiten(raw, 2);
  if (noise_sigma > 0.0) {
    SampleMatrix mapped;
    mapped.data = white.map * noise.data;
    row.m_n = noise_measure(mapped);
  }

  // Theoretical optima in whitened coordinates: the columns of (A~^-1)^*.
  MatrixXcd a_tilde = white.map * a;
  MatrixXcd targets = a_tilde.inverse().adjoint();

  ExtractionOptions opts;
  opts.sign = KurtosisSign::Negative;
  opts.restarts = 3;
  opts.seed = split_seed(seed, 0x3C);
  ExtractionResult ext = extract_one(white, opts);
  row.ok = ext.sign_satisfied;

  // Permutation degeneracy: compare against the nearest target column, with
  // the phase aligned so that (w_e, w_0) = |(w~_e, w_0)|.
  double best = kPi;
  for (Eigen::Index c = 0; c < targets.cols(); ++c) {
    VectorXcd w0 = targets.col(c).normalized();
    const double overlap = std::min(1.0, std::abs(ext.w.dot(w0)));
    best = std::min(best, std::acos(overlap));
  }
  row.dist = best;
  return row;
}

}  // namespace

TheoremSweepResult theorem_scaling_experiment(const std::vector<double>& correlation_sweep,
                                              const std::vector<double>& noise_sweep,
                                              int seeds_per_point,
                                              Eigen::Index n_samples,
                                              std::uint64_t seed) {
  TheoremSweepResult out;
  std::uint64_t point = 0;
  std::vector<double> log_ms_medians, log_dist_medians;

  auto run_point = [&](double rho, double sigma, bool noise_point) {
    std::vector<double> dists, totals;
    for (int r = 0; r < seeds_per_point; ++r) {
      SweepRow row = run_sweep_point(rho, sigma, noise_point, n_samples,
                                     split_seed(seed, ++point * 1000 + r));
      out.rows.push_back(row);
      if (row.ok) {
        dists.push_back(row.dist);
        totals.push_back(row.m_s + row.m_n);
      }
    }
    if (dists.size() >= 3) {
      auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
      };
      log_ms_medians.push_back(std::log(median(totals)));
      log_dist_medians.push_back(std::log(median(dists)));
    }
  };

  for (double rho : correlation_sweep) run_point(rho, 0.0, false);
  for (double sigma : noise_sweep) run_point(0.0, sigma, true);

  // Log-log slope of median dist against median (m_s + m_n).
  const size_t m = log_ms_medians.size();
  if (m >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < m; ++i) {
      sx += log_ms_medians[i];
      sy += log_dist_medians[i];
      sxx += log_ms_medians[i] * log_ms_medians[i];
      sxy += log_ms_medians[i] * log_dist_medians[i];
    }
    out.fitted_exponent = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  }
  return out;
}

}  // namespace bssim
