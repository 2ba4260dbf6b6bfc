#include "bssim/moments.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace bssim {

cd empirical_expectation(const VectorXcd& samples) {
  if (samples.size() == 0) {
    throw std::invalid_argument("empirical_expectation: empty sample set");
  }
  return samples.mean();
}

WhitenedData whiten(const MatrixXcd& raw, Eigen::Index requested_dim, SampleAxis axis) {
  const Eigen::Index n = raw.rows();
  const Eigen::Index n_sa = raw.cols();
  if (n_sa == 0) throw std::invalid_argument("whiten: empty sample set");
  if (requested_dim < 0) requested_dim = n;
  if (requested_dim > n) throw std::invalid_argument("whiten: requested dimension exceeds rows");

  WhitenedData out;
  out.axis = axis;
  out.row_mean = raw.rowwise().mean();
  MatrixXcd centered = raw.colwise() - out.row_mean;

  MatrixXcd cov = centered * centered.adjoint() / static_cast<double>(n_sa);
  Eigen::SelfAdjointEigenSolver<MatrixXcd> eig(cov);
  if (eig.info() != Eigen::Success) throw std::runtime_error("whiten: eigensolver failed");

  // Eigenvalues ascend; keep the top requested_dim, index order breaks ties.
  const VectorXd& lam = eig.eigenvalues();
  const double lam_max = lam(n - 1);
  const double rank_tol = std::max(lam_max, 0.0) * 1e-12 + 1e-300;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (lam(i) > rank_tol) ++rank;
  }
  if (rank < requested_dim) {
    throw std::invalid_argument("whiten: numerical rank " + std::to_string(rank) +
                                " below requested dimension " +
                                std::to_string(requested_dim));
  }

  out.map.resize(requested_dim, n);
  for (Eigen::Index k = 0; k < requested_dim; ++k) {
    const Eigen::Index src = n - 1 - k;  // descending order
    out.map.row(k) = eig.eigenvectors().col(src).adjoint() / std::sqrt(lam(src));
  }
  out.data = out.map * centered;
  return out;
}

KurtosisValue kurtosis(const VectorXcd& w, const WhitenedData& x) {
  const double norm = w.norm();
  if (std::abs(norm - 1.0) > 1e-10) {
    throw std::invalid_argument("kurtosis: w must have unit norm");
  }
  Eigen::RowVectorXcd y = w.adjoint() * x.data;
  const double n_sa = static_cast<double>(y.size());
  double m2 = 0.0, m4 = 0.0;
  cd p(0.0, 0.0);
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    const double a2 = std::norm(y(j));
    m2 += a2;
    m4 += a2 * a2;
    p += y(j) * y(j);
  }
  m2 /= n_sa;
  m4 /= n_sa;
  p /= n_sa;

  KurtosisValue out;
  out.fourth_moment = m4 / (m2 * m2);
  out.pseudo_variance = p / m2;
  out.value = out.fourth_moment - 2.0 - std::norm(out.pseudo_variance);
  return out;
}

namespace {

cd pair_moment(const GaussianSecondMoments& m, const MomentFactor& a, const MomentFactor& b) {
  if (!a.conjugated && !b.conjugated) return m.pcov(a.index, b.index);
  if (a.conjugated && b.conjugated) return std::conj(m.pcov(a.index, b.index));
  if (!a.conjugated && b.conjugated) return m.cov(a.index, b.index);
  return std::conj(m.cov(a.index, b.index));  // E{conj(z_a) z_b}
}

cd sum_pairings(const GaussianSecondMoments& m, std::vector<MomentFactor>& slots) {
  if (slots.empty()) return cd(1.0, 0.0);
  MomentFactor first = slots.front();
  cd total(0.0, 0.0);
  for (size_t k = 1; k < slots.size(); ++k) {
    std::vector<MomentFactor> rest;
    rest.reserve(slots.size() - 2);
    for (size_t j = 1; j < slots.size(); ++j) {
      if (j != k) rest.push_back(slots[j]);
    }
    total += pair_moment(m, first, slots[k]) * sum_pairings(m, rest);
  }
  return total;
}

}  // namespace

cd isserlis_moment(const GaussianSecondMoments& m, const std::vector<MomentFactor>& pattern) {
  if (pattern.size() % 2 != 0) {
    throw std::invalid_argument("isserlis_moment: pattern must have even order");
  }
  if (pattern.size() > 8) {
    throw std::invalid_argument("isserlis_moment: order above 8 not supported");
  }
  std::vector<MomentFactor> slots = pattern;
  return sum_pairings(m, slots);
}

}  // namespace bssim
