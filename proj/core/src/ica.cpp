#include "bssim/ica.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bssim/rng.hpp"

namespace bssim {

namespace {

struct ContrastMoments {
  double m2 = 0.0;
  double m4 = 0.0;
  cd pseudo{0.0, 0.0};
};

ContrastMoments ray_moments(const Eigen::RowVectorXcd& y) {
  ContrastMoments m;
  const double n = static_cast<double>(y.size());
  for (Eigen::Index s = 0; s < y.size(); ++s) {
    const double a2 = std::norm(y(s));
    m.m2 += a2;
    m.m4 += a2 * a2;
    m.pseudo += y(s) * y(s);
  }
  m.m2 /= n;
  m.m4 /= n;
  m.pseudo /= n;
  return m;
}

double contrast_from_moments(const ContrastMoments& m) {
  return (m.m4 - 2.0 * m.m2 * m.m2 - std::norm(m.pseudo)) / (m.m2 * m.m2);
}

/// Convolution of polynomial coefficient arrays (index = power).
std::vector<double> poly_mul(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (size_t i = 0; i < a.size(); ++i) {
    for (size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

double poly_eval(const std::vector<double>& p, double x) {
  double v = 0.0;
  for (size_t i = p.size(); i-- > 0;) v = v * x + p[i];
  return v;
}

std::vector<double> real_roots(std::vector<double> p) {
  double maxc = 0.0;
  for (double c : p) maxc = std::max(maxc, std::abs(c));
  if (maxc == 0.0) return {};
  size_t deg = p.size() - 1;
  while (deg > 0 && std::abs(p[deg]) < 1e-12 * maxc) --deg;
  if (deg == 0) return {};
  if (deg == 1) return {-p[0] / p[1]};

  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(deg, deg);
  for (size_t i = 0; i < deg; ++i) companion(i, deg - 1) = -p[i] / p[deg];
  for (size_t i = 1; i < deg; ++i) companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> eig(companion, /*computeEigenvectors=*/false);
  std::vector<double> roots;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
    const cd z = eig.eigenvalues()(i);
    if (std::abs(z.imag()) <= 1e-7 * (1.0 + std::abs(z.real()))) {
      roots.push_back(z.real());
    }
  }
  return roots;
}

bool better(double candidate, double incumbent, KurtosisSign sign) {
  switch (sign) {
    case KurtosisSign::Negative:
      return candidate < incumbent;
    case KurtosisSign::Positive:
      return candidate > incumbent;
    case KurtosisSign::Free:
      return std::abs(candidate) > std::abs(incumbent);
  }
  return false;
}

bool sign_ok(double kurtosis, KurtosisSign sign) {
  if (sign == KurtosisSign::Negative) return kurtosis < 0.0;
  if (sign == KurtosisSign::Positive) return kurtosis > 0.0;
  return true;
}

}  // namespace

double contrast_value(const VectorXcd& w, const MatrixXcd& x) {
  Eigen::RowVectorXcd y = w.adjoint() * x;
  return contrast_from_moments(ray_moments(y));
}

VectorXcd contrast_gradient(const VectorXcd& w, const MatrixXcd& x) {
  const Eigen::Index n_sa = x.cols();
  if (n_sa == 0) throw std::invalid_argument("contrast_gradient: empty data");
  Eigen::RowVectorXcd y = w.adjoint() * x;
  const ContrastMoments m = ray_moments(y);
  const double inv_n = 1.0 / static_cast<double>(n_sa);

  VectorXcd wt1(n_sa), wt2(n_sa), wt3(n_sa);
  for (Eigen::Index s = 0; s < n_sa; ++s) {
    const cd ys = y(s);
    wt1(s) = std::conj(ys) * std::norm(ys);
    wt2(s) = std::conj(ys);
    wt3(s) = ys;
  }
  VectorXcd v1 = x * wt1 * inv_n;  // E{x conj(y) |y|^2}
  VectorXcd v2 = x * wt2 * inv_n;  // E{x conj(y)}
  VectorXcd v3 = x * wt3 * inv_n;  // E{x y}

  const double k = contrast_from_moments(m);
  const double m2sq = m.m2 * m.m2;
  return (2.0 * v1 - 4.0 * m.m2 * v2 - 2.0 * std::conj(m.pseudo) * v3) / m2sq -
         (2.0 * k / m.m2) * v2;
}

LineSearchResult exact_line_search(const VectorXcd& w, const VectorXcd& g,
                                   const MatrixXcd& x, KurtosisSign sign) {
  LineSearchResult out;
  if (g.norm() < 1e-300) {
    out.stagnated = true;
    return out;
  }
  Eigen::RowVectorXcd a = w.adjoint() * x;
  Eigen::RowVectorXcd b = g.adjoint() * x;
  const double n = static_cast<double>(x.cols());

  double a0 = 0, a1 = 0, a2 = 0;           // second moment along the ray
  cd p0(0, 0), p1(0, 0), p2(0, 0);         // pseudo-moment along the ray
  double c0 = 0, c1 = 0, c2 = 0, c3 = 0, c4 = 0;  // fourth moment along the ray
  for (Eigen::Index s = 0; s < x.cols(); ++s) {
    const cd as = a(s), bs = b(s);
    const double aa = std::norm(as), bb = std::norm(bs);
    const double r = (as * std::conj(bs)).real();
    a0 += aa;
    a1 += 2.0 * r;
    a2 += bb;
    p0 += as * as;
    p1 += 2.0 * as * bs;
    p2 += bs * bs;
    c0 += aa * aa;
    c1 += 4.0 * aa * r;
    c2 += 4.0 * r * r + 2.0 * aa * bb;
    c3 += 4.0 * r * bb;
    c4 += bb * bb;
  }
  a0 /= n; a1 /= n; a2 /= n;
  p0 /= n; p1 /= n; p2 /= n;
  c0 /= n; c1 /= n; c2 /= n; c3 /= n; c4 /= n;

  const std::vector<double> m2{a0, a1, a2};
  // |p(mu)|^2 and m2(mu)^2 coefficient arrays.
  std::vector<double> pp(5, 0.0);
  const cd ps[3] = {p0, p1, p2};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) pp[i + j] += (ps[i] * std::conj(ps[j])).real();
  }
  std::vector<double> m2sq = poly_mul(m2, m2);
  std::vector<double> num{c0 - 2.0 * m2sq[0] - pp[0], c1 - 2.0 * m2sq[1] - pp[1],
                          c2 - 2.0 * m2sq[2] - pp[2], c3 - 2.0 * m2sq[3] - pp[3],
                          c4 - 2.0 * m2sq[4] - pp[4]};

  std::vector<double> dnum{num[1], 2.0 * num[2], 3.0 * num[3], 4.0 * num[4]};
  std::vector<double> dm2{a1, 2.0 * a2};
  // Derivative numerator of num/m2^2; the degree-5 terms cancel exactly.
  std::vector<double> lhs = poly_mul(dnum, m2);
  std::vector<double> rhs = poly_mul(num, dm2);
  std::vector<double> deriv(5, 0.0);
  for (int i = 0; i < 5; ++i) deriv[i] = lhs[i] - 2.0 * rhs[i];
  for (int i = 0; i < 5; ++i) out.polynomial[i] = deriv[i];

  auto contrast_at = [&](double mu) {
    const double m2v = poly_eval(m2, mu);
    return poly_eval(num, mu) / (m2v * m2v);
  };

  const double k0 = contrast_at(0.0);
  double best_mu = 0.0;
  double best_k = k0;
  for (double mu : real_roots(deriv)) {
    const double kv = contrast_at(mu);
    if (better(kv, best_k, sign)) {
      best_k = kv;
      best_mu = mu;
    }
  }
  out.step = best_mu;
  out.stagnated = (best_mu == 0.0);
  return out;
}

ExtractionResult extract_one(const WhitenedData& x, const ExtractionOptions& opts) {
  const Eigen::Index dim = x.dim();
  if (dim == 0) throw std::invalid_argument("extract_one: empty data");

  ExtractionResult best;
  bool have_best = false;

  const int restarts = std::max(1, opts.restarts);
  for (int r = 0; r < restarts; ++r) {
    // Restart r starts from the r-th canonical basis vector (or the user
    // vector) plus a small complex perturbation; restart 0 of a user vector
    // is taken as given.
    VectorXcd w = VectorXcd::Zero(dim);
    const bool user_init = opts.init_vector.size() == dim;
    if (user_init) {
      w = opts.init_vector;
    } else {
      w(r % dim) = cd(1.0, 0.0);
    }
    if (!(user_init && r == 0)) {
      Rng rng(split_seed(opts.seed, static_cast<std::uint64_t>(r) + 1));
      for (Eigen::Index i = 0; i < dim; ++i) {
        w(i) += cd(rng.uniform(-opts.init_scale, opts.init_scale),
                   rng.uniform(-opts.init_scale, opts.init_scale));
      }
    }
    w.normalize();

    ExtractionResult cur;
    cur.converged = false;
    int it = 0;
    for (; it < opts.max_iterations; ++it) {
      VectorXcd gradient = contrast_gradient(w, x.data);
      if (gradient.norm() < 1e-13) {
        cur.converged = true;
        break;
      }
      LineSearchResult ls = exact_line_search(w, gradient, x.data, opts.sign);
      if (ls.stagnated) {
        cur.converged = true;
        break;
      }
      VectorXcd w_new = (w + ls.step * gradient).normalized();
      const double overlap = std::min(1.0, std::abs(w_new.dot(w)));
      const double angle = std::acos(overlap);
      w = w_new;
      if (angle < opts.angle_tolerance) {
        cur.converged = true;
        ++it;
        break;
      }
    }
    cur.iterations = it;
    cur.w = w;
    cur.kurtosis = contrast_value(w, x.data);
    cur.sign_satisfied = sign_ok(cur.kurtosis, opts.sign);

    const bool replace = !have_best ||
                         (cur.sign_satisfied && !best.sign_satisfied) ||
                         (cur.sign_satisfied == best.sign_satisfied &&
                          better(cur.kurtosis, best.kurtosis, opts.sign));
    if (replace) {
      best = cur;
      have_best = true;
    }
  }

  // Phase convention: the largest-modulus entry is real positive.
  Eigen::Index imax;
  best.w.cwiseAbs().maxCoeff(&imax);
  const cd pivot = best.w(imax);
  if (std::abs(pivot) > 0.0) best.w *= std::conj(pivot) / std::abs(pivot);

  best.source = best.w.adjoint() * x.data;
  const double m2 = best.source.squaredNorm() / static_cast<double>(best.source.size());
  if (m2 > 0.0) best.source /= std::sqrt(m2);
  return best;
}

VectorXcd deflation_coefficient(const MatrixXcd& x, const Eigen::RowVectorXcd& source) {
  const double n = static_cast<double>(source.size());
  const double m2 = source.squaredNorm() / n;
  if (m2 == 0.0) return VectorXcd::Zero(x.rows());
  VectorXcd h = x * source.adjoint() / n;
  return h / m2;
}

MatrixXcd deflate(const MatrixXcd& x, const Eigen::RowVectorXcd& source) {
  return x - deflation_coefficient(x, source) * source;
}

SeparationResult separate(const WhitenedData& x, int n_sources, ExtractionOptions opts) {
  const Eigen::Index dim = x.dim();
  if (n_sources < 1 || n_sources > dim) {
    throw std::invalid_argument("separate: n_sources out of range");
  }

  SeparationResult out;
  out.extraction_vectors.resize(dim, n_sources);
  out.estimated_sources.resize(n_sources, x.samples());
  out.deflation_coefficients.resize(dim, n_sources);
  out.kurtosis.resize(n_sources);

  MatrixXcd current = x.data;
  MatrixXcd to_input = MatrixXcd::Identity(dim, dim);  // current coords -> input coords
  const std::uint64_t base_seed = opts.seed;

  for (int round = 0; round < n_sources; ++round) {
    WhitenedData stage;
    stage.data = current;
    stage.axis = x.axis;
    opts.seed = split_seed(base_seed, 0x5E00 + static_cast<std::uint64_t>(round));

    ExtractionResult ext;
    try {
      ext = extract_one(stage, opts);
    } catch (const std::exception&) {
      break;  // partial results
    }

    out.extraction_vectors.col(round) = (to_input * ext.w).normalized();
    out.estimated_sources.row(round) = ext.source;
    out.kurtosis(round) = ext.kurtosis;
    out.iterations.push_back(ext.iterations);
    out.converged.push_back(ext.converged);
    out.sign_satisfied.push_back(ext.sign_satisfied);
    VectorXcd h = deflation_coefficient(current, ext.source);
    out.deflation_coefficients.col(round) = to_input * h;
    out.extracted = round + 1;

    if (round + 1 == n_sources) break;
    MatrixXcd residual = current - h * ext.source;
    WhitenedData rewhitened;
    try {
      rewhitened = whiten(residual, current.rows() - 1, x.axis);
    } catch (const std::exception&) {
      break;
    }
    // Rows of whitened data have exactly zero empirical mean, so the
    // re-whitening recentering is a no-op; only the linear map matters.
    to_input = to_input * rewhitened.map.adjoint();
    current = rewhitened.data;
  }
  return out;
}

std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw std::invalid_argument("solve_assignment: square matrix required");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> way(n + 1, 0), p(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] != 0) assignment[p[j] - 1] = j - 1;
  }
  return assignment;
}

AlignmentReport align_to_truth(const MatrixXcd& estimated, const MatrixXcd& truth) {
  const int n = static_cast<int>(estimated.rows());
  if (truth.rows() != n) {
    throw std::invalid_argument("align_to_truth: source counts differ");
  }
  Eigen::MatrixXd corr(n, n);
  for (int i = 0; i < n; ++i) {
    const double ni = estimated.row(i).norm();
    for (int j = 0; j < n; ++j) {
      const double nj = truth.row(j).norm();
      corr(i, j) = std::abs(estimated.row(i).dot(truth.row(j))) / (ni * nj);
    }
  }
  AlignmentReport report;
  report.assignment = solve_assignment(-corr);
  report.correlations.resize(n);
  report.distances.resize(n);
  for (int i = 0; i < n; ++i) {
    const double c = std::min(1.0, corr(i, report.assignment[i]));
    report.correlations(i) = c;
    report.distances(i) = std::acos(c);
  }
  return report;
}

}  // namespace bssim
