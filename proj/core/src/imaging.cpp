#include "bssim/imaging.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <random>
#include <tuple>

#include "bssim/fft.hpp"
#include "bssim/parallel.hpp"

namespace bssim {

namespace {

/// Randomized range finder for the fixed-count truncation of tall matrices:
/// a seeded Gaussian sketch, two power iterations with re-orthonormalization,
/// then an exact SVD of the projected matrix. Exact for matrices whose rank
/// does not exceed the sketch width; deterministic (fixed internal seed).
void sketch_svd(const MatrixXcd& r, Eigen::Index count, MatrixXcd& u_full,
                VectorXd& sv, MatrixXcd& v_full) {
  const Eigen::Index np = r.rows();
  const Eigen::Index nr = r.cols();
  const Eigen::Index width = std::min(nr, count + 10);
  std::mt19937_64 engine(0x5EEDBA5Eu);
  std::normal_distribution<double> normal;
  MatrixXcd omega(nr, width);
  for (Eigen::Index j = 0; j < width; ++j) {
    for (Eigen::Index i = 0; i < nr; ++i) omega(i, j) = cd(normal(engine), normal(engine));
  }
  MatrixXcd y = r * omega;
  for (int q = 0; q < 2; ++q) {
    y = Eigen::HouseholderQR<MatrixXcd>(y).householderQ() * MatrixXcd::Identity(np, width);
    y = r * (r.adjoint() * y);
  }
  MatrixXcd basis =
      Eigen::HouseholderQR<MatrixXcd>(y).householderQ() * MatrixXcd::Identity(np, width);
  MatrixXcd b = basis.adjoint() * r;
  Eigen::BDCSVD<MatrixXcd> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  u_full = basis * svd.matrixU();
  v_full = svd.matrixV();
  sv = svd.singularValues();
}

}  // namespace

TruncatedSvd svd_truncate(const MatrixXcd& r, const SvdPolicy& policy) {
  if (r.size() == 0 || r.cwiseAbs().maxCoeff() == 0.0) {
    throw std::invalid_argument("svd_truncate: zero matrix");
  }
  const Eigen::Index np = r.rows();
  const Eigen::Index nr = r.cols();
  const Eigen::Index small = std::min(np, nr);

  MatrixXcd u_full, v_full;
  VectorXd sv;
  if (policy.fixed_count > 0 && std::max(np, nr) > 1024 && np != nr) {
    if (np > nr) {
      sketch_svd(r, policy.fixed_count, u_full, sv, v_full);
    } else {
      sketch_svd(r.adjoint(), policy.fixed_count, v_full, sv, u_full);
    }
  } else if (std::max(np, nr) <= 1024) {
    Eigen::BDCSVD<MatrixXcd> svd(r, Eigen::ComputeThinU | Eigen::ComputeThinV);
    u_full = svd.matrixU();
    v_full = svd.matrixV();
    sv = svd.singularValues();
  } else if (nr <= np) {
    // Gram route on the smaller side; exact for the retained well-separated
    // triplets and much cheaper than a full SVD of a tall matrix.
    MatrixXcd gram = r.adjoint() * r;
    Eigen::SelfAdjointEigenSolver<MatrixXcd> eig(gram);
    sv.resize(small);
    v_full.resize(nr, small);
    for (Eigen::Index k = 0; k < small; ++k) {
      const Eigen::Index src = small - 1 - k;
      sv(k) = std::sqrt(std::max(0.0, eig.eigenvalues()(src)));
      v_full.col(k) = eig.eigenvectors().col(src);
    }
    u_full = r * v_full;
    for (Eigen::Index k = 0; k < small; ++k) {
      if (sv(k) > 0) u_full.col(k) /= sv(k);
    }
  } else {
    MatrixXcd gram = r * r.adjoint();
    Eigen::SelfAdjointEigenSolver<MatrixXcd> eig(gram);
    sv.resize(small);
    u_full.resize(np, small);
    for (Eigen::Index k = 0; k < small; ++k) {
      const Eigen::Index src = small - 1 - k;
      sv(k) = std::sqrt(std::max(0.0, eig.eigenvalues()(src)));
      u_full.col(k) = eig.eigenvectors().col(src);
    }
    v_full = r.adjoint() * u_full;
    for (Eigen::Index k = 0; k < small; ++k) {
      if (sv(k) > 0) v_full.col(k) /= sv(k);
    }
  }

  int keep;
  TruncatedSvd out;
  if (policy.fixed_count > 0) {
    const double rank_tol = sv(0) * 1e-12;
    Eigen::Index rank = 0;
    for (Eigen::Index k = 0; k < sv.size(); ++k) {
      if (sv(k) > rank_tol) ++rank;
    }
    if (policy.fixed_count > rank) {
      throw std::invalid_argument("svd_truncate: requested count " +
                                  std::to_string(policy.fixed_count) +
                                  " exceeds numerical rank " + std::to_string(rank));
    }
    keep = policy.fixed_count;
  } else if (policy.relative_threshold >= 0.0) {
    keep = 0;
    for (Eigen::Index k = 0; k < sv.size(); ++k) {
      if (sv(k) > policy.relative_threshold * sv(0)) ++keep;
    }
    out.relative_threshold = policy.relative_threshold;
  } else {
    throw std::invalid_argument("svd_truncate: policy selects nothing");
  }

  out.retained = keep;
  out.u = u_full.leftCols(keep);
  out.v = v_full.leftCols(keep);
  out.singular_values = sv.head(keep);
  return out;
}

ComplexImage back_propagate(const VectorXcd& camera_field, const CameraGrid& cam,
                            double k, double z_s) {
  const int n = cam.count;
  if (camera_field.size() != cam.pixels()) {
    throw std::invalid_argument("back_propagate: field size does not match camera grid");
  }
  ArrayXXcd grid(n, n);
  Eigen::Index idx = 0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) grid(i, j) = camera_field(idx++);
  }
  ComplexImage out;
  out.values = centered_dft(grid, +1) * (cam.pitch * cam.pitch);
  out.pitch = 2.0 * kPi * z_s / (k * n * cam.pitch);
  return out;
}

ComplexImage dort_image(const VectorXcd& u_column, const CameraGrid& cam, double k,
                        double z_s) {
  ComplexImage img = back_propagate(u_column, cam, k, z_s);
  const double peak = img.values.abs().maxCoeff();
  if (peak > 0.0) img.values /= peak;
  return img;
}

Eigen::ArrayXX<bool> filter_mask(const ArrayXXd& magnitude, double eta_f) {
  if (eta_f < 0.0 || eta_f > 1.0) {
    throw std::invalid_argument("filter_mask: eta_f must lie in [0, 1]");
  }
  const double cut = eta_f * magnitude.maxCoeff();
  return magnitude > cut;
}

namespace {

void extract_peaks(ImageGrid& image) {
  image.peaks.clear();
  const int n = image.n();
  const double cut = 0.5 * image.values.maxCoeff();
  if (cut <= 0.0) return;
  const GridSpec g = image.grid();
  for (int j = 1; j + 1 < n; ++j) {
    for (int i = 1; i + 1 < n; ++i) {
      const double v = image.values(i, j);
      if (v <= cut) continue;
      bool is_max = true;
      for (int dj = -1; dj <= 1 && is_max; ++dj) {
        for (int di = -1; di <= 1; ++di) {
          if (di == 0 && dj == 0) continue;
          const double w = image.values(i + di, j + dj);
          if (w > v || (w == v && (dj < 0 || (dj == 0 && di < 0)))) {
            is_max = false;  // plateau ties resolve to the lowest index
            break;
          }
        }
      }
      if (is_max) image.peaks.push_back({g.coord(i), g.coord(j), v});
    }
  }
  std::sort(image.peaks.begin(), image.peaks.end(),
            [](const ImageGrid::Peak& a, const ImageGrid::Peak& b) { return a.value > b.value; });
}

ImageGrid to_image_grid(const ArrayXXd& values, double pitch) {
  ImageGrid out;
  out.values = values;
  out.pitch = pitch;
  out.window = values.rows() * pitch;
  extract_peaks(out);
  return out;
}

}  // namespace

ImageGrid dort_combined(const std::vector<ComplexImage>& images, double eta_f) {
  if (images.empty()) throw std::invalid_argument("dort_combined: no images");
  const int n = images[0].n();
  ArrayXXcd sum = ArrayXXcd::Zero(n, n);
  for (const ComplexImage& img : images) {
    auto mask = filter_mask(img.values.abs(), eta_f);
    sum += img.values * mask.cast<double>().cast<cd>();
  }
  sum /= static_cast<double>(images.size());
  return to_image_grid(sum.abs(), images[0].pitch);
}

ComplexImage cross_green_image(const VectorXcd& g_i, const VectorXcd& g_j,
                               const CameraGrid& cam, double k, double z_s) {
  return back_propagate(g_i.cwiseProduct(g_j.conjugate()), cam, k, z_s);
}

namespace {

/// Index of the flipped coordinate -y on the periodic centered grid.
int flip_index(int m, int n) { return (n - m) % n; }

ArrayXXd flip_both(const ArrayXXd& a) {
  const int n = static_cast<int>(a.rows());
  ArrayXXd out(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) out(flip_index(i, n), flip_index(j, n)) = a(i, j);
  }
  return out;
}

/// Adds src shifted by (si, sj) pixels into dst, zero-filled at the borders.
void add_shifted(ArrayXXd& dst, const ArrayXXd& src, double si, double sj, bool subpixel) {
  const int n = static_cast<int>(dst.rows());
  if (!subpixel) {
    const int ti = static_cast<int>(std::lround(si));
    const int tj = static_cast<int>(std::lround(sj));
    for (int j = 0; j < n; ++j) {
      const int js = j - tj;
      if (js < 0 || js >= n) continue;
      for (int i = 0; i < n; ++i) {
        const int is = i - ti;
        if (is < 0 || is >= n) continue;
        dst(i, j) += src(is, js);
      }
    }
    return;
  }
  for (int j = 0; j < n; ++j) {
    const double js = j - sj;
    const int j0 = static_cast<int>(std::floor(js));
    const double tj = js - j0;
    if (j0 < -1 || j0 >= n) continue;
    for (int i = 0; i < n; ++i) {
      const double is = i - si;
      const int i0 = static_cast<int>(std::floor(is));
      const double ti = is - i0;
      if (i0 < -1 || i0 >= n) continue;
      auto at = [&](int a, int b) -> double {
        return (a >= 0 && a < n && b >= 0 && b < n) ? src(a, b) : 0.0;
      };
      dst(i, j) += (1 - ti) * (1 - tj) * at(i0, j0) + ti * (1 - tj) * at(i0 + 1, j0) +
                   (1 - ti) * tj * at(i0, j0 + 1) + ti * tj * at(i0 + 1, j0 + 1);
    }
  }
}

/// Peak location of |f| in pixel units relative to the grid center, with
/// optional quadratic sub-pixel interpolation.
Vec2 argmax_pixels(const ArrayXXd& a, bool subpixel) {
  const int n = static_cast<int>(a.rows());
  Eigen::Index bi = 0, bj = 0;
  a.maxCoeff(&bi, &bj);
  double x = static_cast<double>(bi) - n / 2;
  double y = static_cast<double>(bj) - n / 2;
  if (subpixel) {
    auto refine = [&](double ym, double y0, double yp) {
      const double den = ym - 2.0 * y0 + yp;
      return den < 0.0 ? 0.5 * (ym - yp) / den : 0.0;
    };
    if (bi > 0 && bi + 1 < n) x += refine(a(bi - 1, bj), a(bi, bj), a(bi + 1, bj));
    if (bj > 0 && bj + 1 < n) y += refine(a(bi, bj - 1), a(bi, bj), a(bi, bj + 1));
  }
  return {x, y};
}

}  // namespace

ImprovedDortResult improved_dort(const MatrixXcd& green_columns, const CameraGrid& cam,
                                 double k, double z_s, const ImprovedDortOptions& opts) {
  const int n_src = static_cast<int>(green_columns.cols());
  if (n_src < 2) throw std::invalid_argument("improved_dort: needs at least 2 columns");

  // |f_ij| for j >= i; the swap uses |f_ji|(y) = |f_ij|(-y).
  const int n_pairs = n_src * (n_src + 1) / 2;
  std::vector<ArrayXXd> abs_f(n_pairs);
  auto pair_index = [&](int i, int j) { return i * n_src - i * (i - 1) / 2 + (j - i); };
  double pitch = 0.0;
  parallel_for(n_pairs, [&](int p) {
    // Unflatten p -> (i, j), j >= i.
    int i = 0, rem = p;
    while (rem >= n_src - i) {
      rem -= n_src - i;
      ++i;
    }
    const int j = i + rem;
    ComplexImage g =
        cross_green_image(green_columns.col(i), green_columns.col(j), cam, k, z_s);
    ArrayXXd mag = g.values.abs();
    auto mask = filter_mask(mag, opts.eta_f);
    abs_f[p] = mag * mask.cast<double>();
    if (i == 0 && j == 0) pitch = g.pitch;
  });

  const int n_img = static_cast<int>(abs_f[0].rows());
  Eigen::MatrixXd beta(n_src, n_src);
  Eigen::MatrixXd shift_i(n_src, n_src), shift_j(n_src, n_src);
  for (int i = 0; i < n_src; ++i) {
    for (int j = i; j < n_src; ++j) {
      const ArrayXXd& f = abs_f[pair_index(i, j)];
      beta(i, j) = f.maxCoeff();
      beta(j, i) = beta(i, j);
      const Vec2 s = argmax_pixels(f, opts.subpixel_shifts);
      shift_i(i, j) = s.x();
      shift_j(i, j) = s.y();
      shift_i(j, i) = -s.x();
      shift_j(j, i) = -s.y();
    }
  }

  // Per-anchor images I_i = sum_j |f_ij| h(beta_ij - eta_i beta_ii) / beta_ij.
  std::vector<ArrayXXd> anchor(n_src, ArrayXXd::Zero(n_img, n_img));
  for (int i = 0; i < n_src; ++i) {
    for (int j = 0; j < n_src; ++j) {
      if (beta(i, j) < opts.eta_i * beta(i, i) || beta(i, j) <= 0.0) continue;
      if (j >= i) {
        anchor[i] += abs_f[pair_index(i, j)] / beta(i, j);
      } else {
        anchor[i] += flip_both(abs_f[pair_index(j, i)]) / beta(i, j);
      }
    }
  }

  // Merge: follow the strongest link from the current anchor; an exhausted
  // chain restarts at the strongest link between visited and unvisited.
  ImprovedDortResult out;
  out.beta = beta;
  ArrayXXd merged = ArrayXXd::Zero(n_img, n_img);
  std::vector<bool> visited(n_src, false);
  std::vector<Vec2> offset(n_src, Vec2::Zero());

  int current = 0;
  visited[0] = true;
  out.merge_order.push_back(0);
  out.low_confidence.push_back(false);
  merged += anchor[0];
  for (int step = 1; step < n_src; ++step) {
    int next = -1;
    double best = -1.0;
    for (int j = 0; j < n_src; ++j) {
      if (!visited[j] && beta(current, j) > best) {
        best = beta(current, j);
        next = j;
      }
    }
    int from = current;
    if (best <= 0.0) {  // chain exhausted, re-anchor at the strongest link
      for (int v = 0; v < n_src; ++v) {
        if (!visited[v]) continue;
        for (int j = 0; j < n_src; ++j) {
          if (!visited[j] && beta(v, j) > best) {
            best = beta(v, j);
            from = v;
            next = j;
          }
        }
      }
    }
    if (next < 0) break;
    // Peak of f_{from,next} sits at x_from - x_next; image I_next shifted by
    // that offset lands in the frame of the chain anchor.
    offset[next] =
        offset[from] + Vec2(shift_i(from, next), shift_j(from, next));
    add_shifted(merged, anchor[next], offset[next].x(), offset[next].y(),
                opts.subpixel_shifts);
    visited[next] = true;
    out.merge_order.push_back(next);
    out.low_confidence.push_back(beta(from, next) < opts.eta_i * beta(from, from));
    current = next;
  }

  // Anchor frames hold peaks at x_anchor - x_j; flip to scene orientation so
  // peaks sit at x_j - x_anchor.
  out.image = to_image_grid(flip_both(merged), pitch);
  return out;
}

LocalizationScore localization_score(const ImageGrid& image, const std::vector<Vec2>& truth,
                                     double tolerance_px) {
  LocalizationScore score;
  const double tol = tolerance_px * image.pitch;
  const auto& peaks = image.peaks;
  score.misses = static_cast<int>(truth.size());
  score.false_peaks = static_cast<int>(peaks.size());
  if (peaks.empty() || truth.empty()) return score;

  int best_hits = 0;
  double best_total = 0.0;
  for (const auto& p : peaks) {
    for (const Vec2& t : truth) {
      const Vec2 shift = t - Vec2(p.x, p.y);
      // Greedy matching under this candidate shift.
      std::vector<std::tuple<double, int, int>> pairs;
      for (size_t a = 0; a < peaks.size(); ++a) {
        for (size_t b = 0; b < truth.size(); ++b) {
          const double d =
              (Vec2(peaks[a].x, peaks[a].y) + shift - truth[b]).norm();
          if (d <= tol) pairs.emplace_back(d, static_cast<int>(a), static_cast<int>(b));
        }
      }
      std::sort(pairs.begin(), pairs.end());
      std::vector<bool> used_peak(peaks.size(), false), used_truth(truth.size(), false);
      int hits = 0;
      double total = 0.0;
      for (const auto& [d, a, b] : pairs) {
        if (used_peak[a] || used_truth[b]) continue;
        used_peak[a] = true;
        used_truth[b] = true;
        ++hits;
        total += d;
      }
      if (hits > best_hits || (hits == best_hits && hits > 0 && total < best_total)) {
        best_hits = hits;
        best_total = total;
      }
    }
  }
  score.hits = best_hits;
  score.misses = static_cast<int>(truth.size()) - best_hits;
  score.false_peaks = static_cast<int>(peaks.size()) - best_hits;
  return score;
}

void save_pgm16(const ImageGrid& image, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_pgm16: cannot open " + path);
  const int n = image.n();
  const double peak = image.values.maxCoeff();
  const double scale = peak > 0.0 ? 65535.0 / peak : 0.0;
  f << "P5\n" << n << " " << n << "\n65535\n";
  // Row r of the PGM is constant image y; x runs along the row.
  for (int j = n - 1; j >= 0; --j) {
    for (int i = 0; i < n; ++i) {
      const auto v = static_cast<unsigned>(std::lround(image.values(i, j) * scale));
      const unsigned char hi = static_cast<unsigned char>(v >> 8);
      const unsigned char lo = static_cast<unsigned char>(v & 0xFF);
      f.put(static_cast<char>(hi));
      f.put(static_cast<char>(lo));
    }
  }
}

void save_peaks_csv(const ImageGrid& image, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_peaks_csv: cannot open " + path);
  f << "x,y,value\n";
  f.precision(17);
  for (const auto& p : image.peaks) {
    f << p.x << ',' << p.y << ',' << p.value << '\n';
  }
}

}  // namespace bssim
