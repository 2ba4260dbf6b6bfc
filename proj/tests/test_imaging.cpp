#include <filesystem>
#include <fstream>
#include <cmath>
#include <deque>
#include <vector>

#include "doctest.h"

#include "bssim/imaging.hpp"
#include "bssim/rng.hpp"

using namespace bssim;

namespace {

OpticsConfig desk_config() {
  OpticsConfig o;
  o.L_D = 64.0;
  o.grid_points = 512;
  o.z_s = 80.0;
  o.L = 20.0;
  o.numerical_aperture = 0.75;
  o.screen_correlation_length = 4.0;
  o.k0_sigma = 1.0;
  return o;
}

double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }

/// Continuous cross-Green ground truth |4 L_C^2 sinc sinc| at image point y.
double expg_magnitude(const OpticsConfig& o, double k, const Vec2& y, const Vec2& delta) {
  const double lc = o.camera_half_side();
  const double c1 = k * lc * (y.x() - delta.x()) / o.z_s;
  const double c2 = k * lc * (y.y() - delta.y()) / o.z_s;
  return 4.0 * lc * lc * std::abs(sinc(c1) * sinc(c2));
}

int connected_components(const Eigen::ArrayXX<bool>& mask) {
  const int n = static_cast<int>(mask.rows());
  Eigen::ArrayXX<bool> seen = Eigen::ArrayXX<bool>::Constant(n, n, false);
  int components = 0;
  for (int j0 = 0; j0 < n; ++j0) {
    for (int i0 = 0; i0 < n; ++i0) {
      if (!mask(i0, j0) || seen(i0, j0)) continue;
      ++components;
      std::deque<std::pair<int, int>> queue{{i0, j0}};
      seen(i0, j0) = true;
      while (!queue.empty()) {
        auto [i, j] = queue.front();
        queue.pop_front();
        for (auto [di, dj] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
          const int a = i + di, b = j + dj;
          if (a < 0 || b < 0 || a >= n || b >= n || seen(a, b) || !mask(a, b)) continue;
          seen(a, b) = true;
          queue.emplace_back(a, b);
        }
      }
    }
  }
  return components;
}

}  // namespace

TEST_SUITE("imaging") {

TEST_CASE("svd truncation policies") {
  Rng rng(3);
  VectorXcd u1(64), v1(32);
  for (int i = 0; i < 64; ++i) u1(i) = rng.circular_gaussian();
  for (int i = 0; i < 32; ++i) v1(i) = rng.circular_gaussian();
  u1.normalize();
  v1.normalize();
  MatrixXcd rank1 = 3.7 * u1 * v1.adjoint();

  SUBCASE("relative threshold keeps one triplet of a rank-one matrix") {
    SvdPolicy policy;
    policy.relative_threshold = 0.1;
    TruncatedSvd svd = svd_truncate(rank1, policy);
    CHECK(svd.retained == 1);
    CHECK(svd.singular_values(0) == doctest::Approx(3.7).epsilon(1e-10));
  }

  SUBCASE("fixed count beyond the rank is rejected") {
    SvdPolicy policy;
    policy.fixed_count = 2;
    CHECK_THROWS_AS(svd_truncate(rank1, policy), std::invalid_argument);
  }

  SUBCASE("orthonormal factors") {
    MatrixXcd noisy = rank1;
    Rng rng2(5);
    for (int j = 0; j < 32; ++j) {
      for (int i = 0; i < 64; ++i) noisy(i, j) += 0.05 * rng2.circular_gaussian();
    }
    SvdPolicy policy;
    policy.fixed_count = 4;
    TruncatedSvd svd = svd_truncate(noisy, policy);
    CHECK((svd.u.adjoint() * svd.u - MatrixXcd::Identity(4, 4)).norm() < 1e-10);
    CHECK((svd.v.adjoint() * svd.v - MatrixXcd::Identity(4, 4)).norm() < 1e-10);
    for (int k = 1; k < 4; ++k) CHECK(svd.singular_values(k) <= svd.singular_values(k - 1));
  }

  SUBCASE("gram route agrees with the direct svd") {
    // Tall matrix takes the gram path; compare to BDCSVD on the same data.
    Rng rng3(7);
    MatrixXcd tall(1500, 12);
    for (int j = 0; j < 12; ++j) {
      for (int i = 0; i < 1500; ++i) tall(i, j) = rng3.circular_gaussian();
    }
    SvdPolicy policy;
    policy.fixed_count = 3;
    TruncatedSvd a = svd_truncate(tall, policy);
    Eigen::BDCSVD<MatrixXcd> ref(tall, Eigen::ComputeThinU);
    for (int k = 0; k < 3; ++k) {
      CHECK(a.singular_values(k) ==
            doctest::Approx(ref.singularValues()(k)).epsilon(1e-10));
      CHECK(std::abs(a.u.col(k).dot(ref.matrixU().col(k))) == doctest::Approx(1.0).epsilon(1e-8));
    }
  }
}

TEST_CASE("cross green image reproduces the sinc-squared ground truth") {
  OpticsConfig o = desk_config();
  o.k0_sigma = 0.0;  // S = 0
  RealField profile = screen_profile(o, 11);
  const double k = o.return_wavenumber(Modality::Shg);
  const CameraGrid cam = camera_grid(o, k);

  Rng rng(13);
  for (int pair = 0; pair < 10; ++pair) {
    const Vec2 xi(rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0));
    const Vec2 xj(rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0));
    VectorXcd gi = green_rgo_camera(o, xi, profile, k);
    VectorXcd gj = green_rgo_camera(o, xj, profile, k);
    ComplexImage g = cross_green_image(gi, gj, cam, k, o.z_s);

    Eigen::Index bi, bj;
    g.values.abs().maxCoeff(&bi, &bj);
    const GridSpec grid = g.grid();
    const Vec2 peak(grid.coord(static_cast<int>(bi)), grid.coord(static_cast<int>(bj)));
    const Vec2 delta = xi - xj;
    REQUIRE(std::abs(peak.x() - delta.x()) <= g.pitch + 1e-12);
    REQUIRE(std::abs(peak.y() - delta.y()) <= g.pitch + 1e-12);

    const double expected = expg_magnitude(o, k, peak, delta);
    REQUIRE(std::abs(g.values(bi, bj)) == doctest::Approx(expected).epsilon(0.01));
  }
}

TEST_CASE("self cross image peaks at the origin for any screen") {
  OpticsConfig o = desk_config();  // k0 sigma = 1: strong enough to matter
  RealField profile = screen_profile(o, 17);
  const double k = o.return_wavenumber(Modality::Shg);
  const CameraGrid cam = camera_grid(o, k);
  VectorXcd g1 = green_rgo_camera(o, Vec2(2.3, -1.2), profile, k);
  ComplexImage g = cross_green_image(g1, g1, cam, k, o.z_s);
  Eigen::Index bi, bj;
  g.values.abs().maxCoeff(&bi, &bj);
  CHECK(static_cast<int>(bi) == g.n() / 2);
  CHECK(static_cast<int>(bj) == g.n() / 2);
}

TEST_CASE("cross image hermitian symmetry under index swap") {
  OpticsConfig o = desk_config();
  RealField profile = screen_profile(o, 19);
  const double k = o.return_wavenumber(Modality::Shg);
  const CameraGrid cam = camera_grid(o, k);
  VectorXcd gi = green_rgo_camera(o, Vec2(1.0, 0.5), profile, k);
  VectorXcd gj = green_rgo_camera(o, Vec2(-0.7, 1.4), profile, k);
  ComplexImage gij = cross_green_image(gi, gj, cam, k, o.z_s);
  ComplexImage gji = cross_green_image(gj, gi, cam, k, o.z_s);
  const int n = gij.n();
  double worst = 0.0;
  for (int j = 0; j < n; j += 3) {
    for (int i = 0; i < n; i += 3) {
      const cd a = gji.values(i, j);
      const cd b = std::conj(gij.values((n - i) % n, (n - j) % n));
      worst = std::max(worst, std::abs(a - b));
    }
  }
  CHECK(worst < 1e-10 * gij.values.abs().maxCoeff());
}

TEST_CASE("phase compensation beats the single-field image through the screen") {
  OpticsConfig o = desk_config();
  const double k = o.return_wavenumber(Modality::Shg);
  const CameraGrid cam = camera_grid(o, k);
  const Vec2 xi(0.8, -0.3), xj(0.1, 0.4);  // |xi - xj| ~ 1 lambda << l_c

  double cross_ratio = 0.0, single_ratio = 0.0;
  for (int seed = 0; seed < 10; ++seed) {
    RealField profile = screen_profile(o, 100 + seed);
    VectorXcd gi = green_rgo_camera(o, xi, profile, k);
    VectorXcd gj = green_rgo_camera(o, xj, profile, k);
    ComplexImage cross = cross_green_image(gi, gj, cam, k, o.z_s);
    ComplexImage single = back_propagate(gi, cam, k, o.z_s);
    auto ratio = [](const ComplexImage& img) {
      const ArrayXXd mag = img.values.abs();
      return mag.maxCoeff() / (mag.sum() / mag.size());
    };
    cross_ratio += ratio(cross);
    single_ratio += ratio(single);
  }
  CHECK(cross_ratio >= 2.0 * single_ratio);
}

TEST_CASE("dort image of a pure green column peaks at the scatterer") {
  OpticsConfig o = desk_config();
  o.k0_sigma = 0.0;
  RealField profile = screen_profile(o, 23);
  const double k = o.return_wavenumber(Modality::Shg);
  const CameraGrid cam = camera_grid(o, k);
  const Vec2 x1(1.7, -2.4);
  ComplexImage j1 = dort_image(green_rgo_camera(o, x1, profile, k), cam, k, o.z_s);

  CHECK(j1.values.abs().maxCoeff() == doctest::Approx(1.0).epsilon(1e-12));
  Eigen::Index bi, bj;
  j1.values.abs().maxCoeff(&bi, &bj);
  const GridSpec grid = j1.grid();
  CHECK(std::abs(grid.coord(static_cast<int>(bi)) - x1.x()) <= j1.pitch);
  CHECK(std::abs(grid.coord(static_cast<int>(bj)) - x1.y()) <= j1.pitch);

  // sinc-squared profile along the first axis near the peak.
  for (int off : {2, 5, 9}) {
    const Vec2 y(grid.coord(static_cast<int>(bi) + off), grid.coord(static_cast<int>(bj)));
    const double expected = expg_magnitude(o, k, y, x1) / (4.0 * o.camera_half_side() * o.camera_half_side());
    const double got = std::abs(j1.values(bi + off, bj));
    CHECK(got == doctest::Approx(expected).epsilon(0.02));
  }
}

TEST_CASE("filter mask thresholds and monotonicity") {
  OpticsConfig o = desk_config();
  o.k0_sigma = 0.0;
  RealField profile = screen_profile(o, 29);
  const double k = o.return_wavenumber(Modality::Shg);
  const CameraGrid cam = camera_grid(o, k);
  ComplexImage img = dort_image(green_rgo_camera(o, Vec2(0.0, 0.0), profile, k), cam, k, o.z_s);
  const ArrayXXd mag = img.values.abs();

  CHECK(filter_mask(mag, 1.0).count() == 0);
  CHECK(filter_mask(mag, 0.0).count() == (mag > 0.0).count());

  auto mask_half = filter_mask(mag, 0.5);
  auto mask_strict = filter_mask(mag, 0.9);
  CHECK((mask_strict && !mask_half).count() == 0);  // nested masks

  // The half-maximum set of the sinc-squared peak is one connected blob
  // containing the argmax.
  Eigen::Index bi, bj;
  mag.maxCoeff(&bi, &bj);
  CHECK(mask_half(bi, bj));
  CHECK(connected_components(mask_half) == 1);
  CHECK_THROWS_AS(filter_mask(mag, 1.5), std::invalid_argument);
}

TEST_CASE("combined dort with a zero threshold is the plain average") {
  OpticsConfig o = desk_config();
  o.k0_sigma = 0.0;
  RealField profile = screen_profile(o, 31);
  const double k = o.return_wavenumber(Modality::Shg);
  const CameraGrid cam = camera_grid(o, k);
  std::vector<ComplexImage> images;
  images.push_back(dort_image(green_rgo_camera(o, Vec2(1.0, 1.0), profile, k), cam, k, o.z_s));
  images.push_back(dort_image(green_rgo_camera(o, Vec2(-1.5, 0.5), profile, k), cam, k, o.z_s));
  ImageGrid j = dort_combined(images, 0.0);
  ArrayXXcd mean = (images[0].values + images[1].values) / 2.0;
  CHECK((j.values - mean.abs()).abs().maxCoeff() < 1e-12);
}

TEST_CASE("improved dort localizes two scatterers from exact green columns") {
  OpticsConfig o = desk_config();
  RealField profile = screen_profile(o, 37);
  const double k = o.return_wavenumber(Modality::Shg);
  const CameraGrid cam = camera_grid(o, k);
  const Vec2 x1(0.9, -0.6), x2(-1.1, 1.3);

  MatrixXcd columns(cam.pixels(), 2);
  columns.col(0) = green_rgo_camera(o, x1, profile, k);
  columns.col(1) = green_rgo_camera(o, x2, profile, k);

  ImprovedDortOptions opts;
  opts.eta_f = 0.99;
  opts.eta_i = 0.2;

  SUBCASE("no screen: exactly two peaks separated by x2 - x1") {
    OpticsConfig o0 = o;
    o0.k0_sigma = 0.0;
    MatrixXcd cols0(cam.pixels(), 2);
    cols0.col(0) = green_rgo_camera(o0, x1, profile, k);
    cols0.col(1) = green_rgo_camera(o0, x2, profile, k);
    ImprovedDortResult result = improved_dort(cols0, cam, k, o0.z_s, opts);
    REQUIRE(result.image.peaks.size() == 2);
    const Vec2 d(result.image.peaks[0].x - result.image.peaks[1].x,
                 result.image.peaks[0].y - result.image.peaks[1].y);
    const Vec2 expected = x2 - x1;
    const double err = std::min((d - expected).norm(), (d + expected).norm());
    CHECK(err <= result.image.pitch * std::sqrt(2.0) + 1e-12);
  }

  SUBCASE("argmax invariance under the BSS phase degeneracy") {
    ImprovedDortResult base = improved_dort(columns, cam, k, o.z_s, opts);
    MatrixXcd rotated = columns;
    rotated.col(0) *= std::polar(1.0, 1.234);
    rotated.col(1) *= std::polar(1.0, -2.1);
    ImprovedDortResult rot = improved_dort(rotated, cam, k, o.z_s, opts);
    CHECK((base.image.values - rot.image.values).abs().maxCoeff() <
          1e-12 * base.image.values.maxCoeff());
    CHECK((base.beta - rot.beta).cwiseAbs().maxCoeff() < 1e-12 * base.beta.maxCoeff());
  }

  SUBCASE("suppressing every cross term degrades to flagged anchors") {
    ImprovedDortOptions harsh = opts;
    harsh.eta_i = 1.05;
    ImprovedDortResult result = improved_dort(columns, cam, k, o.z_s, harsh);
    REQUIRE(result.low_confidence.size() == 2);
    CHECK_FALSE(result.low_confidence[0]);
    CHECK(result.low_confidence[1]);
  }
}

TEST_CASE("localization score identities") {
  ImageGrid truth_image;
  truth_image.pitch = 0.25;
  truth_image.values = ArrayXXd::Zero(96, 96);
  std::vector<Vec2> truth;
  Rng rng(41);
  for (int i = 0; i < 6; ++i) {
    const int a = 20 + static_cast<int>(rng.uniform() * 56);
    const int b = 20 + static_cast<int>(rng.uniform() * 56);
    truth_image.values(a, b) = 1.0;
    truth.emplace_back((a - 48) * 0.25, (b - 48) * 0.25);
  }
  truth_image.window = 96 * 0.25;

  SUBCASE("rendered truth scores perfectly") {
    ImageGrid img = truth_image;
    img.peaks.clear();
    for (const Vec2& t : truth) img.peaks.push_back({t.x(), t.y(), 1.0});
    LocalizationScore s = localization_score(img, truth, 1.0);
    CHECK(s.hits == 6);
    CHECK(s.misses == 0);
    CHECK(s.false_peaks == 0);
  }

  SUBCASE("a global shift does not change the score") {
    ImageGrid img = truth_image;
    img.peaks.clear();
    for (const Vec2& t : truth) img.peaks.push_back({t.x() + 1.75, t.y() - 2.5, 1.0});
    LocalizationScore s = localization_score(img, truth, 1.0);
    CHECK(s.hits == 6);
    CHECK(s.misses == 0);
  }

  SUBCASE("random peaks rarely collide with the truth") {
    // After the pinning shift, each remaining random peak lands within one
    // pixel of some truth with probability ~ N pi / area; expect ~0 extras.
    int worst = 0;
    for (int seed = 0; seed < 10; ++seed) {
      Rng r2(100 + seed);
      ImageGrid img = truth_image;
      img.peaks.clear();
      for (int i = 0; i < 10; ++i) {
        img.peaks.push_back({(r2.uniform() - 0.5) * 20.0, (r2.uniform() - 0.5) * 20.0, 1.0});
      }
      std::vector<Vec2> many_truth;
      for (int i = 0; i < 10; ++i) {
        many_truth.emplace_back((r2.uniform() - 0.5) * 5.0, (r2.uniform() - 0.5) * 5.0);
      }
      LocalizationScore s = localization_score(img, many_truth, 1.0);
      worst = std::max(worst, s.hits);
    }
    CHECK(worst <= 4);
  }
}

TEST_CASE("pgm and peak csv export") {
  ImageGrid img;
  img.pitch = 0.5;
  img.values = ArrayXXd::Zero(8, 8);
  img.values(3, 5) = 2.0;
  img.values(1, 1) = 1.0;
  img.window = 4.0;
  img.peaks.push_back({-0.5, 0.5, 2.0});

  save_pgm16(img, "/tmp/bssim_test.pgm");
  std::ifstream f("/tmp/bssim_test.pgm", std::ios::binary);
  std::string magic, dims;
  std::getline(f, magic);
  CHECK(magic == "P5");
  std::getline(f, dims);
  CHECK(dims == "8 8");
  std::getline(f, dims);
  CHECK(dims == "65535");
  std::vector<unsigned char> bytes(8 * 8 * 2);
  f.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  CHECK(f.gcount() == 128);
  // Row 0 of the file is the top of the image (largest second index).
  const int row = 7 - 5, col = 3;
  const unsigned value = 256u * bytes[2 * (row * 8 + col)] + bytes[2 * (row * 8 + col) + 1];
  CHECK(value == 65535);

  save_peaks_csv(img, "/tmp/bssim_test_peaks.csv");
  std::ifstream p("/tmp/bssim_test_peaks.csv");
  std::string header, line;
  std::getline(p, header);
  CHECK(header == "x,y,value");
  std::getline(p, line);
  CHECK(line.substr(0, 9) == "-0.5,0.5,");
  std::filesystem::remove("/tmp/bssim_test.pgm");
  std::filesystem::remove("/tmp/bssim_test_peaks.csv");
}

}  // TEST_SUITE
