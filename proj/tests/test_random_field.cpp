#include <cmath>

#include "doctest.h"

#include "bssim/random_field.hpp"
#include "bssim/rng.hpp"

using namespace bssim;

namespace {

RandomFieldSpec spec_128(double ell, std::uint64_t seed) {
  RandomFieldSpec s;
  s.correlation_length = ell;
  s.side_length = 128.0;
  s.points_per_side = 512;
  s.seed = seed;
  return s;
}

/// Empirical autocorrelation at an axis-aligned lag, periodic wrap.
double autocorr_at_lag(const RealField& f, int lag) {
  const int n = f.n();
  double acc = 0.0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      acc += f.values(i, j) * f.values((i + lag) % n, j);
      acc += f.values(i, j) * f.values(i, (j + lag) % n);
    }
  }
  return acc / (2.0 * n * n);
}

}  // namespace

TEST_SUITE("rngfield") {

TEST_CASE("gaussian field is normalized and deterministic") {
  RealField f = gaussian_field(spec_128(4.0, 7));
  const double mean = f.values.mean();
  const double var = f.values.square().mean();
  CHECK(mean > -0.05);
  CHECK(mean < 0.05);
  CHECK(var > 0.9);
  CHECK(var < 1.1);

  RealField g = gaussian_field(spec_128(4.0, 7));
  CHECK((f.values == g.values).all());

  RealField h = gaussian_field(spec_128(4.0, 8));
  CHECK_FALSE((f.values == h.values).all());
}

TEST_CASE("gaussian field autocorrelation decays to 1/e at the correlation length") {
  const double ell = 4.0;
  double acc = 0.0;
  const int n_fields = 6;
  for (int s = 0; s < n_fields; ++s) {
    RealField f = gaussian_field(spec_128(ell, 100 + s));
    const int lag = static_cast<int>(std::lround(ell / f.pitch));
    acc += autocorr_at_lag(f, lag);
  }
  acc /= n_fields;
  CHECK(std::abs(acc - std::exp(-1.0)) < 0.1);
}

TEST_CASE("gaussian field marginals are Gaussian within CLT bounds") {
  RealField f = gaussian_field(spec_128(4.0, 21));
  const auto& v = f.values;
  const double m3 = v.cube().mean();
  const double m4 = v.square().square().mean();
  // Effective sample count is the number of correlation patches.
  const double n_eff = (128.0 / 4.0) * (128.0 / 4.0);
  CHECK(std::abs(m3) < 5.0 * std::sqrt(6.0 / n_eff));
  CHECK(std::abs(m4 - 3.0) < 5.0 * std::sqrt(24.0 / n_eff));
}

TEST_CASE("under-resolved correlation length is rejected") {
  RandomFieldSpec s = spec_128(0.4, 1);  // pitch 0.25, needs > 0.5
  CHECK_THROWS_AS(gaussian_field(s), std::invalid_argument);
}

TEST_CASE("phase screen with zero sigma is the pupil indicator") {
  RealField v = gaussian_field(spec_128(4.0, 3));
  Field screen = phase_screen(v, 2.0 * kPi, 0.0, 20.0);
  const GridSpec g = screen.grid();
  for (int j = 0; j < screen.n(); j += 17) {
    for (int i = 0; i < screen.n(); i += 17) {
      const double r = std::hypot(g.coord(i), g.coord(j));
      const cd expected = r <= 20.0 ? cd(1.0, 0.0) : cd(0.0, 0.0);
      REQUIRE(screen.values(i, j) == expected);
    }
  }
}

TEST_CASE("phase screen modulus is exactly 0 or 1") {
  RealField v = gaussian_field(spec_128(4.0, 5));
  Field screen = phase_screen(v, 2.0 * kPi, 0.7, 30.0);
  for (int j = 0; j < screen.n(); j += 11) {
    for (int i = 0; i < screen.n(); i += 11) {
      const double m = std::abs(screen.values(i, j));
      REQUIRE((std::abs(m - 1.0) < 1e-12 || m == 0.0));
    }
  }
}

TEST_CASE("screen mutual coherence matches the quadratic law at the coherence length") {
  // k sigma = 3: the coherence length sits well inside the quadratic regime.
  const double l0 = 4.0;
  const double k = 2.0 * kPi;
  const double sigma = 3.0 / k;
  const double l_c = screen_coherence_length(l0, k, sigma);

  const int n = 256;
  const double pitch = 0.471;
  const int lag = static_cast<int>(std::lround(l_c / pitch));
  double acc = 0.0;
  const int n_screens = 30;
  for (int s = 0; s < n_screens; ++s) {
    RandomFieldSpec spec;
    spec.correlation_length = screen_covariance_scale(l0);
    spec.side_length = n * pitch;
    spec.points_per_side = n;
    spec.seed = 900 + s;
    RealField v = gaussian_field(spec);
    double re = 0.0;
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        re += std::cos(k * sigma * (v.values(i, j) - v.values((i + lag) % n, j)));
        re += std::cos(k * sigma * (v.values(i, j) - v.values(i, (j + lag) % n)));
      }
    }
    acc += re / (2.0 * n * n);
  }
  acc /= n_screens;
  CHECK(std::abs(acc - std::exp(-1.0)) < 0.1);
}

TEST_CASE("measured screen coherence length tracks the formula across k sigma") {
  const double l0 = 4.0;
  const double k = 2.0 * kPi;
  const GridSpec grid{512, 0.5};
  int idx = 0;
  for (double k_sigma : {0.5, 1.0, 3.0}) {
    const double sigma = k_sigma / k;
    const double measured =
        measure_screen_coherence_length(l0, k, sigma, grid, 24, 40 + idx++);
    const double formula = screen_coherence_length(l0, k, sigma);
    CHECK(std::abs(measured / formula - 1.0) < 0.15);
  }
}

TEST_CASE("circular noise moments") {
  SampleMatrix zero = complex_circular_noise(10, 10, 0.0, 1);
  CHECK(zero.data.cwiseAbs().maxCoeff() == 0.0);

  const double sigma = 0.1;
  SampleMatrix n = complex_circular_noise(100, 1000, sigma, 42);
  const double power = n.data.squaredNorm() / 1e5;
  CHECK(std::abs(power - sigma * sigma) < 0.05 * sigma * sigma);

  cd pseudo(0.0, 0.0);
  for (Eigen::Index j = 0; j < n.data.cols(); ++j) {
    for (Eigen::Index i = 0; i < n.data.rows(); ++i) {
      pseudo += n.data(i, j) * n.data(i, j);
    }
  }
  pseudo /= 1e5;
  CHECK(std::abs(pseudo) < 3.0 / std::sqrt(1e5) * sigma * sigma * 10.0);
}

TEST_CASE("seed splitting gives distinct streams") {
  CHECK(split_seed(1, 1) != split_seed(1, 2));
  CHECK(split_seed(1, 1) != split_seed(2, 1));
}

}  // TEST_SUITE
