#include "bssim/random_field.hpp"

#include <cmath>
#include <stdexcept>

#include "bssim/fft.hpp"
#include "bssim/rng.hpp"

namespace bssim {

RealField gaussian_field(const RandomFieldSpec& spec) {
  const int n = spec.points_per_side;
  if (n <= 0 || n % 2 != 0) {
    throw std::invalid_argument("gaussian_field: points_per_side must be positive and even");
  }
  const double h = spec.pitch();
  const double ell = spec.correlation_length;
  if (!(ell > 2.0 * h)) {
    throw std::invalid_argument(
        "gaussian_field: correlation length " + std::to_string(ell) +
        " is under-resolved by grid pitch " + std::to_string(h) +
        " (need correlation_length > 2*pitch)");
  }

  // Spectrum of C(r) = exp(-|r|^2/ell^2) is S(k) = pi*ell^2*exp(-ell^2|k|^2/4).
  // Coefficients a_m = sqrt(S(k_m))/L * xi_m give E{Z(x)Z*(y)} = C(x-y) on the
  // periodic window; sqrt(2)*Re(Z) then has covariance C.
  const double L = spec.side_length;
  const double dk = 2.0 * kPi / L;
  Rng rng(spec.seed);
  ArrayXXcd coef(n, n);
  for (int j = 0; j < n; ++j) {
    const double k2 = dk * (j - n / 2);
    for (int i = 0; i < n; ++i) {
      const double k1 = dk * (i - n / 2);
      const double s = kPi * ell * ell * std::exp(-0.25 * ell * ell * (k1 * k1 + k2 * k2));
      coef(i, j) = rng.circular_gaussian() * (std::sqrt(s) / L);
    }
  }
  ArrayXXcd z = centered_dft(coef, +1);

  RealField out;
  out.pitch = h;
  out.values = std::sqrt(2.0) * z.real();
  const double mean = out.values.mean();
  out.values -= mean;
  const double var = out.values.square().mean();
  out.values /= std::sqrt(var);
  return out;
}

Field phase_screen(const RealField& v, double k, double sigma, double support_radius) {
  const int n = v.n();
  const GridSpec g = v.grid();
  const double r2 = support_radius * support_radius;
  Field out;
  out.pitch = v.pitch;
  out.plane = Plane::Screen;
  out.values.resize(n, n);
  for (int j = 0; j < n; ++j) {
    const double y = g.coord(j);
    for (int i = 0; i < n; ++i) {
      const double x = g.coord(i);
      if (x * x + y * y <= r2) {
        out.values(i, j) = std::polar(1.0, k * sigma * v.values(i, j));
      } else {
        out.values(i, j) = cd(0.0, 0.0);
      }
    }
  }
  return out;
}

double measure_screen_coherence_length(double l0, double k, double sigma,
                                       const GridSpec& grid, int realizations,
                                       std::uint64_t seed) {
  const int n = grid.n;
  const double h = grid.pitch;
  const int max_lag = std::max(2, static_cast<int>(std::floor(l0 / h)));

  Eigen::VectorXd acc = Eigen::VectorXd::Zero(max_lag);
  for (int r = 0; r < realizations; ++r) {
    RandomFieldSpec spec;
    spec.correlation_length = screen_covariance_scale(l0);
    spec.side_length = n * h;
    spec.points_per_side = n;
    spec.seed = split_seed(seed, static_cast<std::uint64_t>(r));
    RealField v = gaussian_field(spec);
    // Screen phase theta = k*sigma*v; coherence at lag d along both axes,
    // periodic wrap is exact for the spectral synthesis.
    for (int lag = 1; lag <= max_lag; ++lag) {
      double re = 0.0;
      for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
          const int iw = (i + lag) % n;
          const int jw = (j + lag) % n;
          re += std::cos(k * sigma * (v.values(i, j) - v.values(iw, j)));
          re += std::cos(k * sigma * (v.values(i, j) - v.values(i, jw)));
        }
      }
      acc(lag - 1) += re / (2.0 * n * n);
    }
  }
  acc /= realizations;

  // Fit -log E = r^2 / l_c^2 by least squares through the origin.
  double num = 0.0, den = 0.0;
  for (int lag = 1; lag <= max_lag; ++lag) {
    const double r2 = (lag * h) * (lag * h);
    const double y = -std::log(std::max(acc(lag - 1), 1e-12));
    num += r2 * y;
    den += r2 * r2;
  }
  return std::sqrt(den / num);
}

SampleMatrix complex_circular_noise(Eigen::Index rows, Eigen::Index cols,
                                    double sigma_n, std::uint64_t seed) {
  if (sigma_n < 0.0) throw std::invalid_argument("complex_circular_noise: sigma_n < 0");
  SampleMatrix out;
  out.data.resize(rows, cols);
  if (sigma_n == 0.0) {
    out.data.setZero();
    return out;
  }
  Rng rng(seed);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      out.data(i, j) = sigma_n * rng.circular_gaussian();
    }
  }
  return out;
}

}  // namespace bssim
