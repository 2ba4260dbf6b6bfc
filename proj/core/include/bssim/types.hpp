#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

namespace bssim {

using cd = std::complex<double>;
using Eigen::ArrayXXcd;
using Eigen::ArrayXXd;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using Vec2 = Eigen::Vector2d;

inline constexpr double kPi = 3.141592653589793238462643383279502884;

/// Identifies which plane of the optical train a field lives on.
enum class Plane { Slm, Screen, Sample, Camera, Image };

/// How the sample axis of a data matrix is to be interpreted. Realizations
/// are independent illuminations; camera pixels are quadrature points of an
/// integral over the measurement domain. The empirical expectation is the
/// plain average along that axis in both cases.
enum class SampleAxis { Realizations, CameraPixels };

/// Square grid centered at the origin: coordinate of index i along either
/// axis is (i - n/2) * pitch.
struct GridSpec {
  int n = 0;
  double pitch = 0.0;  // lambda per sample

  double coord(int i) const { return (i - n / 2) * pitch; }
  double half_extent() const { return n / 2 * pitch; }
  /// Index of the grid point nearest to x (not clamped).
  int index_of(double x) const { return static_cast<int>(std::lround(x / pitch)) + n / 2; }
};

/// Real-valued field sampled on a centered square grid.
struct RealField {
  ArrayXXd values;  // values(i, j) = f(x1_i, x2_j)
  double pitch = 0.0;

  int n() const { return static_cast<int>(values.rows()); }
  GridSpec grid() const { return {n(), pitch}; }
};

/// Complex-valued field sampled on a centered square grid.
struct Field {
  ArrayXXcd values;  // values(i, j) = f(x1_i, x2_j)
  double pitch = 0.0;
  Plane plane = Plane::Sample;

  int n() const { return static_cast<int>(values.rows()); }
  GridSpec grid() const { return {n(), pitch}; }
};

/// N x N_sa matrix of observations/sources/noise, rows are components and
/// columns are samples.
struct SampleMatrix {
  MatrixXcd data;
  SampleAxis axis = SampleAxis::Realizations;

  Eigen::Index components() const { return data.rows(); }
  Eigen::Index samples() const { return data.cols(); }
};

/// Bilinear interpolation of a field at an off-grid point. The grids are
/// periodic by construction (spectral synthesis, DFT duals), so indices wrap.
template <typename Array>
auto interpolate(const Array& values, const GridSpec& g, const Vec2& p) ->
    typename Array::Scalar {
  const double fi = p.x() / g.pitch + g.n / 2;
  const double fj = p.y() / g.pitch + g.n / 2;
  const int i0 = static_cast<int>(std::floor(fi));
  const int j0 = static_cast<int>(std::floor(fj));
  const double ti = fi - i0;
  const double tj = fj - j0;
  auto wrap = [&](int i) { return ((i % g.n) + g.n) % g.n; };
  const int i1 = wrap(i0 + 1), j1 = wrap(j0 + 1);
  const int iw = wrap(i0), jw = wrap(j0);
  return values(iw, jw) * ((1 - ti) * (1 - tj)) + values(i1, jw) * (ti * (1 - tj)) +
         values(iw, j1) * ((1 - ti) * tj) + values(i1, j1) * (ti * tj);
}

}  // namespace bssim
