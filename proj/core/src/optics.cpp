#include "bssim/optics.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "bssim/fft.hpp"
#include "bssim/rng.hpp"

namespace bssim {

namespace {

constexpr std::uint64_t kSlmStreamTag = 0x51;
constexpr std::uint64_t kScreenStreamTag = 0xAB;

/// Angular-spectrum phase kernel exp(-i distance |kappa|^2 / 2k) on the
/// wrapped frequency grid, cached per geometry (one experiment reuses the
/// same kernel hundreds of times).
const ArrayXXcd& fresnel_kernel(int n, double dk, double distance, double k) {
  using Key = std::tuple<int, double, double, double>;
  static std::mutex mutex;
  static std::map<Key, std::unique_ptr<ArrayXXcd>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[Key{n, dk, distance, k}];
  if (!slot) {
    slot = std::make_unique<ArrayXXcd>(n, n);
    for (int j = 0; j < n; ++j) {
      const int mj = (j + n / 2) % n - n / 2;
      const double k2 = dk * mj;
      for (int i = 0; i < n; ++i) {
        const int mi = (i + n / 2) % n - n / 2;
        const double k1 = dk * mi;
        (*slot)(i, j) = std::polar(1.0, -distance * (k1 * k1 + k2 * k2) / (2.0 * k));
      }
    }
  }
  return *slot;
}

}  // namespace

CameraGrid camera_grid(const OpticsConfig& cfg, double k) {
  const int n = cfg.grid_points;
  const double q = cfg.camera_pitch(k);
  const double lc = cfg.camera_half_side();
  if (lc > n / 2 * q) {
    throw std::invalid_argument(
        "camera_grid: dual window half-extent " + std::to_string(n / 2 * q) +
        " lambda does not cover the camera half-side " + std::to_string(lc));
  }
  const double ratio = lc / q;
  int lo = static_cast<int>(std::ceil(n / 2 - ratio - 1e-9));
  int hi = static_cast<int>(std::ceil(n / 2 + ratio - 1e-9));
  int count = hi - lo;
  if (count % 2 != 0) --count;  // even count keeps the image transform centered
  CameraGrid cam;
  cam.first = lo;
  cam.count = count;
  cam.pitch = q;
  return cam;
}

RealField screen_profile(const OpticsConfig& cfg, std::uint64_t seed) {
  RandomFieldSpec spec;
  spec.correlation_length = screen_covariance_scale(cfg.screen_correlation_length);
  spec.side_length = cfg.L_D;
  spec.points_per_side = cfg.grid_points;
  spec.seed = split_seed(seed, kScreenStreamTag);
  return gaussian_field(spec);
}

Field screen_phase(const OpticsConfig& cfg, const RealField& profile, double k) {
  return phase_screen(profile, k, cfg.screen_sigma(), cfg.screen_radius());
}

Field slm_illumination(const OpticsConfig& cfg, std::uint64_t seed) {
  const int n = cfg.grid_points;
  const double k0 = cfg.k0();
  const double qv = cfg.slm_pitch();
  const double r_slm = cfg.slm_radius();

  // When the pupil exceeds the dual window of the sample grid, evaluate the
  // transform on an oversampled grid (same SLM pitch, more points) and
  // decimate: the coarse samples of the same continuous field are exact.
  int factor = 1;
  while (factor < 8 && r_slm > factor * n / 2 * qv) factor *= 2;
  const int nf = factor * n;
  if (r_slm > nf / 2 * qv) {
    throw std::invalid_argument("slm_illumination: SLM pupil exceeds the SLM-plane window");
  }
  const double chirp_step = k0 * cfg.L * r_slm / (cfg.z_s * cfg.z_s) * qv;
  if (chirp_step > kPi) {
    throw std::invalid_argument(
        "slm_illumination: SLM chirp advances " + std::to_string(chirp_step) +
        " rad per pixel at the pupil edge (aliasing); refine the grid");
  }

  // The pupil masks everything outside R_slm, so the phase pattern only
  // needs a subgrid covering the pupil (same pitch, centered alignment).
  const double pad = 2.0 * screen_covariance_scale(cfg.slm_correlation_length);
  int n_slm = static_cast<int>(std::ceil((2.0 * r_slm + pad) / qv));
  n_slm += n_slm % 2;
  n_slm = std::min(n_slm, nf);
  RandomFieldSpec spec;
  spec.correlation_length = screen_covariance_scale(cfg.slm_correlation_length);
  spec.side_length = n_slm * qv;
  spec.points_per_side = n_slm;
  spec.seed = split_seed(seed, kSlmStreamTag);
  RealField v_slm = gaussian_field(spec);

  Field slm;
  slm.pitch = qv;
  slm.plane = Plane::Slm;
  slm.values = ArrayXXcd::Zero(nf, nf);
  const double r2 = r_slm * r_slm;
  const double chirp = k0 * cfg.L / (2.0 * cfg.z_s * cfg.z_s);
  const int lo = nf / 2 - n_slm / 2;
  for (int j = 0; j < n_slm; ++j) {
    const double y = (j - n_slm / 2) * qv;
    if (std::abs(y) > r_slm) continue;
    for (int i = 0; i < n_slm; ++i) {
      const double x = (i - n_slm / 2) * qv;
      const double rr = x * x + y * y;
      if (rr <= r2) {
        slm.values(lo + i, lo + j) =
            std::polar(1.0, cfg.slm_sigma * v_slm.values(i, j) + chirp * rr);
      }
    }
  }

  Field fine = conjugate_plane_transform(slm, k0, cfg.z_s, -1, Plane::Screen);
  fine.values *= std::polar(1.0, k0 * (2.0 * cfg.z_s - cfg.L));
  if (factor == 1) return fine;

  Field out;
  out.pitch = fine.pitch * factor;  // = lambda z_s / L_D of the coarse grid
  out.plane = Plane::Screen;
  out.values.resize(n, n);
  const int offset = nf / 2 - factor * (n / 2);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      out.values(i, j) = fine.values(offset + factor * i, offset + factor * j);
    }
  }
  return out;
}

Field fresnel_propagate(const Field& f, double distance, double k) {
  const int n = f.n();
  const double window = n * f.pitch;
  const double dk = 2.0 * kPi / window;

  ArrayXXcd spectrum = fft2(f.values, -1);

  // Occupied spectral band: radius holding 99% of the energy. Band-edge
  // energy displaces by distance * kappa / k; reject wraps beyond half the
  // window, which would scramble the output.
  const int nbins = n / 2 + 1;
  std::vector<double> ring(nbins, 0.0);
  double total = 0.0;
  for (int j = 0; j < n; ++j) {
    const int mj = (j + n / 2) % n - n / 2;
    for (int i = 0; i < n; ++i) {
      const int mi = (i + n / 2) % n - n / 2;
      const double e = std::norm(spectrum(i, j));
      const int bin = std::min(nbins - 1,
                               static_cast<int>(std::sqrt(double(mi) * mi + double(mj) * mj)));
      ring[bin] += e;
      total += e;
    }
  }
  double cum = 0.0;
  int occupied = 0;
  for (int b = 0; b < nbins; ++b) {
    cum += ring[b];
    if (cum >= 0.99 * total) {
      occupied = b;
      break;
    }
  }
  const double kappa_occ = occupied * dk;
  if (std::abs(distance) * kappa_occ / k > 0.5 * window) {
    throw std::invalid_argument(
        "fresnel_propagate: occupied band would wrap around the window "
        "(displacement " +
        std::to_string(std::abs(distance) * kappa_occ / k) + " lambda)");
  }

  spectrum *= fresnel_kernel(n, dk, distance, k);
  Field out;
  out.pitch = f.pitch;
  out.plane = f.plane;
  out.values = fft2(spectrum, +1) * std::polar(1.0 / (double(n) * n), k * distance);
  return out;
}

Field incoming_field(const OpticsConfig& cfg, const Field& screen, std::uint64_t seed) {
  Field w = slm_illumination(cfg, seed);
  w.values *= screen.values;
  Field out = fresnel_propagate(w, cfg.L, cfg.k0());
  out.plane = Plane::Sample;
  return out;
}

Field incoming_field(const OpticsConfig& cfg, const RealField& profile, std::uint64_t seed) {
  return incoming_field(cfg, screen_phase(cfg, profile, cfg.k0()), seed);
}

Field incoming_field(const OpticsConfig& cfg, std::uint64_t seed) {
  RealField profile = screen_profile(cfg, seed);
  return incoming_field(cfg, profile, seed);
}

Field green_full(const OpticsConfig& cfg, const Vec2& x_j, const RealField& profile,
                 double k) {
  const int n = cfg.grid_points;
  const double h = cfg.pitch();
  // The source chirp frequencies that reach the camera satisfy
  // |freq| <= k L_C / z_s (the stationary point of camera point u sits at
  // x_j + L u / z_s); reject when even that band is undersampled. Pupil
  // regions beyond every camera stationary point may alias at a low level
  // when k R_s / L exceeds the grid band; validate() reports that case.
  const double chirp_step = k * cfg.camera_half_side() / cfg.z_s * h;
  if (chirp_step > kPi) {
    throw std::invalid_argument(
        "green_full: camera-band source chirp advances " + std::to_string(chirp_step) +
        " rad per pixel (aliasing); refine the grid");
  }

  Field integrand = screen_phase(cfg, profile, k);
  for (int j = 0; j < n; ++j) {
    const double y = (j - n / 2) * h - x_j.y();
    for (int i = 0; i < n; ++i) {
      if (integrand.values(i, j) == cd(0.0, 0.0)) continue;
      const double x = (i - n / 2) * h - x_j.x();
      integrand.values(i, j) *= std::polar(1.0, k * (x * x + y * y) / (2.0 * cfg.L));
    }
  }

  Field out = conjugate_plane_transform(integrand, k, cfg.z_s, -1, Plane::Camera);
  const double qu = out.pitch;
  const double quad = k * cfg.L / (2.0 * cfg.z_s * cfg.z_s);
  for (int j = 0; j < n; ++j) {
    const double uy = (j - n / 2) * qu;
    for (int i = 0; i < n; ++i) {
      const double ux = (i - n / 2) * qu;
      out.values(i, j) *= std::polar(1.0, quad * (ux * ux + uy * uy));
    }
  }
  out.values *= std::polar(1.0, k * (2.0 * cfg.z_s - cfg.L));
  return out;
}

cd green_rgo(const OpticsConfig& cfg, const Vec2& u, const Vec2& x_j,
             const RealField& profile, double k) {
  const Vec2 trace = x_j + (cfg.L / cfg.z_s) * u;
  const double r_s = cfg.screen_radius();
  if (trace.squaredNorm() > r_s * r_s) return cd(0.0, 0.0);
  const double s = cfg.screen_sigma() * interpolate(profile.values, profile.grid(), trace);
  return std::polar(1.0, -k * u.dot(x_j) / cfg.z_s + k * s);
}

VectorXcd green_rgo_camera(const OpticsConfig& cfg, const Vec2& x_j,
                           const RealField& profile, double k) {
  const CameraGrid cam = camera_grid(cfg, k);
  const int n = cfg.grid_points;
  VectorXcd out(cam.pixels());
  Eigen::Index idx = 0;
  for (int j = 0; j < cam.count; ++j) {
    const double uy = cam.coord(j, n);
    for (int i = 0; i < cam.count; ++i) {
      out(idx++) = green_rgo(cfg, Vec2(cam.coord(i, n), uy), x_j, profile, k);
    }
  }
  return out;
}

VectorXcd camera_samples(const Field& camera_field, const CameraGrid& cam) {
  VectorXcd out(cam.pixels());
  Eigen::Index idx = 0;
  for (int j = 0; j < cam.count; ++j) {
    for (int i = 0; i < cam.count; ++i) {
      out(idx++) = camera_field.values(cam.first + i, cam.first + j);
    }
  }
  return out;
}

std::pair<double, double> stationary_phase_validity(const OpticsConfig& cfg, double k) {
  const double r_s = cfg.screen_radius();
  const double a1 = cfg.z_s / (k * r_s * r_s);
  const double a2 = cfg.screen_sigma() * cfg.L / (cfg.screen_correlation_length * r_s);
  return {a1, a2};
}

}  // namespace bssim
