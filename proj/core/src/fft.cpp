#include "bssim/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

namespace bssim {

namespace {

class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(int n0, int n1, int sign) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_tuple(n0, n1, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    // Dummy buffers only shape the plan; execution uses fftw_execute_dft
    // with caller arrays (FFTW_UNALIGNED keeps that legal for any buffer).
    std::vector<fftw_complex> in(static_cast<size_t>(n0) * n1);
    std::vector<fftw_complex> out(static_cast<size_t>(n0) * n1);
    fftw_plan p = fftw_plan_dft_2d(n0, n1, in.data(), out.data(), sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!p) throw std::runtime_error("fftw_plan_dft_2d failed");
    plans_.emplace(key, p);
    return p;
  }

 private:
  PlanCache() = default;
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

}  // namespace

ArrayXXcd fft2(const ArrayXXcd& in, int sign) {
  const int n0 = static_cast<int>(in.rows());
  const int n1 = static_cast<int>(in.cols());
  ArrayXXcd work = in;
  ArrayXXcd out(n0, n1);
  fftw_plan p = PlanCache::instance().get(n0, n1, sign);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(work.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

ArrayXXcd centered_dft(const ArrayXXcd& in, int sign) {
  const int n = static_cast<int>(in.rows());
  if (n % 2 != 0 || in.cols() != n) {
    throw std::invalid_argument("centered_dft requires a square even-sized grid");
  }
  ArrayXXcd shifted(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      shifted(i, j) = ((i + j) & 1) ? -in(i, j) : in(i, j);
    }
  }
  ArrayXXcd out = fft2(shifted, sign);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      if ((i + j) & 1) out(i, j) = -out(i, j);
    }
  }
  return out;
}

Field conjugate_plane_transform(const Field& in, double k, double z_s, int sign,
                                Plane out_plane) {
  Field out;
  out.values = centered_dft(in.values, sign) * (in.pitch * in.pitch);
  out.pitch = 2.0 * kPi * z_s / (k * in.n() * in.pitch);
  out.plane = out_plane;
  return out;
}

}  // namespace bssim
