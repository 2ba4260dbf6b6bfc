#pragma once

#include "bssim/types.hpp"

namespace bssim {

/// Unnormalized 2D DFT, sign = -1 forward / +1 backward (FFTW convention):
/// out(m1,m2) = sum_j in(j1,j2) exp(sign * 2*pi*i*(j1*m1 + j2*m2)/n).
/// Thread-safe; plans are cached per size.
ArrayXXcd fft2(const ArrayXXcd& in, int sign);

/// Centered DFT on an even-sized grid: indices are taken relative to the
/// grid center c = n/2 on both axes,
/// out(m) = sum_j in(j) exp(sign * 2*pi*i*(j1-c)(m1-c)/n + ...)
/// so that a field sampled at x_j = (j-c)*pitch maps to its spectrum sampled
/// at the centered dual grid with no fftshift bookkeeping at call sites.
ArrayXXcd centered_dft(const ArrayXXcd& in, int sign);

/// Maps a field between conjugate planes of a lens of focal length z_s with
/// kernel exp(sign * i * k * x.u / z_s), including the pitch^2 quadrature
/// weight of the plane integral. The output grid has
/// pitch_out = 2*pi*z_s / (k * n * pitch_in).
Field conjugate_plane_transform(const Field& in, double k, double z_s, int sign,
                                Plane out_plane);

}  // namespace bssim
