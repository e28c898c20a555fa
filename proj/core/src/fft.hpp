#pragma once

#include <complex>
#include <span>

namespace speckle::detail {

/// In-place 2D DFT of a row-major width x height buffer. The inverse is
/// unnormalized, matching FFTW (divide by width*height yourself).
void fft2d(std::span<std::complex<double>> data, int width, int height, bool inverse);

}  // namespace speckle::detail
