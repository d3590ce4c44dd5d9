#pragma once

#include <complex>
#include <span>

namespace medq::degrade {

using Complex = std::complex<double>;

/// In-place unnormalized DFTs. Forward uses exp(-2πi kn/N); inverse uses exp(+2πi kn/N).
void fft_1d(std::span<Complex> data, bool inverse);
void fft_2d(std::span<Complex> data, int rows, int cols, bool inverse);

}  // namespace medq::degrade
