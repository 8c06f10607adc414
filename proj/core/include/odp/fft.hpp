#pragma once

#include <complex>
#include <vector>

namespace odp {

/// In-place DFT of one line. Unnormalized forward; the inverse flag only
/// flips the exponent sign (no scaling here). Radix-2 when the length is a
/// power of two, direct O(n^2) evaluation otherwise.
void fft_1d(std::complex<double>* data, int n, bool inverse);

/// 2D DFT of row-major data (height rows of width columns). Forward is
/// unnormalized; inverse applies the 1/(w*h) factor.
void fft_2d(std::vector<std::complex<double>>& data, int width, int height,
            bool inverse);

}  // namespace odp
