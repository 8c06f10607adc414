#include "odp/fft.hpp"

#include <cmath>
#include <utility>

namespace odp {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

void fft_radix2(std::complex<double>* a, int n, bool inverse) {
  // Bit-reversal permutation.
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const double sign = inverse ? 1.0 : -1.0;
  for (int len = 2; len <= n; len <<= 1) {
    const double ang = sign * kTwoPi / len;
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (int i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (int k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

void dft_naive(std::complex<double>* a, int n, bool inverse) {
  const double sign = inverse ? 1.0 : -1.0;
  // Twiddle table for exp(sign*2*pi*i*m/n), m in [0, n).
  std::vector<std::complex<double>> tw(static_cast<std::size_t>(n));
  for (int m = 0; m < n; ++m) {
    const double ang = sign * kTwoPi * m / n;
    tw[m] = {std::cos(ang), std::sin(ang)};
  }
  std::vector<std::complex<double>> out(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (int t = 0; t < n; ++t) {
      acc += a[t] * tw[static_cast<std::size_t>(k) * t % n];
    }
    out[k] = acc;
  }
  for (int k = 0; k < n; ++k) a[k] = out[k];
}

}  // namespace

void fft_1d(std::complex<double>* data, int n, bool inverse) {
  if (n <= 1) return;
  if (is_pow2(n)) {
    fft_radix2(data, n, inverse);
  } else {
    dft_naive(data, n, inverse);
  }
}

void fft_2d(std::vector<std::complex<double>>& data, int width, int height,
            bool inverse) {
  // Rows first, then columns through a gather/scatter buffer.
  for (int r = 0; r < height; ++r) {
    fft_1d(&data[static_cast<std::size_t>(r) * width], width, inverse);
  }
  std::vector<std::complex<double>> col(static_cast<std::size_t>(height));
  for (int c = 0; c < width; ++c) {
    for (int r = 0; r < height; ++r) {
      col[r] = data[static_cast<std::size_t>(r) * width + c];
    }
    fft_1d(col.data(), height, inverse);
    for (int r = 0; r < height; ++r) {
      data[static_cast<std::size_t>(r) * width + c] = col[r];
    }
  }
  if (inverse) {
    const double scale = 1.0 / (static_cast<double>(width) * height);
    for (auto& z : data) z *= scale;
  }
}

}  // namespace odp
