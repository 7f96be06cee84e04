#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace oracle {

/// Direct double sum over one H x W real plane; output centered like fft2
/// (DC at floor(H/2), floor(W/2)).
inline std::vector<std::complex<double>> centered_dft(const double* plane, int H, int W) {
  std::vector<std::complex<double>> out(static_cast<std::size_t>(H) * W);
  for (int u = 0; u < H; ++u) {
    for (int v = 0; v < W; ++v) {
      std::complex<double> acc = 0;
      for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
          const double angle =
              -2.0 * std::numbers::pi * (static_cast<double>(u) * y / H + static_cast<double>(v) * x / W);
          acc += plane[y * W + x] * std::polar(1.0, angle);
        }
      }
      const int cu = (u + H / 2) % H;
      const int cv = (v + W / 2) % W;
      out[static_cast<std::size_t>(cu) * W + cv] = acc;
    }
  }
  return out;
}

/// Inverse of centered_dft by direct summation; returns the real part.
inline std::vector<double> centered_idft_real(const std::vector<std::complex<double>>& spec, int H,
                                              int W) {
  std::vector<double> out(static_cast<std::size_t>(H) * W);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      std::complex<double> acc = 0;
      for (int u = 0; u < H; ++u) {
        for (int v = 0; v < W; ++v) {
          const int cu = (u + H / 2) % H;
          const int cv = (v + W / 2) % W;
          const double angle =
              2.0 * std::numbers::pi * (static_cast<double>(u) * y / H + static_cast<double>(v) * x / W);
          acc += spec[static_cast<std::size_t>(cu) * W + cv] * std::polar(1.0, angle);
        }
      }
      out[static_cast<std::size_t>(y) * W + x] = acc.real() / (H * W);
    }
  }
  return out;
}

}  // namespace oracle
