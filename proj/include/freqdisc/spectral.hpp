#pragma once

#include <vector>

#include "freqdisc/image.hpp"

namespace freqdisc {

/// Per-channel amplitude and phase of an image's 2D DFT, center-shifted so the
/// DC coefficient of an N-point axis sits at index floor(N/2).
struct Spectrum {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> amplitude;  // C*H*W, >= 0
  std::vector<double> phase;      // C*H*W, in (-pi, pi]

  std::size_t index(int c, int u, int v) const {
    return (static_cast<std::size_t>(c) * height + u) * width + v;
  }
  bool same_shape(const Spectrum& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
};

/// Square low-frequency window whose side is floor(2 * ratio * min(H, W)).
struct FreqWindow {
  double ratio = 0.04;

  int side(int height, int width) const;
};

/// Unnormalized forward DFT per channel, amplitude/phase decomposed and centered.
Spectrum fft2(const ImageTensor& image);

struct Reconstruction {
  ImageTensor image;     // real part
  double max_imag = 0;   // largest |imaginary| discarded by the projection
};

/// Inverse of fft2 (1/(H*W) scaling), real part only, without clamping.
Reconstruction ifft2_raw(const Spectrum& spectrum);

/// Inverse of fft2 followed by a clamp to [0,1].
ImageTensor ifft2(const Spectrum& spectrum);

/// Content spectrum with its centered s x s amplitude block overwritten by the
/// donor's; the phase is the content's, untouched.
Spectrum splice_low_freq(const Spectrum& style_donor, const Spectrum& content, FreqWindow window);

/// ifft2(splice_low_freq(...)), clamped to [0,1].
ImageTensor swap_low_freq(const Spectrum& style_donor, const Spectrum& content, FreqWindow window);

}  // namespace freqdisc
