#include "freqdisc/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <utility>

namespace freqdisc {
namespace {

// FFTW planning is not thread-safe, execution with the new-array interface is.
// Plans are created once per (H, W, sign) and kept for the process lifetime.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(int h, int w, int sign) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_tuple(h, w, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    auto* in = fftw_alloc_complex(static_cast<std::size_t>(h) * w);
    auto* out = fftw_alloc_complex(static_cast<std::size_t>(h) * w);
    fftw_plan plan = fftw_plan_dft_2d(h, w, in, out, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(in);
    fftw_free(out);
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

void execute(int h, int w, int sign, std::vector<std::complex<double>>& in,
             std::vector<std::complex<double>>& out) {
  fftw_plan plan = plan_cache().get(h, w, sign);
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(in.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

}  // namespace

int FreqWindow::side(int height, int width) const {
  if (!(ratio >= 0.0 && ratio <= 0.5)) throw Error("FreqWindow: ratio must lie in [0, 0.5]");
  return static_cast<int>(std::floor(2.0 * ratio * std::min(height, width)));
}

Spectrum fft2(const ImageTensor& image) {
  if (image.empty()) throw Error("fft2: empty image");
  image.require_finite();
  const int C = image.channels();
  const int H = image.height();
  const int W = image.width();
  Spectrum s{C, H, W, {}, {}};
  s.amplitude.resize(image.size());
  s.phase.resize(image.size());
  std::vector<std::complex<double>> in(image.plane_size());
  std::vector<std::complex<double>> out(image.plane_size());
  const int ch = H / 2;
  const int cw = W / 2;
  for (int c = 0; c < C; ++c) {
    auto plane = image.channel(c);
    std::copy(plane.begin(), plane.end(), in.begin());
    execute(H, W, FFTW_FORWARD, in, out);
    for (int u = 0; u < H; ++u) {
      const int su = (u + ch) % H;
      for (int v = 0; v < W; ++v) {
        const int sv = (v + cw) % W;
        const auto z = out[static_cast<std::size_t>(u) * W + v];
        const std::size_t k = s.index(c, su, sv);
        s.amplitude[k] = std::abs(z);
        s.phase[k] = std::arg(z);
      }
    }
  }
  return s;
}

Reconstruction ifft2_raw(const Spectrum& s) {
  const std::size_t n = static_cast<std::size_t>(s.channels) * s.height * s.width;
  if (s.channels < 1 || s.height < 1 || s.width < 1 || s.amplitude.size() != n ||
      s.phase.size() != n) {
    throw Error("ifft2: amplitude/phase shape mismatch");
  }
  const int H = s.height;
  const int W = s.width;
  const int ch = H / 2;
  const int cw = W / 2;
  const double scale = 1.0 / (static_cast<double>(H) * W);
  Reconstruction r{ImageTensor(s.channels, H, W), 0.0};
  std::vector<std::complex<double>> in(static_cast<std::size_t>(H) * W);
  std::vector<std::complex<double>> out(in.size());
  for (int c = 0; c < s.channels; ++c) {
    for (int u = 0; u < H; ++u) {
      const int su = (u + ch) % H;
      for (int v = 0; v < W; ++v) {
        const int sv = (v + cw) % W;
        const std::size_t k = s.index(c, su, sv);
        in[static_cast<std::size_t>(u) * W + v] = std::polar(s.amplitude[k], s.phase[k]);
      }
    }
    execute(H, W, FFTW_BACKWARD, in, out);
    auto plane = r.image.channel(c);
    for (std::size_t i = 0; i < plane.size(); ++i) {
      plane[i] = out[i].real() * scale;
      r.max_imag = std::max(r.max_imag, std::abs(out[i].imag() * scale));
    }
  }
  return r;
}

ImageTensor ifft2(const Spectrum& spectrum) {
  ImageTensor img = ifft2_raw(spectrum).image;
  img.clamp01();
  return img;
}

Spectrum splice_low_freq(const Spectrum& donor, const Spectrum& content, FreqWindow window) {
  if (!donor.same_shape(content)) throw Error("swap_low_freq: donor/content shape mismatch");
  Spectrum out = content;
  const int s = window.side(content.height, content.width);
  if (s == 0) return out;
  const int r0 = content.height / 2 - s / 2;
  const int c0 = content.width / 2 - s / 2;
  const int r1 = std::min(r0 + s, content.height);
  const int c1 = std::min(c0 + s, content.width);
  for (int c = 0; c < content.channels; ++c) {
    for (int u = std::max(r0, 0); u < r1; ++u) {
      for (int v = std::max(c0, 0); v < c1; ++v) {
        const std::size_t k = out.index(c, u, v);
        out.amplitude[k] = donor.amplitude[k];
      }
    }
  }
  return out;
}

ImageTensor swap_low_freq(const Spectrum& donor, const Spectrum& content, FreqWindow window) {
  return ifft2(splice_low_freq(donor, content, window));
}

}  // namespace freqdisc
