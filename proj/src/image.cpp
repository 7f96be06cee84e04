#include "freqdisc/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace freqdisc {

ImageTensor::ImageTensor(int channels, int height, int width, double fill)
    : channels_(channels), height_(height), width_(width) {
  if (channels < 1 || height < 1 || width < 1) {
    throw Error("ImageTensor: dimensions must be positive");
  }
  data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

ImageTensor::ImageTensor(int channels, int height, int width, std::vector<double> data)
    : channels_(channels), height_(height), width_(width), data_(std::move(data)) {
  if (channels < 1 || height < 1 || width < 1) {
    throw Error("ImageTensor: dimensions must be positive");
  }
  if (data_.size() != static_cast<std::size_t>(channels) * height * width) {
    throw Error("ImageTensor: data length " + std::to_string(data_.size()) +
                " does not match C*H*W");
  }
}

void ImageTensor::require_finite() const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw Error("ImageTensor: non-finite value at flat index " + std::to_string(i));
    }
  }
}

void ImageTensor::clamp01() {
  for (double& v : data_) v = std::clamp(v, 0.0, 1.0);
}

double max_abs_diff(const ImageTensor& a, const ImageTensor& b) {
  if (!a.same_shape(b)) throw Error("max_abs_diff: shape mismatch");
  double m = 0.0;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) m = std::max(m, std::abs(da[i] - db[i]));
  return m;
}

void quantize8(ImageTensor& image) {
  for (double& v : image.data()) {
    v = std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5) / 255.0;
  }
}

ImageTensor resample(const ImageTensor& src, double y0, double x0, double h, double w, int out_h,
                     int out_w) {
  ImageTensor out(src.channels(), out_h, out_w);
  const int H = src.height();
  const int W = src.width();
  const double sy = h / out_h;
  const double sx = w / out_w;
  for (int c = 0; c < src.channels(); ++c) {
    for (int oy = 0; oy < out_h; ++oy) {
      double fy = std::clamp(y0 + (oy + 0.5) * sy - 0.5, 0.0, H - 1.0);
      int iy = std::min(static_cast<int>(fy), H - 1);
      int iy1 = std::min(iy + 1, H - 1);
      double ty = fy - iy;
      for (int ox = 0; ox < out_w; ++ox) {
        double fx = std::clamp(x0 + (ox + 0.5) * sx - 0.5, 0.0, W - 1.0);
        int ix = std::min(static_cast<int>(fx), W - 1);
        int ix1 = std::min(ix + 1, W - 1);
        double tx = fx - ix;
        double top = src.at(c, iy, ix) * (1 - tx) + src.at(c, iy, ix1) * tx;
        double bot = src.at(c, iy1, ix) * (1 - tx) + src.at(c, iy1, ix1) * tx;
        out.at(c, oy, ox) = top * (1 - ty) + bot * ty;
      }
    }
  }
  return out;
}

}  // namespace freqdisc
