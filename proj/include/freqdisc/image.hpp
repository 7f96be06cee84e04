#pragma once

#include <span>
#include <vector>

#include "freqdisc/common.hpp"

namespace freqdisc {

/// Real-valued C x H x W pixel grid, row-major per channel, nominal range [0,1].
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(int channels, int height, int width, double fill = 0.0);
  ImageTensor(int channels, int height, int width, std::vector<double> data);

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  std::size_t plane_size() const {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }
  bool empty() const { return data_.empty(); }

  double& at(int c, int y, int x) { return data_[index(c, y, x)]; }
  double at(int c, int y, int x) const { return data_[index(c, y, x)]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> channel(int c) { return {data_.data() + c * plane_size(), plane_size()}; }
  std::span<const double> channel(int c) const {
    return {data_.data() + c * plane_size(), plane_size()};
  }

  bool same_shape(const ImageTensor& other) const {
    return channels_ == other.channels_ && height_ == other.height_ && width_ == other.width_;
  }

  /// Throws Error if any value is NaN or infinite.
  void require_finite() const;
  void clamp01();

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

 private:
  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
  }

  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

double max_abs_diff(const ImageTensor& a, const ImageTensor& b);

/// Snap every value to the nearest 8-bit level k/255 (round half up), the
/// exact set of values a PNG round trip preserves.
void quantize8(ImageTensor& image);

/// Bilinear resampling of the source rectangle [y0, y0+h) x [x0, x0+w) onto
/// an out_h x out_w grid (pixel-center alignment).
ImageTensor resample(const ImageTensor& src, double y0, double x0, double h, double w, int out_h,
                     int out_w);

}  // namespace freqdisc
