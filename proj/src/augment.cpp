#include "freqdisc/augment.hpp"

#include <algorithm>
#include <cmath>

namespace freqdisc {
namespace {

struct Applier {
  Rng& rng;
  ImageTensor& img;

  void operator()(const HorizontalFlip& t) const {
    if (uniform01(rng) >= t.probability) return;
    const int W = img.width();
    for (int c = 0; c < img.channels(); ++c)
      for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < W / 2; ++x) std::swap(img.at(c, y, x), img.at(c, y, W - 1 - x));
  }

  void operator()(const RandomResizedCrop& t) const {
    const double scale = uniform_range(rng, t.min_scale, t.max_scale);
    const double side = std::sqrt(scale);
    const double h = side * img.height();
    const double w = side * img.width();
    const double y0 = uniform01(rng) * (img.height() - h);
    const double x0 = uniform01(rng) * (img.width() - w);
    img = resample(img, y0, x0, h, w, img.height(), img.width());
  }

  void operator()(const BrightnessJitter& t) const {
    const double delta = uniform_range(rng, -t.range, t.range);
    for (double& v : img.data()) v = std::clamp(v + delta, 0.0, 1.0);
  }

  void operator()(const ContrastJitter& t) const {
    const double factor = uniform_range(rng, 1.0 - t.range, 1.0 + t.range);
    for (int c = 0; c < img.channels(); ++c) {
      auto plane = img.channel(c);
      double mean = 0;
      for (double v : plane) mean += v;
      mean /= static_cast<double>(plane.size());
      for (double& v : plane) v = std::clamp(mean + factor * (v - mean), 0.0, 1.0);
    }
  }
};

}  // namespace

ImageTensor AugmentationSpec::apply(const ImageTensor& image, Rng& rng) const {
  ImageTensor out = image;
  for (const auto& t : transforms) std::visit(Applier{rng, out}, t);
  return out;
}

AugmentationSpec AugmentationSpec::standard() {
  return {{HorizontalFlip{0.5}, RandomResizedCrop{0.7, 1.0}, BrightnessJitter{0.1},
           ContrastJitter{0.1}}};
}

}  // namespace freqdisc
