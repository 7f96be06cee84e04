#pragma once

#include <variant>
#include <vector>

#include "freqdisc/image.hpp"

namespace freqdisc {

struct HorizontalFlip {
  double probability = 0.5;
};

/// Square crop covering a random area fraction in [min_scale, max_scale],
/// resized back to the input resolution.
struct RandomResizedCrop {
  double min_scale = 0.6;
  double max_scale = 1.0;
};

/// Adds a uniform offset in [-range, range].
struct BrightnessJitter {
  double range = 0.1;
};

/// Scales deviations from the per-channel mean by a factor in [1-range, 1+range].
struct ContrastJitter {
  double range = 0.1;
};

using Transform = std::variant<HorizontalFlip, RandomResizedCrop, BrightnessJitter, ContrastJitter>;

/// Ordered transform pipeline; an empty list is the identity.
struct AugmentationSpec {
  std::vector<Transform> transforms;

  ImageTensor apply(const ImageTensor& image, Rng& rng) const;

  static AugmentationSpec identity() { return {}; }
  static AugmentationSpec standard();
};

}  // namespace freqdisc
