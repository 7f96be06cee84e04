#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "freqdisc/image.hpp"

namespace freqdisc {

enum class Corruption { gaussian_noise, shot_noise, impulse_noise, contrast, fog_haze };

Corruption parse_corruption(const std::string& name);
std::string to_string(Corruption kind);

/// Severity 0 is the identity; 1..5 follow a fixed parameter ladder per kind.
/// Output is clamped to [0,1].
ImageTensor corrupt(const ImageTensor& image, Corruption kind, int severity, Rng& rng);

struct SyntheticSpec {
  int num_classes = 8;
  int num_known = 4;
  int samples_per_class = 40;  // per class, per domain
  int channels = 3;
  int height = 32;
  int width = 32;
  Corruption corruption = Corruption::gaussian_noise;
  int severity = 4;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Largest number of classes the procedural family grid can tell apart.
inline constexpr int kMaxSyntheticClasses = 32;

/// One generated or loaded image with its hidden ground truth.
struct Sample {
  std::string id;
  ImageTensor image;
  int label = 0;
  int domain = 0;  // 0 = known domain (A), 1 = unknown domain (B)
};

/// Renders one sample of class `cls`; a pure function of its arguments.
ImageTensor render_class_sample(const SyntheticSpec& spec, int cls, std::uint64_t sample_seed);

/// Clean samples for every class. `domain` selects an independent draw stream
/// (domain 1 samples are separate draws, not copies of domain 0).
std::vector<Sample> generate_classes(const SyntheticSpec& spec, int domain);

/// Every image of the given set corrupted with the given kind, severity and seed.
std::vector<Sample> corrupt_all(std::vector<Sample> samples, const SyntheticSpec& spec);

struct DatasetSplit {
  int num_classes = 0;
  int num_known = 0;
  std::vector<Sample> labeled;    // domain A, classes < num_known
  std::vector<Sample> unlabeled;  // everything else

  bool is_old(int cls) const { return cls < num_known; }
};

/// Half of each known class's domain-A samples (chosen at random) become the
/// labeled set; the rest of A and all of B are unlabeled.
DatasetSplit make_split(const std::vector<Sample>& clean_a, const std::vector<Sample>& corrupted_b,
                        int num_classes, int num_known, Rng& rng);

/// generate_classes + corrupt_all + make_split, with every image snapped to
/// 8-bit levels so a PNG round trip is exact.
DatasetSplit generate_benchmark(const SyntheticSpec& spec);

/// root/{labeled,unlabeled}/<id>.png, manifest.csv and dataset.json.
void write_dataset(const DatasetSplit& split, const std::filesystem::path& root);
DatasetSplit read_dataset(const std::filesystem::path& root);

/// Directory-per-class PNG folder; classes are indexed by sorted directory
/// name and every image is resampled to height x width.
std::vector<Sample> load_image_folder(const std::filesystem::path& root, int domain, int height,
                                      int width);

}  // namespace freqdisc
