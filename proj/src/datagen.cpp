#include "freqdisc/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "freqdisc/image_io.hpp"

namespace freqdisc {
namespace {

constexpr double kGaussianSigma[] = {0, .04, .08, .12, .18, .26};
constexpr double kShotPhotons[] = {0, 60, 25, 12, 5, 3};  // index 0 unused (no noise)
constexpr double kImpulseFraction[] = {0, .01, .03, .06, .1, .17};
constexpr double kBlendFactor[] = {0, .15, .3, .45, .6, .75};

enum class Shape { disk, square, stripes, rings };

struct ClassFamily {
  double hue;        // degrees
  Shape shape;
  double frequency;  // cycles across the object for stripes / rings
  double orientation;
};

ClassFamily family(int cls) {
  // 8 base hues x 4 blocks. Each block sits between earlier hues and takes a
  // shape its nearest hue neighbours do not use.
  const int hue_idx = cls % 8;
  const int block = cls / 8;
  ClassFamily f;
  static constexpr double kBlockHue[4] = {0.0, 22.5, 11.25, 33.75};
  static constexpr int kBlockShape[4] = {0, 2, 1, 3};
  f.hue = hue_idx * 45.0 + kBlockHue[block];
  f.shape = static_cast<Shape>((hue_idx + kBlockShape[block]) % 4);
  f.frequency = 2.0 + (cls % 3) + 0.5 * block;
  f.orientation = (cls % 4) * std::numbers::pi / 4.0;
  return f;
}

void hsv_to_rgb(double h, double s, double v, double rgb[3]) {
  h = std::fmod(std::fmod(h, 360.0) + 360.0, 360.0) / 60.0;
  const int i = static_cast<int>(h) % 6;
  const double f = h - std::floor(h);
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  const double table[6][3] = {{v, t, p}, {q, v, p}, {p, v, t}, {p, q, v}, {t, p, v}, {v, p, q}};
  for (int c = 0; c < 3; ++c) rgb[c] = table[i][c];
}

std::string sample_id(int domain, int cls, int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c_c%02d_%04d", domain == 0 ? 'A' : 'B', cls, index);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

Corruption parse_corruption(const std::string& name) {
  static const std::map<std::string, Corruption> kinds = {
      {"gaussian_noise", Corruption::gaussian_noise}, {"shot_noise", Corruption::shot_noise},
      {"impulse_noise", Corruption::impulse_noise},   {"contrast", Corruption::contrast},
      {"fog_haze", Corruption::fog_haze}};
  auto it = kinds.find(name);
  if (it == kinds.end()) throw Error("unknown corruption kind '" + name + "'");
  return it->second;
}

std::string to_string(Corruption kind) {
  switch (kind) {
    case Corruption::gaussian_noise: return "gaussian_noise";
    case Corruption::shot_noise: return "shot_noise";
    case Corruption::impulse_noise: return "impulse_noise";
    case Corruption::contrast: return "contrast";
    case Corruption::fog_haze: return "fog_haze";
  }
  return "unknown";
}

ImageTensor corrupt(const ImageTensor& image, Corruption kind, int severity, Rng& rng) {
  if (severity < 0 || severity > 5) throw Error("corrupt: severity must lie in 0..5");
  if (severity == 0) return image;
  ImageTensor out = image;
  auto data = out.data();
  switch (kind) {
    case Corruption::gaussian_noise: {
      std::normal_distribution<double> noise(0.0, 1.0);
      for (double& v : data) v += kGaussianSigma[severity] * noise(rng);
      break;
    }
    case Corruption::shot_noise: {
      const double photons = kShotPhotons[severity];
      for (double& v : data) {
        std::poisson_distribution<long> poisson(std::max(v, 0.0) * photons);
        v = (v > 0 ? static_cast<double>(poisson(rng)) : 0.0) / photons;
      }
      break;
    }
    case Corruption::impulse_noise: {
      // Two draws per value regardless of outcome keep the corrupted set
      // nested across severities for a fixed seed.
      for (double& v : data) {
        const double hit = uniform01(rng);
        const double salt = uniform01(rng);
        if (hit < kImpulseFraction[severity]) v = salt < 0.5 ? 0.0 : 1.0;
      }
      break;
    }
    case Corruption::contrast: {
      double mean = 0;
      for (double v : data) mean += v;
      mean /= static_cast<double>(data.size());
      const double f = kBlendFactor[severity];
      for (double& v : data) v = (1 - f) * v + f * mean;
      break;
    }
    case Corruption::fog_haze: {
      const double f = kBlendFactor[severity];
      for (double& v : data) v = (1 - f) * v + f;
      break;
    }
  }
  out.clamp01();
  return out;
}

void SyntheticSpec::validate() const {
  if (num_classes < 1 || num_classes > kMaxSyntheticClasses) {
    throw Error("SyntheticSpec: num_classes must lie in 1.." + std::to_string(kMaxSyntheticClasses));
  }
  if (num_known < 1 || num_known > num_classes) throw Error("SyntheticSpec: need 1 <= known <= classes");
  if (samples_per_class < 0) throw Error("SyntheticSpec: negative samples_per_class");
  if (channels != 3 && channels != 1) throw Error("SyntheticSpec: channels must be 1 or 3");
  if (height < 4 || width < 4) throw Error("SyntheticSpec: image too small");
  if (severity < 0 || severity > 5) throw Error("SyntheticSpec: severity must lie in 0..5");
}

ImageTensor render_class_sample(const SyntheticSpec& spec, int cls, std::uint64_t sample_seed) {
  if (cls < 0 || cls >= kMaxSyntheticClasses) throw Error("render_class_sample: class out of range");
  const ClassFamily fam = family(cls);
  Rng rng(sample_seed);
  const int H = spec.height;
  const int W = spec.width;
  const double size = std::min(H, W);

  const double cy = H / 2.0 + uniform_range(rng, -0.12, 0.12) * H;
  const double cx = W / 2.0 + uniform_range(rng, -0.12, 0.12) * W;
  const double radius = 0.3 * size * uniform_range(rng, 0.8, 1.2);
  const double hue = fam.hue + uniform_range(rng, -8.0, 8.0);
  double fg[3];
  hsv_to_rgb(hue, uniform_range(rng, 0.6, 0.8), uniform_range(rng, 0.75, 0.95), fg);
  const double bg_level = uniform_range(rng, 0.3, 0.45);
  const double bg_tilt = uniform_range(rng, -0.08, 0.08);
  const double phase = uniform_range(rng, 0.0, 2.0 * std::numbers::pi);
  const double co = std::cos(fam.orientation);
  const double so = std::sin(fam.orientation);

  ImageTensor img(spec.channels, H, W);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const double dy = y + 0.5 - cy;
      const double dx = x + 0.5 - cx;
      const double r = std::hypot(dx, dy);
      double mix = 0;  // 1 = foreground color
      switch (fam.shape) {
        case Shape::disk:
          mix = r <= radius ? 1.0 : 0.0;
          break;
        case Shape::square:
          mix = (std::abs(dx) <= 0.85 * radius && std::abs(dy) <= 0.85 * radius) ? 1.0 : 0.0;
          break;
        case Shape::stripes:
          if (std::abs(dx) <= radius && std::abs(dy) <= radius) {
            const double t = (dx * co + dy * so) / (2 * radius);
            mix = 0.5 + 0.5 * std::cos(2 * std::numbers::pi * fam.frequency * t + phase);
          }
          break;
        case Shape::rings:
          if (r <= radius) mix = 0.5 + 0.5 * std::cos(2 * std::numbers::pi * fam.frequency * r / (2 * radius));
          break;
      }
      const double bg = bg_level + bg_tilt * (x + 0.5 - W / 2.0) / W;
      if (spec.channels == 3) {
        for (int c = 0; c < 3; ++c) img.at(c, y, x) = mix * fg[c] + (1 - mix) * bg;
      } else {
        const double lum = 0.299 * fg[0] + 0.587 * fg[1] + 0.114 * fg[2];
        img.at(0, y, x) = mix * lum + (1 - mix) * bg;
      }
    }
  }
  img.clamp01();
  return img;
}

std::vector<Sample> generate_classes(const SyntheticSpec& spec, int domain) {
  spec.validate();
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(spec.num_classes) * spec.samples_per_class);
  for (int c = 0; c < spec.num_classes; ++c) {
    for (int i = 0; i < spec.samples_per_class; ++i) {
      const std::uint64_t seed =
          mix_seed(mix_seed(spec.seed, static_cast<std::uint64_t>(domain)),
                   static_cast<std::uint64_t>(c) * 1000003ULL + static_cast<std::uint64_t>(i));
      out.push_back({sample_id(domain, c, i), render_class_sample(spec, c, seed), c, domain});
    }
  }
  return out;
}

std::vector<Sample> corrupt_all(std::vector<Sample> samples, const SyntheticSpec& spec) {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    Rng rng(mix_seed(mix_seed(spec.seed, 0xC0FFEEULL), i));
    samples[i].image = corrupt(samples[i].image, spec.corruption, spec.severity, rng);
  }
  return samples;
}

DatasetSplit make_split(const std::vector<Sample>& clean_a, const std::vector<Sample>& corrupted_b,
                        int num_classes, int num_known, Rng& rng) {
  if (num_known < 1 || num_known > num_classes) throw Error("make_split: need 1 <= known <= classes");
  DatasetSplit split;
  split.num_classes = num_classes;
  split.num_known = num_known;
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < clean_a.size(); ++i) {
    const int c = clean_a[i].label;
    if (c < 0 || c >= num_classes) throw Error("make_split: label out of range");
    by_class[static_cast<std::size_t>(c)].push_back(i);
  }
  std::vector<char> is_labeled(clean_a.size(), 0);
  for (int c = 0; c < num_known; ++c) {
    auto& idx = by_class[static_cast<std::size_t>(c)];
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t k = 0; k < idx.size() / 2; ++k) is_labeled[idx[k]] = 1;
  }
  for (std::size_t i = 0; i < clean_a.size(); ++i) {
    (is_labeled[i] ? split.labeled : split.unlabeled).push_back(clean_a[i]);
  }
  for (const auto& s : corrupted_b) {
    if (s.label < 0 || s.label >= num_classes) throw Error("make_split: label out of range");
    split.unlabeled.push_back(s);
  }
  return split;
}

DatasetSplit generate_benchmark(const SyntheticSpec& spec) {
  spec.validate();
  std::vector<Sample> a = generate_classes(spec, 0);
  std::vector<Sample> b = corrupt_all(generate_classes(spec, 1), spec);
  for (auto* set : {&a, &b})
    for (auto& s : *set) quantize8(s.image);
  Rng rng(mix_seed(spec.seed, 0x5917ULL));
  return make_split(a, b, spec.num_classes, spec.num_known, rng);
}

void write_dataset(const DatasetSplit& split, const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  fs::create_directories(root / "labeled");
  fs::create_directories(root / "unlabeled");
  std::ofstream manifest(root / "manifest.csv");
  if (!manifest) throw Error("write_dataset: cannot write manifest in " + root.string());
  manifest << "sample_id,split,label_or_blank,hidden_label,hidden_domain,class_is_old\n";
  auto emit = [&](const Sample& s, bool labeled) {
    write_png(root / (labeled ? "labeled" : "unlabeled") / (s.id + ".png"), s.image);
    manifest << s.id << ',' << (labeled ? "labeled" : "unlabeled") << ','
             << (labeled ? std::to_string(s.label) : "") << ',' << s.label << ','
             << (s.domain == 0 ? 'A' : 'B') << ',' << (split.is_old(s.label) ? 1 : 0) << '\n';
  };
  for (const auto& s : split.labeled) emit(s, true);
  for (const auto& s : split.unlabeled) emit(s, false);
  nlohmann::json meta = {{"num_classes", split.num_classes}, {"num_known", split.num_known},
                         {"labeled", split.labeled.size()}, {"unlabeled", split.unlabeled.size()}};
  std::ofstream(root / "dataset.json") << meta.dump(2) << '\n';
}

DatasetSplit read_dataset(const std::filesystem::path& root) {
  std::ifstream meta_in(root / "dataset.json");
  if (!meta_in) throw Error("read_dataset: no dataset.json under " + root.string());
  nlohmann::json meta = nlohmann::json::parse(meta_in);
  DatasetSplit split;
  split.num_classes = meta.at("num_classes").get<int>();
  split.num_known = meta.at("num_known").get<int>();

  std::ifstream manifest(root / "manifest.csv");
  if (!manifest) throw Error("read_dataset: no manifest.csv under " + root.string());
  std::string line;
  std::getline(manifest, line);
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != 6) throw Error("read_dataset: malformed manifest row: " + line);
    Sample s;
    s.id = cells[0];
    const bool labeled = cells[1] == "labeled";
    s.label = std::stoi(cells[3]);
    s.domain = cells[4] == "A" ? 0 : 1;
    s.image = read_png(root / cells[1] / (s.id + ".png"));
    (labeled ? split.labeled : split.unlabeled).push_back(std::move(s));
  }
  return split;
}

std::vector<Sample> load_image_folder(const std::filesystem::path& root, int domain, int height,
                                      int width) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw Error("load_image_folder: not a directory: " + root.string());
  std::vector<fs::path> class_dirs;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory()) class_dirs.push_back(e.path());
  std::sort(class_dirs.begin(), class_dirs.end());
  std::vector<Sample> out;
  for (std::size_t c = 0; c < class_dirs.size(); ++c) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(class_dirs[c]))
      if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (std::size_t i = 0; i < files.size(); ++i) {
      ImageTensor img = read_png(files[i]);
      if (img.height() != height || img.width() != width) {
        img = resample(img, 0, 0, img.height(), img.width(), height, width);
      }
      out.push_back({std::string(domain == 0 ? "A_" : "B_") + class_dirs[c].filename().string() +
                         "_" + files[i].stem().string(),
                     std::move(img), static_cast<int>(c), domain});
    }
  }
  return out;
}

}  // namespace freqdisc
