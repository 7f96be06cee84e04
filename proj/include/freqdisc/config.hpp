#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "freqdisc/augment.hpp"
#include "freqdisc/datagen.hpp"
#include "freqdisc/model.hpp"
#include "freqdisc/objectives.hpp"

namespace freqdisc {

struct DataConfig {
  std::string path;      // existing dataset directory; empty -> synthesize in memory
  std::string folder_a;  // optional directory-per-class PNG folders
  std::string folder_b;
  SyntheticSpec synthetic;
};

struct DomainSepConfig {
  bool enabled = true;
  int k = 3;
  bool log_amplitude = true;
  int anchor_subsample = 0;  // 0 = use every labeled sample
  int refresh_every = 5;
};

struct PerturbationConfig {
  bool cdfp = true;
  bool idfp = true;
  bool class_aware = true;
  bool gate_both = true;
  double eta = 0.9;
  int bank_size = 256;
  double window = 0.04;
};

struct SamplerConfig {
  bool enabled = true;
  int refresh_every = 1;
  int categories = 2;
  int per_category = 16;
  double weight = 0.5;
  int capacity = 64;
  bool impute_empty = true;
  bool contrastive = true;
  bool classification = true;
};

struct AugmentConfig {
  double flip = 0.5;
  double crop_min = 0.7;
  double crop_max = 1.0;
  double brightness = 0.1;
  double contrast = 0.1;

  AugmentationSpec spec() const;
};

struct TrainConfig {
  int epochs = 60;
  int batch_size = 64;
  double lr = 0.1;
  std::uint64_t seed = 0;
  int eval_every = 5;
  std::string out = "runs/default";
};

/// Every hyperparameter of a run. Defaults are the desk-scale values.
struct RunConfig {
  DataConfig data;
  DomainSepConfig domain_sep;
  PerturbationConfig perturbation;
  ModelShape model;
  LossWeights objectives;
  SamplerConfig sampler;
  AugmentConfig augment;
  TrainConfig train;

  /// Turns off frequency separation, both perturbations and resampling.
  void set_baseline();
  void validate() const;
  nlohmann::json to_json() const;
};

/// Parses an INI-style file ("key = value", [section] headers). Unknown
/// sections or keys are rejected.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text);

std::string version_string();

}  // namespace freqdisc
