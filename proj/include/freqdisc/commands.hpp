#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "freqdisc/config.hpp"
#include "freqdisc/datagen.hpp"

namespace freqdisc {

/// Command-line switches shared by every subcommand.
struct CommandOptions {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  bool baseline = false;
  bool no_fds = false;
  bool no_cdfp = false;
  bool no_idfp = false;
  bool no_cdas = false;
  bool no_class_aware = false;
  bool force = false;
  std::string out;
  std::string dataset;      // evaluate: dataset directory holding manifest.csv
  std::string predictions;  // evaluate: sample_id,prediction CSV
  int preview_pairs = 4;
};

/// Loads the config file (defaults when none is given) and applies the flags.
RunConfig resolve_config(const CommandOptions& options);

/// Dataset named by the config: a generated directory, a pair of image
/// folders, or the synthetic benchmark built in memory.
DatasetSplit load_split(const RunConfig& config);

void cmd_generate(const CommandOptions& options);
void cmd_separate(const CommandOptions& options);
void cmd_train(const CommandOptions& options);
void cmd_evaluate(const CommandOptions& options);
void cmd_perturb_preview(const CommandOptions& options);

}  // namespace freqdisc
