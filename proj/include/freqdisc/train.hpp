#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "freqdisc/config.hpp"
#include "freqdisc/datagen.hpp"
#include "freqdisc/domain_sep.hpp"
#include "freqdisc/evaluation.hpp"
#include "freqdisc/model.hpp"
#include "freqdisc/sampler.hpp"

namespace freqdisc {

struct StepMetrics {
  std::int64_t step = 0;
  int epoch = 0;
  double l_kd = 0;
  double l_ud = 0;
  double entropy = 0;  // the regularizer value before weighting
  double l_total = 0;
  double lr = 0;
  double tau_t = 0;
  double l_cdas = 0;
};

struct EpochEval {
  int epoch = 0;  // 1-based count of completed epochs
  EvalReport report;
  double marginal_entropy = 0;
};

struct TrainCounters {
  std::int64_t cdfp_calls = 0;
  std::int64_t cdfp_class_matched = 0;
  std::int64_t cdfp_identity = 0;
  std::int64_t idfp_calls = 0;
  std::int64_t cdas_embeddings = 0;
};

struct TrainResult {
  ModelState state;
  std::vector<StepMetrics> steps;
  std::vector<EpochEval> evals;
  EvalReport final_report;
  std::vector<int> predictions;  // one per unlabeled sample
  double marginal_entropy = 0;   // entropy of the mean unlabeled prediction
  std::optional<DomainPartition> partition;
  std::optional<DifficultyStats> difficulty;
  TrainCounters counters;
};

/// Trains on the split. With a non-empty out_dir every artifact of the run is
/// written there (checkpoints, metrics, partition, difficulty tables, report).
TrainResult train(const RunConfig& config, const DatasetSplit& data,
                  const std::filesystem::path& out_dir = {});

/// Argmax predictions of the classifier on clean images, batched.
std::vector<int> predict(const ModelState& state, std::span<const ImageTensor* const> images,
                         double tau_cls, Matrix* probs_out = nullptr);

/// ClusterAcc over the unlabeled samples with their hidden labels and domains.
EvalReport evaluate_split(const DatasetSplit& data, std::span<const int> predictions);

std::string metrics_csv(std::span<const StepMetrics> steps);

/// Worker count: hardware concurrency capped by FREQDISC_THREADS when set.
int worker_threads();

}  // namespace freqdisc
