#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "freqdisc/image.hpp"

namespace freqdisc {

struct DescriptorOptions {
  bool log_amplitude = false;  // log1p(A) instead of A
  bool pool_large = true;      // 2x2 average pooling when H*W > 64*64
};

/// Flattened centered amplitude spectrum over all channels.
struct AmplitudeDescriptor {
  std::vector<double> values;
  std::string source_id;
};

AmplitudeDescriptor amplitude_descriptor(const ImageTensor& image, std::string source_id = {},
                                         const DescriptorOptions& options = {});

double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Amplitude descriptors of labeled known-domain samples. Stores unit-normalized
/// copies so density queries reduce to dot products.
class AnchorSet {
 public:
  explicit AnchorSet(std::vector<AmplitudeDescriptor> descriptors);

  std::size_t size() const { return unit_.size(); }
  std::size_t dim() const { return dim_; }
  std::span<const double> unit(std::size_t i) const { return unit_[i]; }

 private:
  std::size_t dim_ = 0;
  std::vector<std::vector<double>> unit_;
};

/// Mean cosine similarity between the query and its k most similar anchors.
double knn_density(const AmplitudeDescriptor& query, const AnchorSet& anchors, int k);

enum class Domain { known, unknown };

std::string to_string(Domain d);

struct GaussianComponent {
  double mean = 0;
  double variance = 1;
  double weight = 0.5;
};

/// Two-component 1-D mixture over density scores; "known" is always the
/// component with the larger mean.
struct GmmModel {
  GaussianComponent known;
  GaussianComponent unknown;
  std::vector<double> log_likelihood_trace;
  int iterations = 0;

  double final_log_likelihood() const {
    return log_likelihood_trace.empty() ? 0.0 : log_likelihood_trace.back();
  }
  nlohmann::json to_json() const;
};

struct EmOptions {
  int max_iter = 200;
  double tol = 1e-10;
  double variance_floor = 1e-6;
};

/// EM fit initialized by a median split of the sorted scores. Throws Error on
/// fewer than four scores or when every score is identical.
GmmModel fit_gmm_1d(std::span<const double> scores, const EmOptions& options = {});

/// Total log-likelihood of the scores under the mixture.
double gmm_log_likelihood(const GmmModel& model, std::span<const double> scores);

/// Posterior probability of the known component for one score.
double posterior_known(const GmmModel& model, double score);

struct DomainAssignment {
  std::string sample_id;
  double density = 0;
  double p_known = 0;
  Domain label = Domain::known;
};

struct DomainPartition {
  std::vector<DomainAssignment> samples;
  GmmModel model;

  void write_csv(const std::filesystem::path& path) const;
};

struct PartitionOptions {
  int k = 3;
  DescriptorOptions descriptor;
  EmOptions em;
};

/// Density-score every image against the anchors, fit the mixture, and label
/// each sample known when p_known >= 0.5. When every score is 1 (each image
/// coincides with its nearest anchors) no mixture is fit and all are known.
DomainPartition partition(std::span<const ImageTensor> images, std::span<const std::string> ids,
                          const AnchorSet& anchors, const PartitionOptions& options = {});

}  // namespace freqdisc
