#pragma once

#include <deque>
#include <filesystem>
#include <span>
#include <vector>

#include "freqdisc/model.hpp"

namespace freqdisc {

struct ClassDifficulty {
  int count = 0;         // samples predicted as this class
  double d_intra = 0;    // mean squared distance of unit embeddings to the prototype
  double d_inter = 0;    // mean cosine similarity to the other prototypes
};

struct DifficultyStats {
  std::vector<ClassDifficulty> classes;
  std::vector<double> p_difficulty;

  void write_csv(const std::filesystem::path& path) const;
};

struct DifficultyOptions {
  bool impute_empty = true;  // empty classes take the mean d_intra of populated ones
};

/// Per-class compactness and prototype separability. Embeddings are compared
/// with the prototypes after l2 normalization (the classifier's geometry).
/// predicted[i] is the hard label of row i.
DifficultyStats compute_difficulty(const Matrix& embeddings, std::span<const int> predicted,
                                   const Matrix& prototypes, const DifficultyOptions& options = {});

/// Overload taking simplex rows; the hard label is the row argmax.
DifficultyStats compute_difficulty(const Matrix& embeddings, const Matrix& probs,
                                   const Matrix& prototypes, const DifficultyOptions& options = {});

/// Softmax of d_intra + d_inter over classes (max-subtracted).
std::vector<double> sampling_probs(const DifficultyStats& stats,
                                   const DifficultyOptions& options = {});

/// Inverse-CDF categorical draw.
int sample_category(std::span<const double> probs, Rng& rng);

/// Per-class ring buffers of recent embeddings.
class FeatureBank {
 public:
  FeatureBank(int num_classes, std::size_t capacity_per_class);

  void push(int cls, const Vector& embedding);

  /// Up to n embeddings of class cls, most recent first.
  std::vector<Vector> retrieve_hard(int cls, std::size_t n) const;

  std::size_t size(int cls) const { return buffers_.at(static_cast<std::size_t>(cls)).size(); }
  std::size_t capacity() const { return capacity_; }
  int num_classes() const { return static_cast<int>(buffers_.size()); }

  /// All stored embeddings as rows, with their class labels.
  std::pair<Matrix, std::vector<int>> snapshot() const;

 private:
  std::size_t capacity_;
  std::vector<std::deque<Vector>> buffers_;
};

}  // namespace freqdisc
