#include "freqdisc/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace freqdisc {

DifficultyStats compute_difficulty(const Matrix& embeddings, std::span<const int> predicted,
                                   const Matrix& prototypes, const DifficultyOptions& options) {
  const auto C = static_cast<int>(prototypes.rows());
  if (C < 1) throw Error("compute_difficulty: no prototypes");
  if (static_cast<std::size_t>(embeddings.rows()) != predicted.size()) {
    throw Error("compute_difficulty: embeddings/predictions length mismatch");
  }
  if (embeddings.rows() > 0 && embeddings.cols() != prototypes.cols()) {
    throw Error("compute_difficulty: embedding dimension mismatch");
  }
  DifficultyStats stats;
  stats.classes.resize(static_cast<std::size_t>(C));
  Matrix units = prototypes;
  normalize_prototypes(units);

  std::vector<double> sums(static_cast<std::size_t>(C), 0.0);
  for (Eigen::Index i = 0; i < embeddings.rows(); ++i) {
    const int c = predicted[static_cast<std::size_t>(i)];
    if (c < 0 || c >= C) throw Error("compute_difficulty: predicted label out of range");
    const double norm = std::max(embeddings.row(i).norm(), 1e-12);
    sums[static_cast<std::size_t>(c)] += (embeddings.row(i) / norm - units.row(c)).squaredNorm();
    ++stats.classes[static_cast<std::size_t>(c)].count;
  }
  for (int c = 0; c < C; ++c) {
    auto& s = stats.classes[static_cast<std::size_t>(c)];
    if (s.count > 0) s.d_intra = sums[static_cast<std::size_t>(c)] / s.count;
    if (C > 1) {
      double acc = 0;
      for (int j = 0; j < C; ++j)
        if (j != c) acc += units.row(c).dot(units.row(j));
      s.d_inter = acc / (C - 1);
    }
  }
  stats.p_difficulty = sampling_probs(stats, options);
  return stats;
}

DifficultyStats compute_difficulty(const Matrix& embeddings, const Matrix& probs,
                                   const Matrix& prototypes, const DifficultyOptions& options) {
  std::vector<int> predicted(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index arg = 0;
    probs.row(i).maxCoeff(&arg);
    predicted[static_cast<std::size_t>(i)] = static_cast<int>(arg);
  }
  return compute_difficulty(embeddings, predicted, prototypes, options);
}

std::vector<double> sampling_probs(const DifficultyStats& stats, const DifficultyOptions& options) {
  const std::size_t C = stats.classes.size();
  if (C == 0) throw Error("sampling_probs: no classes");
  double mean_intra = 0;
  int populated = 0;
  for (const auto& s : stats.classes)
    if (s.count > 0) {
      mean_intra += s.d_intra;
      ++populated;
    }
  if (populated > 0) mean_intra /= populated;

  std::vector<double> score(C);
  for (std::size_t c = 0; c < C; ++c) {
    const auto& s = stats.classes[c];
    const double intra = (s.count == 0 && options.impute_empty) ? mean_intra : s.d_intra;
    score[c] = intra + s.d_inter;
  }
  const double m = *std::max_element(score.begin(), score.end());
  double total = 0;
  for (double& v : score) {
    v = std::exp(v - m);
    total += v;
  }
  for (double& v : score) v /= total;
  return score;
}

int sample_category(std::span<const double> probs, Rng& rng) {
  if (probs.empty()) throw Error("sample_category: empty distribution");
  const double u = uniform01(rng);
  double cum = 0;
  int last_positive = -1;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (probs[k] > 0) last_positive = static_cast<int>(k);
    cum += probs[k];
    if (u < cum && probs[k] > 0) return static_cast<int>(k);
  }
  // u landed past the accumulated mass through rounding.
  if (last_positive < 0) throw Error("sample_category: distribution has no mass");
  return last_positive;
}

void DifficultyStats::write_csv(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw Error("DifficultyStats: cannot write " + path.string());
  os.precision(10);
  os << "class,n_c,d_intra,d_inter,p_difficulty\n";
  for (std::size_t c = 0; c < classes.size(); ++c) {
    os << c << ',' << classes[c].count << ',' << classes[c].d_intra << ',' << classes[c].d_inter
       << ',' << (c < p_difficulty.size() ? p_difficulty[c] : 0.0) << '\n';
  }
}

FeatureBank::FeatureBank(int num_classes, std::size_t capacity_per_class)
    : capacity_(capacity_per_class), buffers_(static_cast<std::size_t>(num_classes)) {
  if (num_classes < 1 || capacity_per_class == 0) throw Error("FeatureBank: invalid size");
}

void FeatureBank::push(int cls, const Vector& embedding) {
  if (cls < 0 || cls >= num_classes()) throw Error("FeatureBank: class out of range");
  if (!embedding.allFinite()) throw Error("FeatureBank: non-finite embedding");
  auto& buf = buffers_[static_cast<std::size_t>(cls)];
  buf.push_back(embedding);
  while (buf.size() > capacity_) buf.pop_front();
}

std::vector<Vector> FeatureBank::retrieve_hard(int cls, std::size_t n) const {
  const auto& buf = buffers_.at(static_cast<std::size_t>(cls));
  std::vector<Vector> out;
  for (auto it = buf.rbegin(); it != buf.rend() && out.size() < n; ++it) out.push_back(*it);
  return out;
}

std::pair<Matrix, std::vector<int>> FeatureBank::snapshot() const {
  std::size_t total = 0;
  Eigen::Index dim = 0;
  for (const auto& b : buffers_) {
    total += b.size();
    if (!b.empty()) dim = b.front().size();
  }
  Matrix m(static_cast<Eigen::Index>(total), dim);
  std::vector<int> labels;
  labels.reserve(total);
  Eigen::Index r = 0;
  for (std::size_t c = 0; c < buffers_.size(); ++c)
    for (const auto& v : buffers_[c]) {
      m.row(r++) = v.transpose();
      labels.push_back(static_cast<int>(c));
    }
  return {std::move(m), std::move(labels)};
}

}  // namespace freqdisc
