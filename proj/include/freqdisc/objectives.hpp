#pragma once

#include <vector>

#include "freqdisc/model.hpp"

namespace freqdisc {

/// Loss balance weights and temperatures.
struct LossWeights {
  double beta = 0.35;     // labeled vs. unlabeled balance
  double epsilon = 0.1;   // entropy regularizer weight
  double tau_u = 0.07;    // unsupervised contrastive
  double tau_c = 0.1;     // supervised contrastive
  double tau_s = 0.1;     // student softmax
  double tau_t_start = 0.07;
  double tau_t_end = 0.04;
  int tau_t_warmup_epochs = 30;

  /// Teacher temperature: cosine ramp from tau_t_start to tau_t_end over the
  /// warmup epochs, constant afterwards.
  double tau_t(double epoch) const;
  void validate() const;
};

/// Unit projections plus a positive-group id per row: P(i) is every other row
/// sharing row i's group.
struct ContrastiveBatch {
  Matrix z;
  std::vector<int> groups;

  std::vector<int> positives(int i) const;
};

/// Groups for n samples seen through `views` view blocks stacked view-major
/// (rows [v*n, (v+1)*n) hold view v): every view of a sample is a positive.
std::vector<int> view_groups(int n_samples, int views);

struct ZLoss {
  double value = 0;
  Matrix dz;
};

struct ProbLoss {
  double value = 0;
  Matrix dp;
};

/// Mean over anchors of -1/|P(i)| sum_p log softmax_{a != i}(z_i . z_a / tau)[p].
/// Throws Error if some anchor has no positive.
ZLoss contrastive_loss(const ContrastiveBatch& batch, double tau);

/// Mean over rows of -sum_k q_k log p_k; q is a constant target.
ProbLoss cluster_loss(const Matrix& p_student, const Matrix& q_target);

/// Row-wise softmax(logits / tau_t).
Matrix sharpen(const Matrix& logits, double tau_t);

/// sum_k pbar_k log pbar_k of the batch-mean prediction pbar.
ProbLoss entropy_reg(const Matrix& p);

struct BranchLoss {
  double value = 0;
  Matrix dz;
  Matrix dp;
  double unsupervised = 0;  // (1-beta)-weighted part, or the full L_ud
  double supervised = 0;    // beta-weighted part
  bool missing_labeled = false;
};

/// Known-domain branch. Rows are view-major over `views` blocks of n samples.
struct KnownDomainInputs {
  Matrix z;                 // (views*n) x d
  Matrix p;                 // (views*n) x C student probabilities
  Matrix q_self;            // (views*n) x C self-distillation targets (stop-gradient)
  std::vector<int> labels;  // n entries, -1 for unlabeled samples
  int views = 2;
};

/// (1-beta) * [unsup contrastive + self-distillation over every sample]
///   + beta * [sup contrastive + cross-entropy over labeled samples].
BranchLoss loss_kd(const KnownDomainInputs& in, const LossWeights& w);

/// Unknown-domain branch: rows of z are [view_a; view_b; perturbed] (the
/// perturbed block is absent when views == 2), rows of p_plain and q_target
/// are [view_a; view_b]. With a perturbed view both target blocks hold its
/// sharpened prediction.
struct UnknownDomainInputs {
  Matrix z;
  Matrix p_plain;
  Matrix q_target;
  int views = 3;
};

/// Contrastive term over all views of a sample plus self-distillation of the
/// plain views toward q_target.
BranchLoss loss_ud(const UnknownDomainInputs& in, const LossWeights& w);

double loss_total(double kd, double ud, double entropy, double epsilon);

}  // namespace freqdisc
