#include "freqdisc/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace freqdisc {
namespace {

constexpr double kProbFloor = 1e-12;

Matrix select_rows(const Matrix& m, const std::vector<int>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

void scatter_add(Matrix& dst, const std::vector<int>& rows, const Matrix& src, double scale) {
  for (std::size_t i = 0; i < rows.size(); ++i) dst.row(rows[i]) += scale * src.row(static_cast<Eigen::Index>(i));
}

}  // namespace

double LossWeights::tau_t(double epoch) const {
  if (epoch >= tau_t_warmup_epochs || tau_t_warmup_epochs <= 0) return tau_t_end;
  const double e = std::max(epoch, 0.0);
  return tau_t_end + (tau_t_start - tau_t_end) * 0.5 *
                         (1.0 + std::cos(std::numbers::pi * e / tau_t_warmup_epochs));
}

void LossWeights::validate() const {
  if (!(beta >= 0 && beta <= 1)) throw Error("LossWeights: beta must lie in [0,1]");
  if (!(epsilon >= 0)) throw Error("LossWeights: epsilon must be >= 0");
  for (double t : {tau_u, tau_c, tau_s, tau_t_start, tau_t_end})
    if (!(t > 0)) throw Error("LossWeights: temperatures must be positive");
  if (tau_t_warmup_epochs < 0) throw Error("LossWeights: negative warmup");
}

std::vector<int> ContrastiveBatch::positives(int i) const {
  std::vector<int> out;
  for (int j = 0; j < static_cast<int>(groups.size()); ++j)
    if (j != i && groups[j] == groups[i]) out.push_back(j);
  return out;
}

std::vector<int> view_groups(int n_samples, int views) {
  std::vector<int> g(static_cast<std::size_t>(n_samples) * views);
  for (int v = 0; v < views; ++v)
    for (int i = 0; i < n_samples; ++i) g[static_cast<std::size_t>(v) * n_samples + i] = i;
  return g;
}

ZLoss contrastive_loss(const ContrastiveBatch& batch, double tau) {
  const auto n = batch.z.rows();
  if (static_cast<std::size_t>(n) != batch.groups.size()) {
    throw Error("contrastive_loss: group count does not match projections");
  }
  ZLoss out{0.0, Matrix::Zero(n, batch.z.cols())};
  if (n == 0) return out;
  const Matrix sim = batch.z * batch.z.transpose() / tau;
  // dL/dsim accumulated here, then mapped back through sim = z z^T / tau.
  Matrix dsim = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<int> pos = batch.positives(static_cast<int>(i));
    if (pos.empty()) {
      throw Error("contrastive_loss: anchor " + std::to_string(i) + " has no positive");
    }
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a < n; ++a)
      if (a != i) m = std::max(m, sim(i, a));
    double denom = 0;
    for (Eigen::Index a = 0; a < n; ++a)
      if (a != i) denom += std::exp(sim(i, a) - m);
    const double lse = m + std::log(denom);
    const double inv_p = 1.0 / static_cast<double>(pos.size());
    double li = 0;
    for (int p : pos) li -= (sim(i, p) - lse);
    out.value += li * inv_p;
    // d li / d sim(i,a) = softmax_a - [a in P(i)] / |P(i)|
    for (Eigen::Index a = 0; a < n; ++a)
      if (a != i) dsim(i, a) += std::exp(sim(i, a) - lse);
    for (int p : pos) dsim(i, p) -= inv_p;
  }
  const double scale = 1.0 / static_cast<double>(n);
  out.value *= scale;
  dsim *= scale / tau;
  out.dz = (dsim + dsim.transpose()) * batch.z;
  return out;
}

ProbLoss cluster_loss(const Matrix& p, const Matrix& q) {
  if (p.rows() != q.rows() || p.cols() != q.cols()) throw Error("cluster_loss: shape mismatch");
  ProbLoss out{0.0, Matrix::Zero(p.rows(), p.cols())};
  if (p.rows() == 0) return out;
  const double inv_n = 1.0 / static_cast<double>(p.rows());
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index k = 0; k < p.cols(); ++k) {
      if (q(i, k) == 0) continue;
      const double pk = std::max(p(i, k), kProbFloor);
      out.value -= q(i, k) * std::log(pk) * inv_n;
      if (p(i, k) > kProbFloor) out.dp(i, k) = -q(i, k) / pk * inv_n;
    }
  return out;
}

Matrix sharpen(const Matrix& logits, double tau_t) {
  if (!(tau_t > 0)) throw Error("sharpen: tau_t must be positive");
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    auto e = ((logits.row(i).array() - m) / tau_t).exp();
    out.row(i) = e / e.sum();
  }
  return out;
}

ProbLoss entropy_reg(const Matrix& p) {
  ProbLoss out{0.0, Matrix::Zero(p.rows(), p.cols())};
  if (p.rows() == 0) return out;
  const double inv_n = 1.0 / static_cast<double>(p.rows());
  const Eigen::RowVectorXd mean = p.colwise().mean();
  Eigen::RowVectorXd grad(p.cols());
  for (Eigen::Index k = 0; k < p.cols(); ++k) {
    const double m = mean(k);
    if (m > 0) out.value += m * std::log(std::max(m, kProbFloor));
    grad(k) = (std::log(std::max(m, kProbFloor)) + 1.0) * inv_n;
  }
  out.dp.rowwise() = grad;
  return out;
}

BranchLoss loss_kd(const KnownDomainInputs& in, const LossWeights& w) {
  const int views = in.views;
  const int n = static_cast<int>(in.labels.size());
  const auto rows = static_cast<Eigen::Index>(n) * views;
  if (in.z.rows() != rows || in.p.rows() != rows || in.q_self.rows() != rows) {
    throw Error("loss_kd: row count does not match views * samples");
  }
  BranchLoss out;
  out.dz = Matrix::Zero(rows, in.z.cols());
  out.dp = Matrix::Zero(rows, in.p.cols());
  if (n == 0) return out;

  // Unsupervised part over every sample (labeled ones included).
  const double wu = 1.0 - w.beta;
  ZLoss con = contrastive_loss({in.z, view_groups(n, views)}, w.tau_u);
  ProbLoss cls = cluster_loss(in.p, in.q_self);
  out.unsupervised = wu * (con.value + cls.value);
  out.dz += wu * con.dz;
  out.dp += wu * cls.dp;

  // Supervised part over labeled samples only.
  std::vector<int> lrows;
  std::vector<int> lgroups;
  for (int v = 0; v < views; ++v)
    for (int i = 0; i < n; ++i)
      if (in.labels[i] >= 0) {
        lrows.push_back(v * n + i);
        lgroups.push_back(in.labels[i]);
      }
  if (lrows.empty()) {
    out.missing_labeled = true;
  } else {
    ZLoss sup = contrastive_loss({select_rows(in.z, lrows), lgroups}, w.tau_c);
    Matrix onehot = Matrix::Zero(static_cast<Eigen::Index>(lrows.size()), in.p.cols());
    for (std::size_t r = 0; r < lrows.size(); ++r) {
      if (lgroups[r] >= in.p.cols()) throw Error("loss_kd: label out of range");
      onehot(static_cast<Eigen::Index>(r), lgroups[r]) = 1.0;
    }
    ProbLoss ce = cluster_loss(select_rows(in.p, lrows), onehot);
    out.supervised = w.beta * (sup.value + ce.value);
    scatter_add(out.dz, lrows, sup.dz, w.beta);
    scatter_add(out.dp, lrows, ce.dp, w.beta);
  }
  out.value = out.unsupervised + out.supervised;
  return out;
}

BranchLoss loss_ud(const UnknownDomainInputs& in, const LossWeights& w) {
  const Eigen::Index n = in.p_plain.rows() / 2;
  if (in.views < 2 || in.p_plain.rows() != 2 * n || in.z.rows() != n * in.views ||
      in.q_target.rows() != 2 * n) {
    throw Error("loss_ud: inconsistent batch shapes");
  }
  BranchLoss out;
  out.dz = Matrix::Zero(in.z.rows(), in.z.cols());
  out.dp = Matrix::Zero(in.p_plain.rows(), in.p_plain.cols());
  if (n == 0) return out;
  ZLoss con = contrastive_loss({in.z, view_groups(static_cast<int>(n), in.views)}, w.tau_u);
  ProbLoss cls = cluster_loss(in.p_plain, in.q_target);
  out.dz = con.dz;
  out.dp = cls.dp;
  out.unsupervised = con.value + cls.value;
  out.value = out.unsupervised;
  return out;
}

double loss_total(double kd, double ud, double entropy, double epsilon) {
  return kd + ud + epsilon * entropy;
}

}  // namespace freqdisc
