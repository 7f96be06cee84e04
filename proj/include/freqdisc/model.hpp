#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "freqdisc/image.hpp"

namespace freqdisc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct ModelShape {
  int input_dim = 3 * 32 * 32;
  std::vector<int> encoder_layers{256, 128};  // last entry is the embedding size
  int proj_hidden = 128;
  int proj_dim = 64;
  int num_classes = 8;

  int embed_dim() const { return encoder_layers.back(); }
};

/// Fully connected layer, y = x W^T + b.
struct Dense {
  Matrix weight;  // out x in
  Vector bias;    // out
};

struct Parameters {
  std::vector<Dense> encoder;
  std::vector<Dense> projection;
  Matrix prototypes;  // num_classes x embed_dim

  static Parameters zeros_like(const Parameters& other);
  void add_scaled(const Parameters& other, double scale);
  bool all_finite() const;

  /// Visits every parameter array in declaration order.
  template <typename F>
  void for_each(F&& f) {
    for (auto& l : encoder) { f(l.weight); f(l.bias); }
    for (auto& l : projection) { f(l.weight); f(l.bias); }
    f(prototypes);
  }
  template <typename F>
  void for_each(F&& f) const {
    for (const auto& l : encoder) { f(l.weight); f(l.bias); }
    for (const auto& l : projection) { f(l.weight); f(l.bias); }
    f(prototypes);
  }
};

using Gradients = Parameters;

struct ModelState {
  ModelShape shape;
  Parameters params;
  std::int64_t step = 0;
  std::uint64_t seed = 0;

  /// Glorot-uniform weights, zero biases, random unit prototypes.
  static ModelState initialize(const ModelShape& shape, std::uint64_t seed);
};

/// Everything the backward pass needs, plus the per-sample outputs.
struct BatchForward {
  Matrix input;                   // N x input_dim (empty when run from embeddings)
  std::vector<Matrix> enc_pre;    // pre-activation of each encoder layer
  std::vector<Matrix> proj_pre;   // pre-activation of each projection layer
  Matrix h;                       // N x embed_dim
  Vector h_norm;
  Matrix h_unit;
  Matrix g;                       // unnormalized projection
  Vector g_norm;
  Matrix z;                       // N x proj_dim, unit rows
  Vector proto_norm;
  Matrix cosines;                 // N x C, cos(h, o_k)
  Matrix logits;                  // cosines / tau_cls
  Matrix probs;                   // softmax(logits)
  double tau_cls = 0.1;
  bool from_embedding = false;

  Eigen::Index rows() const { return h.rows(); }
};

/// Upstream gradients of a scalar loss w.r.t. the model outputs. Empty
/// matrices stand for zero.
struct OutputGrads {
  Matrix dz;
  Matrix dprobs;
  Matrix dlogits;
};

/// Pixels of C x H x W images as rows, shifted to [-0.5, 0.5].
Matrix flatten_batch(std::span<const ImageTensor> images);
Matrix flatten_batch(std::span<const ImageTensor* const> images);

BatchForward forward(const ModelState& state, const Matrix& inputs, double tau_cls);

/// Runs the projection head and classifier on given embeddings; the backward
/// pass then reaches only the projection head and prototypes.
BatchForward forward_embeddings(const ModelState& state, const Matrix& embeddings, double tau_cls);

/// Accumulates d(loss)/d(parameter) into grads.
void backward(const ModelState& state, const BatchForward& fwd, const OutputGrads& upstream,
              Gradients& grads);

/// lr0 * 0.5 * (1 + cos(pi * epoch / total_epochs)).
double cosine_lr(double lr0, double epoch, double total_epochs);

/// theta <- theta - lr * g, then prototype rows are renormalized. Throws Error
/// (leaving the state untouched) if any gradient entry is non-finite.
void sgd_step(ModelState& state, const Gradients& grads, double lr);

void normalize_prototypes(Matrix& prototypes);

/// "FQDM" checkpoint: magic, u32 version, u32 input_dim, u32 #encoder layers,
/// u32 per layer, u32 proj_hidden, u32 proj_dim, u32 num_classes, u64 step,
/// then float32 parameters in declaration order (row-major weights).
void save_checkpoint(const std::filesystem::path& path, const ModelState& state);
ModelState load_checkpoint(const std::filesystem::path& path);

}  // namespace freqdisc
