#include "freqdisc/model.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "freqdisc/binary_io.hpp"

namespace freqdisc {
namespace {

constexpr double kNormFloor = 1e-12;
constexpr std::uint32_t kCheckpointVersion = 1;

// tanh-approximated GELU and its derivative.
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

double gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
}

double gelu_grad(double x) {
  const double t = std::tanh(kGeluC * (x + kGeluA * x * x * x));
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * x * x);
}

Matrix affine(const Matrix& x, const Dense& layer) {
  Matrix y = x * layer.weight.transpose();
  y.rowwise() += layer.bias.transpose();
  return y;
}

Matrix activate(const Matrix& pre) { return pre.unaryExpr([](double v) { return gelu(v); }); }

Vector row_norms(const Matrix& m) {
  return m.rowwise().norm().cwiseMax(kNormFloor);
}

// Gradient through y = x / |x| applied row-wise: (dy - y (y . dy)) / |x|.
Matrix normalize_backward(const Matrix& y, const Vector& norms, const Matrix& dy) {
  Vector dots = (y.cwiseProduct(dy)).rowwise().sum();
  Matrix dx = dy - y.cwiseProduct(dots.replicate(1, y.cols()));
  return dx.cwiseQuotient(norms.replicate(1, y.cols()));
}

Dense glorot(int out, int in, Rng& rng) {
  const double limit = std::sqrt(6.0 / (in + out));
  Dense d{Matrix(out, in), Vector::Zero(out)};
  for (Eigen::Index i = 0; i < d.weight.size(); ++i) {
    d.weight.data()[i] = uniform_range(rng, -limit, limit);
  }
  return d;
}

// Backward through a stack of affine layers with GELU between them (not after
// the last). Returns d(loss)/d(stack input).
Matrix mlp_backward(const std::vector<Dense>& layers, const std::vector<Matrix>& pre,
                    const Matrix& input, Matrix dout, std::vector<Dense>& grads,
                    bool need_input_grad) {
  for (int l = static_cast<int>(layers.size()) - 1; l >= 0; --l) {
    if (l < static_cast<int>(layers.size()) - 1) {
      dout = dout.cwiseProduct(pre[l].unaryExpr([](double v) { return gelu_grad(v); }));
    }
    const Matrix* in = nullptr;
    Matrix act;
    if (l == 0) {
      in = &input;
    } else {
      act = activate(pre[l - 1]);
      in = &act;
    }
    grads[l].weight.noalias() += dout.transpose() * (*in);
    grads[l].bias += dout.colwise().sum().transpose();
    if (l > 0 || need_input_grad) dout = dout * layers[l].weight;
  }
  return dout;
}

void run_head(const ModelState& state, BatchForward& f) {
  const auto& P = state.params;
  f.h_norm = row_norms(f.h);
  f.h_unit = f.h.cwiseQuotient(f.h_norm.replicate(1, f.h.cols()));

  Matrix a = f.h;
  f.proj_pre.clear();
  for (std::size_t l = 0; l < P.projection.size(); ++l) {
    f.proj_pre.push_back(affine(a, P.projection[l]));
    if (l + 1 < P.projection.size()) a = activate(f.proj_pre.back());
  }
  f.g = f.proj_pre.back();
  f.g_norm = row_norms(f.g);
  f.z = f.g.cwiseQuotient(f.g_norm.replicate(1, f.g.cols()));

  f.proto_norm = row_norms(P.prototypes);
  Matrix unit_protos = P.prototypes.cwiseQuotient(f.proto_norm.replicate(1, P.prototypes.cols()));
  f.cosines = f.h_unit * unit_protos.transpose();
  f.logits = f.cosines / f.tau_cls;
  f.probs.resize(f.logits.rows(), f.logits.cols());
  for (Eigen::Index i = 0; i < f.logits.rows(); ++i) {
    const double m = f.logits.row(i).maxCoeff();
    auto e = (f.logits.row(i).array() - m).exp();
    f.probs.row(i) = e / e.sum();
  }
}

}  // namespace

Parameters Parameters::zeros_like(const Parameters& other) {
  Parameters p = other;
  p.for_each([](auto& m) { m.setZero(); });
  return p;
}

void Parameters::add_scaled(const Parameters& other, double scale) {
  auto add = [scale](auto& dst, const auto& src) { dst += scale * src; };
  for (std::size_t i = 0; i < encoder.size(); ++i) {
    add(encoder[i].weight, other.encoder[i].weight);
    add(encoder[i].bias, other.encoder[i].bias);
  }
  for (std::size_t i = 0; i < projection.size(); ++i) {
    add(projection[i].weight, other.projection[i].weight);
    add(projection[i].bias, other.projection[i].bias);
  }
  add(prototypes, other.prototypes);
}

bool Parameters::all_finite() const {
  bool ok = true;
  for_each([&ok](const auto& m) { ok = ok && m.allFinite(); });
  return ok;
}

ModelState ModelState::initialize(const ModelShape& shape, std::uint64_t seed) {
  if (shape.encoder_layers.empty() || shape.input_dim < 1 || shape.num_classes < 1) {
    throw Error("ModelState: invalid shape");
  }
  Rng rng(seed);
  ModelState s;
  s.shape = shape;
  s.seed = seed;
  int in = shape.input_dim;
  for (int out : shape.encoder_layers) {
    s.params.encoder.push_back(glorot(out, in, rng));
    in = out;
  }
  s.params.projection.push_back(glorot(shape.proj_hidden, shape.embed_dim(), rng));
  s.params.projection.push_back(glorot(shape.proj_dim, shape.proj_hidden, rng));
  std::normal_distribution<double> normal(0.0, 1.0);
  s.params.prototypes.resize(shape.num_classes, shape.embed_dim());
  for (Eigen::Index i = 0; i < s.params.prototypes.size(); ++i) {
    s.params.prototypes.data()[i] = normal(rng);
  }
  normalize_prototypes(s.params.prototypes);
  return s;
}

Matrix flatten_batch(std::span<const ImageTensor> images) {
  std::vector<const ImageTensor*> ptrs;
  for (const auto& im : images) ptrs.push_back(&im);
  return flatten_batch(std::span<const ImageTensor* const>(ptrs));
}

Matrix flatten_batch(std::span<const ImageTensor* const> images) {
  if (images.empty()) return Matrix(0, 0);
  const auto dim = static_cast<Eigen::Index>(images.front()->size());
  Matrix x(static_cast<Eigen::Index>(images.size()), dim);
  for (std::size_t i = 0; i < images.size(); ++i) {
    auto d = images[i]->data();
    if (static_cast<Eigen::Index>(d.size()) != dim) throw Error("flatten_batch: mixed image sizes");
    for (Eigen::Index j = 0; j < dim; ++j) x(static_cast<Eigen::Index>(i), j) = d[j] - 0.5;
  }
  return x;
}

BatchForward forward(const ModelState& state, const Matrix& inputs, double tau_cls) {
  if (inputs.cols() != state.shape.input_dim) {
    throw Error("forward: input dimension " + std::to_string(inputs.cols()) + " != " +
                std::to_string(state.shape.input_dim));
  }
  BatchForward f;
  f.tau_cls = tau_cls;
  f.input = inputs;
  const auto& enc = state.params.encoder;
  Matrix a = inputs;
  for (std::size_t l = 0; l < enc.size(); ++l) {
    f.enc_pre.push_back(affine(a, enc[l]));
    if (l + 1 < enc.size()) a = activate(f.enc_pre.back());
  }
  f.h = f.enc_pre.back();
  run_head(state, f);
  return f;
}

BatchForward forward_embeddings(const ModelState& state, const Matrix& embeddings,
                                double tau_cls) {
  if (embeddings.cols() != state.shape.embed_dim()) {
    throw Error("forward_embeddings: embedding dimension mismatch");
  }
  BatchForward f;
  f.tau_cls = tau_cls;
  f.from_embedding = true;
  f.h = embeddings;
  run_head(state, f);
  return f;
}

void backward(const ModelState& state, const BatchForward& f, const OutputGrads& up,
              Gradients& grads) {
  const auto& P = state.params;
  const Eigen::Index n = f.rows();
  const Eigen::Index C = P.prototypes.rows();

  Matrix dlogits = Matrix::Zero(n, C);
  if (up.dlogits.size() > 0) dlogits += up.dlogits;
  if (up.dprobs.size() > 0) {
    Vector dots = f.probs.cwiseProduct(up.dprobs).rowwise().sum();
    dlogits += f.probs.cwiseProduct(up.dprobs - dots.replicate(1, C));
  }
  const Matrix dcos = dlogits / f.tau_cls;

  Matrix unit_protos = P.prototypes.cwiseQuotient(f.proto_norm.replicate(1, P.prototypes.cols()));
  Matrix dunit_protos = dcos.transpose() * f.h_unit;
  grads.prototypes += normalize_backward(unit_protos, f.proto_norm, dunit_protos);

  Matrix dh = normalize_backward(f.h_unit, f.h_norm, dcos * unit_protos);

  if (up.dz.size() > 0) {
    Matrix dg = normalize_backward(f.z, f.g_norm, up.dz);
    dh += mlp_backward(P.projection, f.proj_pre, f.h, std::move(dg), grads.projection, true);
  }
  if (!f.from_embedding) {
    mlp_backward(P.encoder, f.enc_pre, f.input, std::move(dh), grads.encoder, false);
  }
}

double cosine_lr(double lr0, double epoch, double total_epochs) {
  return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * epoch / total_epochs));
}

void normalize_prototypes(Matrix& prototypes) {
  Vector n = prototypes.rowwise().norm().cwiseMax(kNormFloor);
  prototypes = prototypes.cwiseQuotient(n.replicate(1, prototypes.cols()));
}

void sgd_step(ModelState& state, const Gradients& grads, double lr) {
  if (!grads.all_finite()) throw Error("sgd_step: non-finite gradient, step aborted");
  state.params.add_scaled(grads, -lr);
  normalize_prototypes(state.params.prototypes);
  ++state.step;
}

void save_checkpoint(const std::filesystem::path& path, const ModelState& state) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("save_checkpoint: cannot open " + path.string());
  os.write("FQDM", 4);
  const auto& s = state.shape;
  binary::put_u32(os, kCheckpointVersion);
  binary::put_u32(os, static_cast<std::uint32_t>(s.input_dim));
  binary::put_u32(os, static_cast<std::uint32_t>(s.encoder_layers.size()));
  for (int l : s.encoder_layers) binary::put_u32(os, static_cast<std::uint32_t>(l));
  binary::put_u32(os, static_cast<std::uint32_t>(s.proj_hidden));
  binary::put_u32(os, static_cast<std::uint32_t>(s.proj_dim));
  binary::put_u32(os, static_cast<std::uint32_t>(s.num_classes));
  const auto step = static_cast<std::uint64_t>(state.step);
  os.write(reinterpret_cast<const char*>(&step), sizeof step);
  state.params.for_each([&os](const auto& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) binary::put_f32(os, static_cast<float>(m(i, j)));
  });
  if (!os) throw Error("save_checkpoint: write failed for " + path.string());
}

ModelState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("load_checkpoint: cannot open " + path.string());
  binary::expect_magic(is, "FQDM");
  if (binary::get_u32(is) != kCheckpointVersion) throw Error("load_checkpoint: unsupported version");
  ModelShape s;
  s.input_dim = static_cast<int>(binary::get_u32(is));
  const auto layers = binary::get_u32(is);
  if (layers == 0 || layers > 64) throw Error("load_checkpoint: implausible layer count");
  s.encoder_layers.clear();
  for (std::uint32_t i = 0; i < layers; ++i) s.encoder_layers.push_back(static_cast<int>(binary::get_u32(is)));
  s.proj_hidden = static_cast<int>(binary::get_u32(is));
  s.proj_dim = static_cast<int>(binary::get_u32(is));
  s.num_classes = static_cast<int>(binary::get_u32(is));
  std::uint64_t step = 0;
  if (!is.read(reinterpret_cast<char*>(&step), sizeof step)) throw Error("load_checkpoint: truncated");
  ModelState state = ModelState::initialize(s, 0);
  state.step = static_cast<std::int64_t>(step);
  state.params.for_each([&is](auto& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = binary::get_f32(is);
  });
  return state;
}

}  // namespace freqdisc
