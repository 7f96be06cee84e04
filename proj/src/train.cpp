#include "freqdisc/train.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "freqdisc/objectives.hpp"
#include "freqdisc/perturbation.hpp"
#include "freqdisc/spectral.hpp"

namespace freqdisc {
namespace {

namespace fs = std::filesystem;

template <typename F>
void parallel_for(int n, F&& fn) {
  const int threads = std::min(worker_threads(), n);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

double entropy_of_mean(const Matrix& probs) {
  if (probs.rows() == 0) return 0.0;
  const Vector mean = probs.colwise().mean();
  double h = 0;
  for (Eigen::Index k = 0; k < mean.size(); ++k)
    if (mean(k) > 0) h -= mean(k) * std::log(mean(k));
  return h;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  os << text;
}

Matrix stack(const Matrix& top, const Matrix& bottom) {
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

struct Item {
  const ImageTensor* image = nullptr;
  int label = -1;  // ground truth for labeled samples only
  bool unknown_route = false;
};

struct KnownViews {
  ImageTensor a, b;
  bool perturbed_a = false, perturbed_b = false;
  bool matched_a = false, matched_b = false;
};

struct UnknownViews {
  ImageTensor a, b, perturbed;
};

class Trainer {
 public:
  Trainer(const RunConfig& config, const DatasetSplit& data, fs::path out_dir)
      : cfg_(config),
        data_(data),
        out_(std::move(out_dir)),
        rng_(mix_seed(config.train.seed, 2)),
        bank_(static_cast<std::size_t>(config.perturbation.bank_size)),
        features_(data.num_classes, static_cast<std::size_t>(config.sampler.capacity)),
        augment_(config.augment.spec()) {
    cfg_.validate();
    if (data_.unlabeled.empty() && data_.labeled.empty()) throw Error("train: empty dataset");
    const ImageTensor& first =
        data_.labeled.empty() ? data_.unlabeled.front().image : data_.labeled.front().image;
    ModelShape shape = cfg_.model;
    shape.input_dim = first.channels() * first.height() * first.width();
    shape.num_classes = data_.num_classes;
    result_.state = ModelState::initialize(shape, mix_seed(cfg_.train.seed, 1));
    unknown_route_.assign(data_.unlabeled.size(), false);
    cdfp_opts_.eta = cfg_.perturbation.eta;
    cdfp_opts_.window = FreqWindow{cfg_.perturbation.window};
    cdfp_opts_.class_aware = cfg_.perturbation.class_aware;
    cdfp_opts_.gate_both = cfg_.perturbation.gate_both;
    if (!out_.empty()) {
      fs::create_directories(out_);
      if (cfg_.sampler.enabled) fs::create_directories(out_ / "difficulty");
      write_manifest("running");
    }
  }

  TrainResult run() {
    const int epochs = cfg_.train.epochs;
    for (int epoch = 0; epoch < epochs; ++epoch) {
      if (cfg_.domain_sep.enabled && epoch % cfg_.domain_sep.refresh_every == 0) refresh_partition();
      const double lr = cosine_lr(cfg_.train.lr, epoch, epochs);
      const double tau_t = cfg_.objectives.tau_t(epoch);

      std::vector<int> order(data_.labeled.size() + data_.unlabeled.size());
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng_);
      const std::size_t bs = static_cast<std::size_t>(cfg_.train.batch_size);
      for (std::size_t start = 0; start < order.size(); start += bs) {
        const std::size_t end = std::min(order.size(), start + bs);
        step(std::span<const int>(order.data() + start, end - start), epoch, lr, tau_t);
      }

      if (cfg_.sampler.enabled && (epoch + 1) % cfg_.sampler.refresh_every == 0) refresh_difficulty(epoch);
      if ((epoch + 1) % cfg_.train.eval_every == 0 || epoch + 1 == epochs) evaluate(epoch + 1);
    }
    finish();
    return std::move(result_);
  }

 private:
  Item item(int index) const {
    const auto n_lab = static_cast<int>(data_.labeled.size());
    if (index < n_lab) {
      const Sample& s = data_.labeled[static_cast<std::size_t>(index)];
      return {&s.image, s.label, false};
    }
    const auto u = static_cast<std::size_t>(index - n_lab);
    return {&data_.unlabeled[u].image, -1, unknown_route_[u]};
  }

  void refresh_partition() {
    if (static_cast<int>(data_.labeled.size()) < cfg_.domain_sep.k) {
      throw Error("train: labeled set smaller than the density neighbourhood k");
    }
    DescriptorOptions dopt;
    dopt.log_amplitude = cfg_.domain_sep.log_amplitude;
    std::vector<std::size_t> pick(data_.labeled.size());
    std::iota(pick.begin(), pick.end(), std::size_t{0});
    const auto sub = static_cast<std::size_t>(cfg_.domain_sep.anchor_subsample);
    if (sub > 0 && sub < pick.size()) {
      Rng r(mix_seed(cfg_.train.seed, 3));
      std::shuffle(pick.begin(), pick.end(), r);
      pick.resize(std::max<std::size_t>(sub, static_cast<std::size_t>(cfg_.domain_sep.k)));
    }
    std::vector<AmplitudeDescriptor> desc;
    desc.reserve(pick.size());
    for (std::size_t i : pick) {
      desc.push_back(amplitude_descriptor(data_.labeled[i].image, data_.labeled[i].id, dopt));
    }
    AnchorSet anchors(std::move(desc));
    std::vector<ImageTensor> images;
    std::vector<std::string> ids;
    for (const auto& s : data_.unlabeled) {
      images.push_back(s.image);
      ids.push_back(s.id);
    }
    PartitionOptions popt;
    popt.k = cfg_.domain_sep.k;
    popt.descriptor = dopt;
    DomainPartition part = partition(images, ids, anchors, popt);
    for (std::size_t i = 0; i < part.samples.size(); ++i) {
      unknown_route_[i] = part.samples[i].label == Domain::unknown;
    }
    if (!out_.empty()) {
      part.write_csv(out_ / "partition.csv");
      write_text(out_ / "gmm.json", part.model.to_json().dump(2) + "\n");
    }
    result_.partition = std::move(part);
  }

  void step(std::span<const int> batch, int epoch, double lr, double tau_t) {
    ModelState& state = result_.state;
    const auto& w = cfg_.objectives;
    const int n = static_cast<int>(batch.size());
    std::vector<Item> items;
    items.reserve(batch.size());
    for (int idx : batch) items.push_back(item(idx));

    // Pseudo-labels and embeddings of the clean images.
    std::vector<const ImageTensor*> clean;
    for (const auto& it : items) clean.push_back(it.image);
    const BatchForward pre = forward(state, flatten_batch(clean), w.tau_s);
    std::vector<PseudoLabel> pseudo(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      Eigen::Index arg = 0;
      const double conf = pre.probs.row(i).maxCoeff(&arg);
      pseudo[static_cast<std::size_t>(i)] = {static_cast<int>(arg), conf};
    }

    // Style donors: unknown-domain samples, or every unlabeled sample when
    // separation is off.
    if (cfg_.perturbation.cdfp) {
      for (int i = 0; i < n; ++i) {
        const Item& it = items[static_cast<std::size_t>(i)];
        const bool unlabeled = it.label < 0;
        if (!unlabeled) continue;
        if (cfg_.domain_sep.enabled && !it.unknown_route) continue;
        const auto& p = pseudo[static_cast<std::size_t>(i)];
        bank_.push({*it.image, p.label, p.confidence, 0, {}});
      }
    }

    std::vector<int> known, unknown;
    for (int i = 0; i < n; ++i) {
      (items[static_cast<std::size_t>(i)].unknown_route ? unknown : known).push_back(i);
    }
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(n));
    for (auto& s : seeds) s = rng_();

    const int nk = static_cast<int>(known.size());
    const int nu = static_cast<int>(unknown.size());
    std::vector<KnownViews> kviews(known.size());
    std::vector<UnknownViews> uviews(unknown.size());
    const bool use_idfp = cfg_.perturbation.idfp;
    const FreqWindow window{cfg_.perturbation.window};
    parallel_for(nk + nu, [&](int j) {
      if (j < nk) {
        const int i = known[static_cast<std::size_t>(j)];
        const Item& it = items[static_cast<std::size_t>(i)];
        Rng r(seeds[static_cast<std::size_t>(i)]);
        KnownViews& v = kviews[static_cast<std::size_t>(j)];
        v.a = augment_.apply(*it.image, r);
        v.b = augment_.apply(*it.image, r);
        if (cfg_.perturbation.cdfp) {
          const PseudoLabel pl = it.label >= 0 ? PseudoLabel{it.label, 1.0}
                                               : pseudo[static_cast<std::size_t>(i)];
          CdfpResult ra = cdfp(v.a, pl, bank_, cdfp_opts_, r);
          CdfpResult rb = cdfp(v.b, pl, bank_, cdfp_opts_, r);
          v.a = std::move(ra.image);
          v.b = std::move(rb.image);
          v.perturbed_a = ra.perturbed;
          v.perturbed_b = rb.perturbed;
          v.matched_a = ra.class_matched;
          v.matched_b = rb.class_matched;
        }
      } else {
        const int i = unknown[static_cast<std::size_t>(j - nk)];
        Rng r(seeds[static_cast<std::size_t>(i)]);
        UnknownViews& v = uviews[static_cast<std::size_t>(j - nk)];
        const ImageTensor& img = *items[static_cast<std::size_t>(i)].image;
        if (use_idfp) {
          IdfpResult res = idfp(img, augment_, augment_, window, r);
          v.a = std::move(res.view_a);
          v.b = std::move(res.view_b);
          v.perturbed = std::move(res.perturbed);
        } else {
          v.a = augment_.apply(img, r);
          v.b = augment_.apply(img, r);
        }
      }
    });
    if (cfg_.perturbation.cdfp) {
      for (const auto& v : kviews) {
        result_.counters.cdfp_calls += 2;
        result_.counters.cdfp_identity += !v.perturbed_a + !v.perturbed_b;
        result_.counters.cdfp_class_matched += v.matched_a + v.matched_b;
      }
    }
    if (use_idfp) result_.counters.idfp_calls += nu;

    std::vector<const ImageTensor*> rows;
    for (const auto& v : kviews) rows.push_back(&v.a);
    for (const auto& v : kviews) rows.push_back(&v.b);
    for (const auto& v : uviews) rows.push_back(&v.a);
    for (const auto& v : uviews) rows.push_back(&v.b);
    if (use_idfp)
      for (const auto& v : uviews) rows.push_back(&v.perturbed);
    const BatchForward fwd = forward(state, flatten_batch(rows), w.tau_s);

    const Eigen::Index total_rows = fwd.rows();
    const Eigen::Index u_off = 2 * nk;
    Matrix dz = Matrix::Zero(total_rows, fwd.z.cols());
    Matrix dp = Matrix::Zero(total_rows, fwd.probs.cols());

    StepMetrics m;
    m.step = state.step;
    m.epoch = epoch;
    m.lr = lr;
    m.tau_t = tau_t;

    if (nk > 0) {
      KnownDomainInputs in;
      in.z = fwd.z.topRows(2 * nk);
      in.p = fwd.probs.topRows(2 * nk);
      in.q_self = stack(sharpen(fwd.cosines.middleRows(nk, nk), tau_t),
                        sharpen(fwd.cosines.topRows(nk), tau_t));
      for (int i : known) in.labels.push_back(items[static_cast<std::size_t>(i)].label);
      in.views = 2;
      BranchLoss kd = loss_kd(in, w);
      m.l_kd = kd.value;
      dz.topRows(2 * nk) += kd.dz;
      dp.topRows(2 * nk) += kd.dp;
    }
    if (nu > 0) {
      UnknownDomainInputs in;
      const int views = use_idfp ? 3 : 2;
      in.views = views;
      in.z = fwd.z.middleRows(u_off, views * nu);
      in.p_plain = fwd.probs.middleRows(u_off, 2 * nu);
      if (use_idfp) {
        const Matrix t = sharpen(fwd.cosines.middleRows(u_off + 2 * nu, nu), tau_t);
        in.q_target = stack(t, t);
      } else {
        in.q_target = stack(sharpen(fwd.cosines.middleRows(u_off + nu, nu), tau_t),
                            sharpen(fwd.cosines.middleRows(u_off, nu), tau_t));
      }
      BranchLoss ud = loss_ud(in, w);
      m.l_ud = ud.value;
      dz.middleRows(u_off, views * nu) += ud.dz;
      dp.middleRows(u_off, 2 * nu) += ud.dp;
    }
    {
      // Student predictions only; the perturbed views act as teachers.
      const Matrix student = stack(fwd.probs.topRows(2 * nk), fwd.probs.middleRows(u_off, 2 * nu));
      ProbLoss ent = entropy_reg(student);
      m.entropy = ent.value;
      dp.topRows(2 * nk) += w.epsilon * ent.dp.topRows(2 * nk);
      dp.middleRows(u_off, 2 * nu) += w.epsilon * ent.dp.bottomRows(2 * nu);
    }

    Gradients grads = Gradients::zeros_like(state.params);
    backward(state, fwd, {dz, dp, {}}, grads);
    m.l_cdas = resample_hard_classes(grads);
    m.l_total = loss_total(m.l_kd, m.l_ud, m.entropy, w.epsilon);

    if (!std::isfinite(m.l_total) || !std::isfinite(m.l_cdas)) {
      std::ostringstream os;
      os << "train: non-finite loss at step " << state.step << " (epoch " << epoch << ")";
      abort_run(os.str());
    }
    try {
      sgd_step(state, grads, lr);
    } catch (const Error& e) {
      abort_run(std::string("train: ") + e.what());
    }
    for (int i = 0; i < n; ++i) {
      features_.push(pseudo[static_cast<std::size_t>(i)].label, pre.h.row(i).transpose());
    }
    result_.steps.push_back(m);
  }

  /// Auxiliary loss on embeddings drawn from hard classes; accumulates its
  /// gradient and returns its value.
  double resample_hard_classes(Gradients& grads) {
    const auto& sc = cfg_.sampler;
    if (!sc.enabled || sc.weight == 0 || sc.categories == 0 || sc.per_category == 0) return 0.0;
    const int classes = data_.num_classes;
    std::vector<double> probs = result_.difficulty
                                    ? result_.difficulty->p_difficulty
                                    : std::vector<double>(static_cast<std::size_t>(classes),
                                                          1.0 / classes);
    std::vector<Vector> embs;
    std::vector<int> cls;
    for (int t = 0; t < sc.categories; ++t) {
      const int c = sample_category(probs, rng_);
      for (auto& e : features_.retrieve_hard(c, static_cast<std::size_t>(sc.per_category))) {
        embs.push_back(std::move(e));
        cls.push_back(c);
      }
    }
    if (embs.empty()) return 0.0;
    const auto m = static_cast<Eigen::Index>(embs.size());
    Matrix h(m, embs.front().size());
    for (Eigen::Index i = 0; i < m; ++i) h.row(i) = embs[static_cast<std::size_t>(i)].transpose();
    result_.counters.cdas_embeddings += m;

    const ModelState& state = result_.state;
    const BatchForward f = forward_embeddings(state, h, cfg_.objectives.tau_s);
    Matrix dz = Matrix::Zero(m, f.z.cols());
    Matrix dp = Matrix::Zero(m, f.probs.cols());
    double value = 0;

    if (sc.contrastive) {
      std::vector<int> count(static_cast<std::size_t>(classes), 0);
      for (int c : cls) ++count[static_cast<std::size_t>(c)];
      std::vector<Eigen::Index> keep;
      for (Eigen::Index i = 0; i < m; ++i)
        if (count[static_cast<std::size_t>(cls[static_cast<std::size_t>(i)])] >= 2) keep.push_back(i);
      if (keep.size() >= 2) {
        ContrastiveBatch cb;
        cb.z.resize(static_cast<Eigen::Index>(keep.size()), f.z.cols());
        for (std::size_t r = 0; r < keep.size(); ++r) {
          cb.z.row(static_cast<Eigen::Index>(r)) = f.z.row(keep[r]);
          cb.groups.push_back(cls[static_cast<std::size_t>(keep[r])]);
        }
        ZLoss con = contrastive_loss(cb, cfg_.objectives.tau_c);
        value += con.value;
        for (std::size_t r = 0; r < keep.size(); ++r)
          dz.row(keep[r]) += con.dz.row(static_cast<Eigen::Index>(r));
      }
    }
    if (sc.classification) {
      Matrix target = Matrix::Zero(m, f.probs.cols());
      for (Eigen::Index i = 0; i < m; ++i) target(i, cls[static_cast<std::size_t>(i)]) = 1.0;
      ProbLoss ce = cluster_loss(f.probs, target);
      value += ce.value;
      dp += ce.dp;
    }
    dz *= sc.weight;
    dp *= sc.weight;
    backward(state, f, {dz, dp, {}}, grads);
    return sc.weight * value;
  }

  void refresh_difficulty(int epoch) {
    auto [emb, labels] = features_.snapshot();
    if (emb.rows() == 0) return;
    DifficultyOptions opt;
    opt.impute_empty = cfg_.sampler.impute_empty;
    DifficultyStats stats = compute_difficulty(emb, labels, result_.state.params.prototypes, opt);
    if (!out_.empty()) {
      char name[32];
      std::snprintf(name, sizeof name, "epoch_%03d.csv", epoch + 1);
      stats.write_csv(out_ / "difficulty" / name);
    }
    result_.difficulty = std::move(stats);
  }

  void evaluate(int epochs_done) {
    std::vector<const ImageTensor*> images;
    for (const auto& s : data_.unlabeled) images.push_back(&s.image);
    Matrix probs;
    result_.predictions = predict(result_.state, images, cfg_.objectives.tau_s, &probs);
    EpochEval ev;
    ev.epoch = epochs_done;
    ev.report = evaluate_split(data_, result_.predictions);
    ev.marginal_entropy = entropy_of_mean(probs);
    result_.final_report = ev.report;
    result_.marginal_entropy = ev.marginal_entropy;
    result_.evals.push_back(std::move(ev));
    if (!out_.empty()) {
      save_checkpoint(out_ / "checkpoint.fqdm", result_.state);
      write_eval_csv();
    }
  }

  void write_eval_csv() const {
    std::string text = "epoch,marginal_entropy," + EvalReport::csv_header() + "\n";
    for (const auto& ev : result_.evals) {
      char head[64];
      std::snprintf(head, sizeof head, "%d,%.10g,", ev.epoch, ev.marginal_entropy);
      text += head + ev.report.csv_row() + "\n";
    }
    write_text(out_ / "eval.csv", text);
  }

  void write_manifest(const std::string& status, const std::string& message = {}) const {
    nlohmann::json j;
    j["version"] = version_string();
    j["status"] = status;
    if (!message.empty()) j["message"] = message;
    j["config"] = cfg_.to_json();
    j["dataset"] = {{"num_classes", data_.num_classes},
                    {"num_known", data_.num_known},
                    {"labeled", data_.labeled.size()},
                    {"unlabeled", data_.unlabeled.size()}};
    j["steps"] = result_.steps.size();
    const auto& c = result_.counters;
    j["counters"] = {{"cdfp_calls", c.cdfp_calls},
                     {"cdfp_class_matched", c.cdfp_class_matched},
                     {"cdfp_identity", c.cdfp_identity},
                     {"idfp_calls", c.idfp_calls},
                     {"cdas_embeddings", c.cdas_embeddings}};
    write_text(out_ / "run_manifest.json", j.dump(2) + "\n");
  }

  [[noreturn]] void abort_run(const std::string& message) {
    if (!out_.empty()) {
      write_text(out_ / "metrics.csv", metrics_csv(result_.steps));
      write_manifest("aborted", message);
    }
    throw Error(message + (out_.empty() ? "" : "; last good checkpoint kept in " + out_.string()));
  }

  void finish() {
    if (out_.empty()) return;
    write_text(out_ / "metrics.csv", metrics_csv(result_.steps));
    save_checkpoint(out_ / "model.fqdm", result_.state);
    std::string preds = "sample_id,prediction\n";
    for (std::size_t i = 0; i < data_.unlabeled.size(); ++i) {
      preds += data_.unlabeled[i].id + "," + std::to_string(result_.predictions[i]) + "\n";
    }
    write_text(out_ / "predictions.csv", preds);
    write_text(out_ / "report.json", result_.final_report.to_json().dump(2) + "\n");
    write_text(out_ / "report.csv", EvalReport::csv_header() + "\n" + result_.final_report.csv_row() + "\n");
    write_manifest("completed");
  }

  RunConfig cfg_;
  const DatasetSplit& data_;
  fs::path out_;
  Rng rng_;
  MemoryBank bank_;
  FeatureBank features_;
  AugmentationSpec augment_;
  CdfpOptions cdfp_opts_;
  std::vector<bool> unknown_route_;
  TrainResult result_;
};

}  // namespace

int worker_threads() {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("FREQDISC_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return n;
}

TrainResult train(const RunConfig& config, const DatasetSplit& data, const fs::path& out_dir) {
  return Trainer(config, data, out_dir).run();
}

std::vector<int> predict(const ModelState& state, std::span<const ImageTensor* const> images,
                         double tau_cls, Matrix* probs_out) {
  constexpr std::size_t kChunk = 256;
  std::vector<int> out;
  out.reserve(images.size());
  if (probs_out) probs_out->resize(static_cast<Eigen::Index>(images.size()), state.shape.num_classes);
  for (std::size_t start = 0; start < images.size(); start += kChunk) {
    const std::size_t len = std::min(kChunk, images.size() - start);
    const BatchForward f = forward(state, flatten_batch(images.subspan(start, len)), tau_cls);
    for (Eigen::Index i = 0; i < f.probs.rows(); ++i) {
      Eigen::Index arg = 0;
      f.probs.row(i).maxCoeff(&arg);
      out.push_back(static_cast<int>(arg));
    }
    if (probs_out) probs_out->middleRows(static_cast<Eigen::Index>(start), f.probs.rows()) = f.probs;
  }
  return out;
}

EvalReport evaluate_split(const DatasetSplit& data, std::span<const int> predictions) {
  if (predictions.size() != data.unlabeled.size()) {
    throw Error("evaluate: prediction count does not match the unlabeled set");
  }
  std::vector<int> truth, domains;
  for (const auto& s : data.unlabeled) {
    truth.push_back(s.label);
    domains.push_back(s.domain);
  }
  std::set<int> old;
  for (int c = 0; c < data.num_known; ++c) old.insert(c);
  return cluster_acc(truth, predictions, old, domains);
}

std::string metrics_csv(std::span<const StepMetrics> steps) {
  std::string out = "step,epoch,l_kd,l_ud,delta,l_total,lr,tau_t,l_cdas\n";
  char line[256];
  for (const auto& m : steps) {
    std::snprintf(line, sizeof line, "%lld,%d,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                  static_cast<long long>(m.step), m.epoch, m.l_kd, m.l_ud, m.entropy, m.l_total,
                  m.lr, m.tau_t, m.l_cdas);
    out += line;
  }
  return out;
}

}  // namespace freqdisc
