#include "freqdisc/commands.hpp"

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "freqdisc/domain_sep.hpp"
#include "freqdisc/evaluation.hpp"
#include "freqdisc/image_io.hpp"
#include "freqdisc/spectral.hpp"
#include "freqdisc/train.hpp"

namespace freqdisc {
namespace {

namespace fs = std::filesystem;

fs::path output_dir(const CommandOptions& o, const RunConfig& cfg) {
  return o.out.empty() ? fs::path(cfg.train.out) : fs::path(o.out);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  os << text;
}

}  // namespace

RunConfig resolve_config(const CommandOptions& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (o.seed) cfg.train.seed = *o.seed;
  if (o.baseline) cfg.set_baseline();
  if (o.no_fds) cfg.domain_sep.enabled = false;
  if (o.no_cdfp) cfg.perturbation.cdfp = false;
  if (o.no_idfp) cfg.perturbation.idfp = false;
  if (o.no_cdas) cfg.sampler.enabled = false;
  if (o.no_class_aware) cfg.perturbation.class_aware = false;
  cfg.validate();
  return cfg;
}

DatasetSplit load_split(const RunConfig& cfg) {
  if (!cfg.data.path.empty()) return read_dataset(cfg.data.path);
  const auto& s = cfg.data.synthetic;
  if (!cfg.data.folder_a.empty()) {
    std::vector<Sample> a = load_image_folder(cfg.data.folder_a, 0, s.height, s.width);
    std::vector<Sample> b;
    if (!cfg.data.folder_b.empty()) b = load_image_folder(cfg.data.folder_b, 1, s.height, s.width);
    int classes = 0;
    for (const auto& x : a) classes = std::max(classes, x.label + 1);
    for (const auto& x : b) classes = std::max(classes, x.label + 1);
    if (s.num_known > classes) throw Error("data: more known classes than folder classes");
    Rng rng(mix_seed(s.seed, 11));
    return make_split(a, b, classes, s.num_known, rng);
  }
  return generate_benchmark(s);
}

void cmd_generate(const CommandOptions& o) {
  const RunConfig cfg = resolve_config(o);
  const fs::path root = !o.out.empty() ? fs::path(o.out) : fs::path(cfg.data.path);
  if (root.empty()) throw Error("generate: no output directory (use --out or data.path)");
  if (fs::exists(root) && !fs::is_empty(root)) {
    if (!o.force) throw Error("generate: " + root.string() + " is not empty (use --force)");
    fs::remove_all(root);
  }
  const DatasetSplit split = generate_benchmark(cfg.data.synthetic);
  write_dataset(split, root);
  std::cout << "wrote " << split.labeled.size() << " labeled and " << split.unlabeled.size()
            << " unlabeled samples to " << root.string() << "\n";
}

void cmd_separate(const CommandOptions& o) {
  const RunConfig cfg = resolve_config(o);
  const DatasetSplit split = load_split(cfg);
  const int k = cfg.domain_sep.k;
  if (static_cast<int>(split.labeled.size()) < k) {
    throw Error("separate: labeled set has " + std::to_string(split.labeled.size()) +
                " samples, fewer than k = " + std::to_string(k));
  }
  DescriptorOptions dopt;
  dopt.log_amplitude = cfg.domain_sep.log_amplitude;
  std::vector<AmplitudeDescriptor> desc;
  for (const auto& s : split.labeled) desc.push_back(amplitude_descriptor(s.image, s.id, dopt));
  const AnchorSet anchors(std::move(desc));
  std::vector<ImageTensor> images;
  std::vector<std::string> ids;
  for (const auto& s : split.unlabeled) {
    images.push_back(s.image);
    ids.push_back(s.id);
  }
  PartitionOptions popt;
  popt.k = k;
  popt.descriptor = dopt;
  const DomainPartition part = partition(images, ids, anchors, popt);

  const fs::path out = output_dir(o, cfg);
  fs::create_directories(out);
  part.write_csv(out / "partition.csv");
  write_text(out / "gmm.json", part.model.to_json().dump(2) + "\n");

  std::size_t agree = 0;
  for (std::size_t i = 0; i < split.unlabeled.size(); ++i) {
    const bool unknown = part.samples[i].label == Domain::unknown;
    agree += unknown == (split.unlabeled[i].domain == 1);
  }
  std::cout << "partitioned " << split.unlabeled.size() << " samples; agreement with hidden domain "
            << static_cast<double>(agree) / static_cast<double>(split.unlabeled.size()) << "\n";
}

void cmd_train(const CommandOptions& o) {
  const RunConfig cfg = resolve_config(o);
  const DatasetSplit split = load_split(cfg);
  const fs::path out = output_dir(o, cfg);
  const TrainResult res = train(cfg, split, out);
  std::cout << res.final_report.to_json().dump(2) << "\n";
}

void cmd_evaluate(const CommandOptions& o) {
  const RunConfig cfg = resolve_config(o);
  if (o.predictions.empty()) throw Error("evaluate: --predictions is required");
  const std::string dataset = !o.dataset.empty() ? o.dataset : cfg.data.path;
  if (dataset.empty()) throw Error("evaluate: --dataset is required");
  const DatasetSplit split = read_dataset(dataset);

  std::ifstream is(o.predictions);
  if (!is) throw Error("evaluate: cannot open " + o.predictions);
  std::map<std::string, int> by_id;
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error("evaluate: malformed line '" + line + "'");
    by_id[line.substr(0, comma)] = std::stoi(line.substr(comma + 1));
  }
  std::vector<int> preds;
  std::vector<std::string> missing;
  for (const auto& s : split.unlabeled) {
    auto it = by_id.find(s.id);
    if (it == by_id.end()) {
      missing.push_back(s.id);
      continue;
    }
    if (it->second < 0 || it->second >= split.num_classes) {
      throw Error("evaluate: prediction for " + s.id + " is out of range");
    }
    preds.push_back(it->second);
  }
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << "evaluate: " << missing.size() << " unlabeled ids have no prediction:";
    for (std::size_t i = 0; i < std::min<std::size_t>(10, missing.size()); ++i) msg << " " << missing[i];
    throw Error(msg.str());
  }
  const EvalReport report = evaluate_split(split, preds);
  const std::string text = report.to_json().dump(2) + "\n";
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    write_text(fs::path(o.out) / "report.json", text);
  }
  std::cout << text;
}

void cmd_perturb_preview(const CommandOptions& o) {
  const RunConfig cfg = resolve_config(o);
  const DatasetSplit split = load_split(cfg);
  const fs::path out = output_dir(o, cfg);
  fs::create_directories(out);

  std::vector<const Sample*> donors;
  for (const auto& s : split.unlabeled)
    if (s.domain == 1) donors.push_back(&s);
  if (split.labeled.empty() || donors.empty()) {
    throw Error("perturb-preview: needs labeled samples and unknown-domain samples");
  }
  const FreqWindow window{cfg.perturbation.window};
  const int pairs = std::max(1, o.preview_pairs);
  nlohmann::json manifest = {{"window", cfg.perturbation.window}, {"pairs", nlohmann::json::array()}};
  for (int i = 0; i < pairs; ++i) {
    const Sample& content = split.labeled[static_cast<std::size_t>(i) % split.labeled.size()];
    const Sample& donor = *donors[static_cast<std::size_t>(i) % donors.size()];
    const Spectrum fc = fft2(content.image);
    const Spectrum fd = fft2(donor.image);
    const Reconstruction rec = ifft2_raw(splice_low_freq(fd, fc, window));
    ImageTensor swapped = rec.image;
    swapped.clamp01();
    const std::string stem = "pair_" + std::to_string(i);
    write_png(out / (stem + "_content.png"), content.image);
    write_png(out / (stem + "_donor.png"), donor.image);
    write_png(out / (stem + "_swapped.png"), swapped);
    manifest["pairs"].push_back({{"content", content.id},
                                 {"donor", donor.id},
                                 {"files", {stem + "_content.png", stem + "_donor.png", stem + "_swapped.png"}},
                                 {"max_imag", rec.max_imag},
                                 {"max_change", max_abs_diff(swapped, content.image)}});
  }
  write_text(out / "preview.json", manifest.dump(2) + "\n");
  std::cout << "wrote " << pairs << " preview pairs to " << out.string() << "\n";
}

}  // namespace freqdisc
