#include "freqdisc/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#ifndef FREQDISC_VERSION
#define FREQDISC_VERSION "unknown"
#endif

namespace freqdisc {
namespace {

namespace pt = boost::property_tree;

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw Error("config: '" + key + "' expects a boolean, got '" + v + "'");
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  std::istringstream is(v);
  T out{};
  is >> out;
  if (is.fail() || !is.eof()) throw Error("config: '" + key + "' expects a number, got '" + v + "'");
  return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    cell.erase(0, cell.find_first_not_of(' '));
    cell.erase(cell.find_last_not_of(' ') + 1);
    out.push_back(parse_number<int>(key, cell));
  }
  if (out.empty()) throw Error("config: '" + key + "' expects a comma-separated list");
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

std::map<std::string, Setter> setters() {
  std::map<std::string, Setter> m;
  auto str = [](auto member) {
    return [member](RunConfig& c, const std::string&, const std::string& v) { member(c) = v; };
  };
  auto integer = [](auto member) {
    return [member](RunConfig& c, const std::string& k, const std::string& v) {
      member(c) = parse_number<long long>(k, v);
    };
  };
  auto real = [](auto member) {
    return [member](RunConfig& c, const std::string& k, const std::string& v) {
      member(c) = parse_number<double>(k, v);
    };
  };
  auto flag = [](auto member) {
    return [member](RunConfig& c, const std::string& k, const std::string& v) {
      member(c) = parse_bool(k, v);
    };
  };
#define FIELD(expr) [](RunConfig& c) -> auto& { return c.expr; }
  m["data.path"] = str(FIELD(data.path));
  m["data.folder_a"] = str(FIELD(data.folder_a));
  m["data.folder_b"] = str(FIELD(data.folder_b));
  m["data.classes"] = integer(FIELD(data.synthetic.num_classes));
  m["data.known"] = integer(FIELD(data.synthetic.num_known));
  m["data.per_class"] = integer(FIELD(data.synthetic.samples_per_class));
  m["data.channels"] = integer(FIELD(data.synthetic.channels));
  m["data.height"] = integer(FIELD(data.synthetic.height));
  m["data.width"] = integer(FIELD(data.synthetic.width));
  m["data.corruption"] = [](RunConfig& c, const std::string&, const std::string& v) {
    c.data.synthetic.corruption = parse_corruption(v);
  };
  m["data.severity"] = integer(FIELD(data.synthetic.severity));
  m["data.seed"] = integer(FIELD(data.synthetic.seed));

  m["spectral.window"] = real(FIELD(perturbation.window));

  m["domain_sep.enabled"] = flag(FIELD(domain_sep.enabled));
  m["domain_sep.k"] = integer(FIELD(domain_sep.k));
  m["domain_sep.log_amplitude"] = flag(FIELD(domain_sep.log_amplitude));
  m["domain_sep.anchor_subsample"] = integer(FIELD(domain_sep.anchor_subsample));
  m["domain_sep.refresh_every"] = integer(FIELD(domain_sep.refresh_every));

  m["perturbation.cdfp"] = flag(FIELD(perturbation.cdfp));
  m["perturbation.idfp"] = flag(FIELD(perturbation.idfp));
  m["perturbation.class_aware"] = flag(FIELD(perturbation.class_aware));
  m["perturbation.gate_both"] = flag(FIELD(perturbation.gate_both));
  m["perturbation.eta"] = real(FIELD(perturbation.eta));
  m["perturbation.bank_size"] = integer(FIELD(perturbation.bank_size));

  m["model.encoder"] = [](RunConfig& c, const std::string& k, const std::string& v) {
    c.model.encoder_layers = parse_int_list(k, v);
  };
  m["model.proj_hidden"] = integer(FIELD(model.proj_hidden));
  m["model.proj_dim"] = integer(FIELD(model.proj_dim));

  m["objectives.beta"] = real(FIELD(objectives.beta));
  m["objectives.epsilon"] = real(FIELD(objectives.epsilon));
  m["objectives.tau_u"] = real(FIELD(objectives.tau_u));
  m["objectives.tau_c"] = real(FIELD(objectives.tau_c));
  m["objectives.tau_s"] = real(FIELD(objectives.tau_s));
  m["objectives.tau_t_start"] = real(FIELD(objectives.tau_t_start));
  m["objectives.tau_t_end"] = real(FIELD(objectives.tau_t_end));
  m["objectives.tau_t_warmup"] = integer(FIELD(objectives.tau_t_warmup_epochs));

  m["sampler.enabled"] = flag(FIELD(sampler.enabled));
  m["sampler.refresh_every"] = integer(FIELD(sampler.refresh_every));
  m["sampler.categories"] = integer(FIELD(sampler.categories));
  m["sampler.per_category"] = integer(FIELD(sampler.per_category));
  m["sampler.weight"] = real(FIELD(sampler.weight));
  m["sampler.capacity"] = integer(FIELD(sampler.capacity));
  m["sampler.impute_empty"] = flag(FIELD(sampler.impute_empty));
  m["sampler.contrastive"] = flag(FIELD(sampler.contrastive));
  m["sampler.classification"] = flag(FIELD(sampler.classification));

  m["augment.flip"] = real(FIELD(augment.flip));
  m["augment.crop_min"] = real(FIELD(augment.crop_min));
  m["augment.crop_max"] = real(FIELD(augment.crop_max));
  m["augment.brightness"] = real(FIELD(augment.brightness));
  m["augment.contrast"] = real(FIELD(augment.contrast));

  m["train.epochs"] = integer(FIELD(train.epochs));
  m["train.batch_size"] = integer(FIELD(train.batch_size));
  m["train.lr"] = real(FIELD(train.lr));
  m["train.seed"] = integer(FIELD(train.seed));
  m["train.eval_every"] = integer(FIELD(train.eval_every));
  m["train.out"] = str(FIELD(train.out));
#undef FIELD
  return m;
}

RunConfig from_tree(const pt::ptree& tree) {
  static const auto table = setters();
  RunConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw Error("config: key '" + section + "' must sit inside a [section]");
    }
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      auto it = table.find(full);
      if (it == table.end()) throw Error("config: unknown key '" + full + "'");
      std::string v = value.get_value<std::string>();
      it->second(cfg, full, v);
    }
  }
  cfg.validate();
  return cfg;
}

}  // namespace

AugmentationSpec AugmentConfig::spec() const {
  AugmentationSpec s;
  if (flip > 0) s.transforms.emplace_back(HorizontalFlip{flip});
  if (crop_min < 1.0) s.transforms.emplace_back(RandomResizedCrop{crop_min, crop_max});
  if (brightness > 0) s.transforms.emplace_back(BrightnessJitter{brightness});
  if (contrast > 0) s.transforms.emplace_back(ContrastJitter{contrast});
  return s;
}

void RunConfig::set_baseline() {
  domain_sep.enabled = false;
  perturbation.cdfp = false;
  perturbation.idfp = false;
  sampler.enabled = false;
}

void RunConfig::validate() const {
  data.synthetic.validate();
  if (domain_sep.k < 1) throw Error("config: domain_sep.k must be >= 1");
  if (domain_sep.refresh_every < 1) throw Error("config: domain_sep.refresh_every must be >= 1");
  if (domain_sep.anchor_subsample < 0) throw Error("config: domain_sep.anchor_subsample must be >= 0");
  if (!(perturbation.eta >= 0 && perturbation.eta <= 1)) throw Error("config: perturbation.eta must lie in [0,1]");
  if (perturbation.bank_size < 1) throw Error("config: perturbation.bank_size must be >= 1");
  if (!(perturbation.window >= 0 && perturbation.window <= 0.5)) throw Error("config: spectral.window must lie in [0,0.5]");
  for (int l : model.encoder_layers)
    if (l < 1) throw Error("config: model.encoder sizes must be positive");
  if (model.proj_hidden < 1 || model.proj_dim < 1) throw Error("config: projection sizes must be positive");
  objectives.validate();
  if (sampler.refresh_every < 1 || sampler.categories < 0 || sampler.per_category < 0 ||
      sampler.capacity < 1 || sampler.weight < 0) {
    throw Error("config: invalid sampler settings");
  }
  if (!(augment.flip >= 0 && augment.flip <= 1) || !(augment.crop_min > 0) ||
      !(augment.crop_min <= augment.crop_max && augment.crop_max <= 1) || augment.brightness < 0 ||
      augment.contrast < 0 || augment.contrast >= 1) {
    throw Error("config: invalid augmentation settings");
  }
  if (train.epochs < 1 || train.batch_size < 1 || !(train.lr >= 0) || train.eval_every < 1) {
    throw Error("config: invalid train settings");
  }
}

nlohmann::json RunConfig::to_json() const {
  const auto& s = data.synthetic;
  return {
      {"data",
       {{"path", data.path}, {"folder_a", data.folder_a}, {"folder_b", data.folder_b},
        {"classes", s.num_classes}, {"known", s.num_known}, {"per_class", s.samples_per_class},
        {"channels", s.channels}, {"height", s.height}, {"width", s.width},
        {"corruption", to_string(s.corruption)}, {"severity", s.severity}, {"seed", s.seed}}},
      {"spectral", {{"window", perturbation.window}}},
      {"domain_sep",
       {{"enabled", domain_sep.enabled}, {"k", domain_sep.k},
        {"log_amplitude", domain_sep.log_amplitude},
        {"anchor_subsample", domain_sep.anchor_subsample},
        {"refresh_every", domain_sep.refresh_every}}},
      {"perturbation",
       {{"cdfp", perturbation.cdfp}, {"idfp", perturbation.idfp},
        {"class_aware", perturbation.class_aware}, {"gate_both", perturbation.gate_both},
        {"eta", perturbation.eta}, {"bank_size", perturbation.bank_size}}},
      {"model",
       {{"encoder", model.encoder_layers}, {"proj_hidden", model.proj_hidden},
        {"proj_dim", model.proj_dim}}},
      {"objectives",
       {{"beta", objectives.beta}, {"epsilon", objectives.epsilon}, {"tau_u", objectives.tau_u},
        {"tau_c", objectives.tau_c}, {"tau_s", objectives.tau_s},
        {"tau_t_start", objectives.tau_t_start}, {"tau_t_end", objectives.tau_t_end},
        {"tau_t_warmup", objectives.tau_t_warmup_epochs}}},
      {"sampler",
       {{"enabled", sampler.enabled}, {"refresh_every", sampler.refresh_every},
        {"categories", sampler.categories}, {"per_category", sampler.per_category},
        {"weight", sampler.weight}, {"capacity", sampler.capacity},
        {"impute_empty", sampler.impute_empty}, {"contrastive", sampler.contrastive},
        {"classification", sampler.classification}}},
      {"augment",
       {{"flip", augment.flip}, {"crop_min", augment.crop_min}, {"crop_max", augment.crop_max},
        {"brightness", augment.brightness}, {"contrast", augment.contrast}}},
      {"train",
       {{"epochs", train.epochs}, {"batch_size", train.batch_size}, {"lr", train.lr},
        {"seed", train.seed}, {"eval_every", train.eval_every}, {"out", train.out}}},
  };
}

RunConfig parse_config(const std::string& text) {
  std::istringstream is(text);
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(std::string("config: ") + e.what());
  }
  return from_tree(tree);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("config: cannot open " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string version_string() { return FREQDISC_VERSION; }

}  // namespace freqdisc
