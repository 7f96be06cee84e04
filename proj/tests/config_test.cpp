#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "freqdisc/commands.hpp"
#include "freqdisc/config.hpp"

using namespace freqdisc;

TEST(Config, DefaultsAreDeskScale) {
  const RunConfig c;
  EXPECT_DOUBLE_EQ(c.objectives.beta, 0.35);
  EXPECT_DOUBLE_EQ(c.perturbation.eta, 0.9);
  EXPECT_DOUBLE_EQ(c.objectives.epsilon, 0.1);
  EXPECT_EQ(c.perturbation.bank_size, 256);
  EXPECT_EQ(c.domain_sep.k, 3);
  EXPECT_DOUBLE_EQ(c.perturbation.window, 0.04);
  EXPECT_EQ(c.train.epochs, 60);
  EXPECT_EQ(c.train.batch_size, 64);
  EXPECT_EQ(c.domain_sep.refresh_every, 5);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, ParsesEverySection) {
  const RunConfig c = parse_config(R"(
[data]
classes = 6
known = 3
per_class = 10
corruption = fog_haze
severity = 2
seed = 9
[spectral]
window = 0.1
[domain_sep]
enabled = false
k = 5
[perturbation]
eta = 0.5
bank_size = 32
class_aware = false
[model]
encoder = 64, 32
proj_hidden = 16
proj_dim = 8
[objectives]
beta = 0.5
epsilon = 1.0
tau_t_warmup = 10
[sampler]
per_category = 4
weight = 0.25
[augment]
flip = 0
[train]
epochs = 3
batch_size = 16
lr = 0.05
seed = 7
out = somewhere
)");
  EXPECT_EQ(c.data.synthetic.num_classes, 6);
  EXPECT_EQ(c.data.synthetic.num_known, 3);
  EXPECT_EQ(c.data.synthetic.samples_per_class, 10);
  EXPECT_EQ(c.data.synthetic.corruption, Corruption::fog_haze);
  EXPECT_EQ(c.data.synthetic.seed, 9u);
  EXPECT_DOUBLE_EQ(c.perturbation.window, 0.1);
  EXPECT_FALSE(c.domain_sep.enabled);
  EXPECT_EQ(c.domain_sep.k, 5);
  EXPECT_DOUBLE_EQ(c.perturbation.eta, 0.5);
  EXPECT_EQ(c.perturbation.bank_size, 32);
  EXPECT_FALSE(c.perturbation.class_aware);
  EXPECT_EQ(c.model.encoder_layers, (std::vector<int>{64, 32}));
  EXPECT_EQ(c.model.proj_dim, 8);
  EXPECT_DOUBLE_EQ(c.objectives.beta, 0.5);
  EXPECT_EQ(c.objectives.tau_t_warmup_epochs, 10);
  EXPECT_EQ(c.sampler.per_category, 4);
  EXPECT_DOUBLE_EQ(c.augment.flip, 0.0);
  EXPECT_EQ(c.train.epochs, 3);
  EXPECT_EQ(c.train.seed, 7u);
  EXPECT_EQ(c.train.out, "somewhere");
}

TEST(Config, RejectsUnknownKeys) {
  EXPECT_THROW(parse_config("[train]\nepoch = 3\n"), Error);
  EXPECT_THROW(parse_config("[nonsense]\nx = 1\n"), Error);
  EXPECT_THROW(parse_config("epochs = 3\n"), Error);
}

TEST(Config, RejectsInvalidValues) {
  EXPECT_THROW(parse_config("[perturbation]\neta = 1.5\n"), Error);
  EXPECT_THROW(parse_config("[objectives]\nbeta = -0.1\n"), Error);
  EXPECT_THROW(parse_config("[train]\nepochs = 0\n"), Error);
  EXPECT_THROW(parse_config("[train]\nepochs = three\n"), Error);
  EXPECT_THROW(parse_config("[data]\nknown = 9\n"), Error);
  EXPECT_THROW(parse_config("[data]\ncorruption = zoom_blur\n"), Error);
  EXPECT_THROW(parse_config("[domain_sep]\nk = 0\n"), Error);
}

TEST(Config, BaselineTurnsEveryComponentOff) {
  RunConfig c;
  c.set_baseline();
  EXPECT_FALSE(c.domain_sep.enabled);
  EXPECT_FALSE(c.perturbation.cdfp);
  EXPECT_FALSE(c.perturbation.idfp);
  EXPECT_FALSE(c.sampler.enabled);
  EXPECT_DOUBLE_EQ(c.objectives.epsilon, 0.1);
}

TEST(Config, FlagsApplyOnTopOfFile) {
  const auto path = std::filesystem::temp_directory_path() / "freqdisc_config_flags.ini";
  std::ofstream(path) << "[train]\nseed = 3\n";
  CommandOptions o;
  o.config = path;
  o.seed = 11;
  o.no_cdfp = true;
  o.no_class_aware = true;
  RunConfig c = resolve_config(o);
  EXPECT_EQ(c.train.seed, 11u);
  EXPECT_FALSE(c.perturbation.cdfp);
  EXPECT_TRUE(c.perturbation.idfp);
  EXPECT_FALSE(c.perturbation.class_aware);
  o = CommandOptions{};
  o.baseline = true;
  c = resolve_config(o);
  EXPECT_FALSE(c.sampler.enabled);
  EXPECT_FALSE(c.domain_sep.enabled);
  std::filesystem::remove(path);
  o.config = path;
  EXPECT_THROW(resolve_config(o), Error);
}

TEST(Config, JsonCarriesResolvedValues) {
  RunConfig c;
  c.train.seed = 5;
  const auto j = c.to_json();
  EXPECT_EQ(j.dump().find("\"seed\":5") != std::string::npos, true);
  EXPECT_FALSE(version_string().empty());
}
