#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "freqdisc/commands.hpp"
#include "freqdisc/config.hpp"

int main(int argc, char** argv) {
  using namespace freqdisc;
  CLI::App app{"Frequency-guided category discovery under domain shift"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);

  CommandOptions opts;
  std::uint64_t seed = 0;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config, "INI configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Training seed override");
    sub->add_option("--out", opts.out, "Output directory");
    sub->add_flag("--baseline", opts.baseline, "Disable every frequency component");
    sub->add_flag("--no-fds", opts.no_fds, "Disable domain separation");
    sub->add_flag("--no-cdfp", opts.no_cdfp, "Disable cross-domain perturbation");
    sub->add_flag("--no-idfp", opts.no_idfp, "Disable intra-domain perturbation");
    sub->add_flag("--no-cdas", opts.no_cdas, "Disable difficulty-aware resampling");
    sub->add_flag("--no-class-aware", opts.no_class_aware, "Draw style donors from the whole bank");
    sub->add_flag("--force", opts.force, "Overwrite a non-empty output directory");
  };

  auto* generate = app.add_subcommand("generate", "Write the synthetic benchmark to disk");
  auto* separate = app.add_subcommand("separate", "Partition unlabeled samples by domain");
  auto* trainc = app.add_subcommand("train", "Train and evaluate");
  auto* evaluate = app.add_subcommand("evaluate", "Score a predictions CSV");
  auto* preview = app.add_subcommand("perturb-preview", "Write low-frequency swap examples");
  for (auto* sub : {generate, separate, trainc, evaluate, preview}) common(sub);
  evaluate->add_option("--predictions", opts.predictions, "sample_id,prediction CSV")->required();
  evaluate->add_option("--dataset", opts.dataset, "Dataset directory with manifest.csv");
  preview->add_option("--pairs", opts.preview_pairs, "Number of content/donor pairs");

  CLI11_PARSE(app, argc, argv);
  for (auto* sub : {generate, separate, trainc, evaluate, preview}) {
    if (sub->count("--seed") > 0) opts.seed = seed;
  }

  try {
    if (*generate) cmd_generate(opts);
    else if (*separate) cmd_separate(opts);
    else if (*trainc) cmd_train(opts);
    else if (*evaluate) cmd_evaluate(opts);
    else if (*preview) cmd_perturb_preview(opts);
  } catch (const std::exception& e) {
    std::cerr << "freqdisc: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
