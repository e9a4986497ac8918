// Command-line front end: dataset generation, training, evaluation, and the
// reproduction workflows (ablation, bias sweep, robustness grid).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "idrl/experiment.hpp"

namespace fs = std::filesystem;
using namespace idrl;

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON config file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", args.seed, "override the config's base seed");
  cmd->add_option("--out", args.out_dir, "output directory");
}

ExperimentConfig load_config(const CommonArgs& args) {
  ExperimentConfig cfg = experiment_config_from_json(load_json(args.config_path));
  if (args.seed) cfg.seed_base = *args.seed;
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  return cfg;
}

void write_training_log(const FitResult& fitted, const fs::path& path) {
  std::ofstream out(path);
  out << "epoch,loss_y,loss_infomax,loss_domain_mi,loss_phi,valid_rmse\n";
  for (const EpochLog& entry : fitted.log)
    out << entry.epoch << ',' << detail::format_double(entry.loss_y) << ','
        << detail::format_double(entry.loss_infomax) << ','
        << detail::format_double(entry.loss_domain_mi) << ','
        << detail::format_double(entry.loss_phi) << ','
        << detail::format_double(entry.valid_rmse) << "\n";
}

int cmd_generate(const CommonArgs& args) {
  json doc = load_json(args.config_path);
  SyntheticSpec spec = doc.contains("dataset")
                           ? synthetic_spec_from_json(doc.at("dataset").at("spec"))
                           : synthetic_spec_from_json(doc);
  const std::uint64_t seed = args.seed.value_or(1);
  GenerateResult result = generate(spec, seed);
  const fs::path out = args.out_dir.empty() ? fs::path(".") : fs::path(args.out_dir);
  fs::create_directories(out);
  save_dataset_csv(result.data, (out / "data.csv").string());
  save_json(generation_metadata(spec, seed, result.coefficients),
            (out / "data.meta.json").string());
  std::cout << "wrote " << (out / "data.csv").string() << " (" << result.data.n()
            << " rows, " << result.data.dim() << " covariates)\n";
  return 0;
}

int cmd_train(const CommonArgs& args) {
  ExperimentConfig cfg = load_config(args);
  PreparedData data = prepare_data(cfg, cfg.synthetic, 0);
  IdrlConfig model_cfg = cfg.model;
  model_cfg.seed = data.seeds.at("model").get<std::uint64_t>();
  FitResult fitted = fit(model_cfg, data.train, data.valid);

  fs::create_directories(cfg.out_dir);
  const fs::path out(cfg.out_dir);
  save_model(fitted.params, (out / "model.json").string());
  write_training_log(fitted, out / "training_log.csv");

  Dataset insample = concat(data.train, data.valid);
  json doc{{"format_version", kReportFormatVersion},
           {"method", "idrl"},
           {"seeds", data.seeds},
           {"config", experiment_config_to_json(cfg)},
           {"best_epoch", fitted.best_epoch},
           {"best_valid_rmse", fitted.best_valid_rmse},
           {"in_sample", report_to_json(compute_report(
                             predict_dataset(fitted.params, insample), insample,
                             "in_sample"))},
           {"out_sample", report_to_json(compute_report(
                              predict_dataset(fitted.params, data.test), data.test,
                              "out_sample"))}};
  save_json(doc, (out / "train_report.json").string());
  std::cout << "model written to " << (out / "model.json").string()
            << " (best epoch " << fitted.best_epoch << ", valid RMSE "
            << fitted.best_valid_rmse << ")\n";
  return 0;
}

// With --model: score a serialized model on the configured data. Without:
// the replicated benchmark across the configured methods.
int cmd_evaluate(const CommonArgs& args, const std::string& model_path) {
  ExperimentConfig cfg = load_config(args);
  if (model_path.empty()) {
    BenchmarkResult result = run_benchmark(cfg);
    std::cout << result.aggregate.at("methods").dump(2) << "\n";
    std::cout << "reports in " << cfg.out_dir << "\n";
    return 0;
  }
  IdrlParams params = load_model(model_path);
  PreparedData data = prepare_data(cfg, cfg.synthetic, 0);
  Dataset insample = concat(data.train, data.valid);

  fs::create_directories(cfg.out_dir);
  json doc{{"format_version", kReportFormatVersion},
           {"method", "idrl"},
           {"model", model_path},
           {"seeds", data.seeds},
           {"config", experiment_config_to_json(cfg)},
           {"in_sample", report_to_json(compute_report(
                             predict_dataset(params, insample), insample,
                             "in_sample"))},
           {"out_sample", report_to_json(compute_report(
                              predict_dataset(params, data.test), data.test,
                              "out_sample"))}};
  const fs::path out(cfg.out_dir);
  save_json(doc, (out / "evaluate_report.json").string());
  std::cout << doc.at("out_sample").dump(2) << "\n";
  return 0;
}

int cmd_ablate(const CommonArgs& args) {
  ExperimentConfig cfg = load_config(args);
  AblationResult result = run_ablation(cfg);
  std::cout << result.aggregate.at("methods").dump(2) << "\n";
  std::cout << "comparison table: " << (fs::path(cfg.out_dir) / "ablation.csv").string()
            << "\n";
  return 0;
}

int cmd_sweep(const CommonArgs& args, std::vector<double> q_flags) {
  ExperimentConfig cfg = load_config(args);
  const std::vector<double>& qs = q_flags.empty() ? cfg.q_values : q_flags;
  run_bias_sweep(cfg, qs);
  std::cout << "series: " << (fs::path(cfg.out_dir) / "bias_sweep.csv").string() << "\n";
  return 0;
}

int cmd_grid(const CommonArgs& args) {
  ExperimentConfig cfg = load_config(args);
  run_grid(cfg, cfg.grid_families, cfg.grid_instrumental, cfg.grid_irrelevant);
  std::cout << "grid: " << (fs::path(cfg.out_dir) / "grid.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IDRL: infomax and domain-independent representation learning "
               "for treatment-effect estimation"};
  app.require_subcommand(1);

  CommonArgs gen_args, train_args, eval_args, ablate_args, sweep_args, grid_args;
  std::string model_path;
  std::vector<double> q_flags;

  add_common(app.add_subcommand("generate", "write a synthetic dataset CSV and its metadata sidecar"),
             gen_args);
  add_common(app.add_subcommand("train", "fit the model once and serialize it"), train_args);
  CLI::App* eval_cmd = app.add_subcommand(
      "evaluate", "replicated benchmark, or score a saved model with --model");
  add_common(eval_cmd, eval_args);
  eval_cmd->add_option("--model", model_path, "model JSON produced by train")
      ->check(CLI::ExistingFile);
  add_common(app.add_subcommand("ablate", "full model vs single-term ablations"), ablate_args);
  CLI::App* sweep_cmd =
      app.add_subcommand("sweep-q", "bias-robustness series over q");
  add_common(sweep_cmd, sweep_args);
  sweep_cmd->add_option("--q", q_flags, "q values (overrides the config list)");
  add_common(app.add_subcommand("grid", "correlation-family x variable-count grid"), grid_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("generate")) return cmd_generate(gen_args);
    if (app.got_subcommand("train")) return cmd_train(train_args);
    if (app.got_subcommand("evaluate")) return cmd_evaluate(eval_args, model_path);
    if (app.got_subcommand("ablate")) return cmd_ablate(ablate_args);
    if (app.got_subcommand("sweep-q")) return cmd_sweep(sweep_args, q_flags);
    if (app.got_subcommand("grid")) return cmd_grid(grid_args);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
