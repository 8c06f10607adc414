#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "common.hpp"
#include "odp/error.hpp"
#include "odp/io.hpp"
#include "odp/trainer.hpp"

namespace fs = std::filesystem;

namespace odptool {

namespace {

odp::MaskMode parse_mask_mode(const std::string& s) {
  if (s == "hard") return odp::MaskMode::Hard;
  if (s == "soft") return odp::MaskMode::Soft;
  if (s == "random") return odp::MaskMode::Random;
  throw odp::ConfigError("mask-mode must be hard|soft|random, got \"" + s + "\"");
}

struct TrainArgs {
  std::string config_path, data_path, out_dir;
  // Flag overrides; flags win over the JSON config.
  std::int64_t epochs = -1, batch_size = -1, save_every = -1, seed = -1;
  double lr = -1.0, alpha = -1.0, beta = -1.0, gamma = -1.0, lambda = -1.0;
  std::string mask_mode, purification_mode;
};

void run_train(const TrainArgs& a) {
  odp::TrainConfig cfg;
  if (!a.config_path.empty())
    cfg = odp::parse_train_config(odp::read_file(a.config_path));
  if (a.epochs >= 0) cfg.epochs = static_cast<int>(a.epochs);
  if (a.batch_size >= 0) cfg.batch_size = static_cast<int>(a.batch_size);
  if (a.save_every >= 0) cfg.save_every = static_cast<int>(a.save_every);
  if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
  if (a.lr >= 0.0) cfg.lr = a.lr;
  if (a.alpha >= 0.0) cfg.weights.alpha = a.alpha;
  if (a.beta >= 0.0) cfg.weights.beta = a.beta;
  if (a.gamma >= 0.0) cfg.weights.gamma = a.gamma;
  if (a.lambda >= 0.0) cfg.weights.lambda = a.lambda;
  if (!a.mask_mode.empty()) cfg.mask_mode = parse_mask_mode(a.mask_mode);
  if (!a.purification_mode.empty()) {
    odp::TrainConfig probe = odp::parse_train_config(
        "{\"purification_mode\":\"" + a.purification_mode + "\"}");
    cfg.purification_mode = probe.purification_mode;
  }

  const odp::Dataset dataset = odp::load_dataset(a.data_path);
  fs::create_directories(a.out_dir);
  const std::string effective_config = odp::serialize_train_config(cfg);
  odp::write_file_atomic((fs::path(a.out_dir) / "config.json").string(),
                         effective_config);

  ManifestScope scope("train", odp::sha256_hex(effective_config), cfg.seed,
                      (fs::path(a.out_dir) / "manifest.json").string());

  bool init_saved = false;
  auto on_epoch = [&](int epoch, const odp::ModelParams& params) {
    if (cfg.save_every > 0 && (epoch + 1) % cfg.save_every == 0) {
      char name[64];
      std::snprintf(name, sizeof(name), "model_epoch_%03d.odpm", epoch);
      odp::save_model(params, (fs::path(a.out_dir) / name).string());
    }
  };
  (void)init_saved;

  odp::TrainResult result = odp::train(cfg, dataset, on_epoch);
  odp::save_model(result.initial_params,
                  (fs::path(a.out_dir) / "model_init.odpm").string());
  odp::save_model(result.params, (fs::path(a.out_dir) / "model.odpm").string());
  odp::write_file_atomic((fs::path(a.out_dir) / "history.csv").string(),
                         odp::history_csv(result.history));
  odp::write_file_atomic((fs::path(a.out_dir) / "steps.csv").string(),
                         result.step_log_csv);
  scope.finish();

  const odp::EpochStats& last = result.history.epochs.back();
  std::cout << "trained " << cfg.epochs << " epochs; final train bAcc "
            << last.train_bacc << ", total loss " << last.mean_loss.total
            << "; model at " << (fs::path(a.out_dir) / "model.odpm").string()
            << "\n";
}

struct EvalArgs {
  std::string model_path, data_path, out;
  std::string mask_mode = "hard";
};

void run_eval(const EvalArgs& a) {
  const odp::ModelParams params = odp::load_model(a.model_path);
  const odp::Dataset dataset = odp::load_dataset(a.data_path);

  nlohmann::json cj;
  cj["model"] = a.model_path;
  cj["data"] = a.data_path;
  cj["mask_mode"] = a.mask_mode;
  ManifestScope scope("eval", odp::sha256_hex(cj.dump()), 0,
                      a.out + ".manifest.json");

  const odp::EvalResult r =
      odp::evaluate(params, dataset, parse_mask_mode(a.mask_mode));

  std::ostringstream json;
  json.precision(17);
  json << "{\"bacc\":" << r.bacc << ",\"nll\":" << r.nll
       << ",\"degenerate_single_class\":"
       << (r.degenerate_single_class ? "true" : "false")
       << ",\"n_samples\":" << r.n_samples << "}\n";
  odp::write_file_atomic(a.out + ".json", json.str());

  std::ostringstream csv;
  csv.precision(17);
  csv << "bacc,nll,degenerate_single_class,n_samples\n"
      << r.bacc << ',' << r.nll << ','
      << (r.degenerate_single_class ? 1 : 0) << ',' << r.n_samples << "\n";
  odp::write_file_atomic(a.out + ".csv", csv.str());
  scope.finish();

  std::cout << "bacc=" << r.bacc << " nll=" << r.nll << " n=" << r.n_samples
            << (r.degenerate_single_class ? " (degenerate: single class)" : "")
            << "\n";
}

}  // namespace

void register_train(CLI::App& app) {
  auto args = std::make_shared<TrainArgs>();
  CLI::App* train = app.add_subcommand(
      "train", "Phase-1 training loop: decomposition, distillation, "
               "purification, alignment under AdamW + cosine annealing");
  train->add_option("--config", args->config_path, "TrainConfig JSON");
  train->add_option("--data", args->data_path, "Training ODPD dataset")->required();
  train->add_option("--out", args->out_dir, "Output directory")->required();
  train->add_option("--epochs", args->epochs, "Override epochs");
  train->add_option("--batch-size", args->batch_size, "Override batch size");
  train->add_option("--save-every", args->save_every, "Checkpoint interval (epochs)");
  train->add_option("--seed", args->seed, "Override seed");
  train->add_option("--lr", args->lr, "Override learning rate");
  train->add_option("--alpha", args->alpha, "Override sufficiency weight");
  train->add_option("--beta", args->beta, "Override purification weight");
  train->add_option("--gamma", args->gamma, "Override alignment weight");
  train->add_option("--lambda", args->lambda, "Override sparsity weight");
  train->add_option("--mask-mode", args->mask_mode, "hard | soft | random");
  train->add_option("--purification-mode", args->purification_mode,
                    "counterfactual | gaussian | dropout | none");
  train->callback([args] { run_train(*args); });
}

void register_eval(CLI::App& app) {
  auto args = std::make_shared<EvalArgs>();
  CLI::App* eval = app.add_subcommand(
      "eval", "Phase-2 evaluation: bAcc and NLL through the universal mask");
  eval->add_option("--model", args->model_path, "ODPM model")->required();
  eval->add_option("--data", args->data_path, "ODPD dataset")->required();
  eval->add_option("--out", args->out, "Output base (writes .json and .csv)")
      ->required();
  eval->add_option("--mask-mode", args->mask_mode, "hard | soft");
  eval->callback([args] { run_eval(*args); });
}

}  // namespace odptool
