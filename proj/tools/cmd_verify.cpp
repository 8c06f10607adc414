#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "common.hpp"
#include "odp/error.hpp"
#include "odp/io.hpp"
#include "odp/losses.hpp"
#include "odp/trainer.hpp"

namespace odptool {

namespace {

struct VerifyArgs {
  std::string model_path, data_path, config_path, out;
  std::string before_path, after_path;
  std::string mask_mode = "hard";
  int batch = 32;
  int samples = 256;
  double eps = 1e-4;
  std::uint64_t seed = 42;
};

odp::MaskMode parse_mode(const std::string& s) {
  if (s == "hard") return odp::MaskMode::Hard;
  if (s == "soft") return odp::MaskMode::Soft;
  throw odp::ConfigError("mask-mode must be hard or soft, got \"" + s + "\"");
}

void run_grad(const VerifyArgs& a) {
  const odp::ModelParams params = odp::load_model(a.model_path);
  const odp::Dataset ds = odp::load_dataset(a.data_path);
  odp::TrainConfig cfg;
  if (!a.config_path.empty())
    cfg = odp::parse_train_config(odp::read_file(a.config_path));

  nlohmann::json cj;
  cj["model"] = a.model_path;
  cj["data"] = a.data_path;
  cj["batch"] = a.batch;
  cj["eps"] = a.eps;
  const double max_rel = odp::model_grad_check(params, ds, cfg, a.batch, a.eps);

  std::ostringstream json;
  json.precision(17);
  json << "{\"max_rel_error\":" << max_rel << ",\"batch\":" << a.batch
       << ",\"eps\":" << a.eps << "}\n";
  if (!a.out.empty()) {
    ManifestScope scope("verify grad", odp::sha256_hex(cj.dump()), cfg.seed,
                        a.out + ".manifest.json");
    odp::write_file_atomic(a.out + ".json", json.str());
    scope.finish();
  }
  std::cout << "max relative gradient error: " << max_rel << "\n";
}

void run_ortho(const VerifyArgs& a) {
  const odp::Dataset ds = odp::load_dataset(a.data_path);
  const odp::MaskMode mode = parse_mode(a.mask_mode);
  const std::size_t n = static_cast<std::size_t>(a.samples);

  nlohmann::json cj;
  cj["data"] = a.data_path;
  cj["samples"] = a.samples;
  cj["seed"] = a.seed;

  std::ostringstream json;
  json.precision(17);
  if (!a.before_path.empty() || !a.after_path.empty()) {
    if (a.before_path.empty() || a.after_path.empty())
      throw odp::ConfigError("verify ortho: pass both --before and --after");
    cj["before"] = a.before_path;
    cj["after"] = a.after_path;
    const double before = odp::ortho_projection(
        odp::load_model(a.before_path), ds, mode, n, a.seed);
    const double after = odp::ortho_projection(
        odp::load_model(a.after_path), ds, mode, n, a.seed);
    const double ratio = before > 0.0 ? after / before
                                      : (after > 0.0 ? 1.0 : 0.0);
    json << "{\"before\":" << before << ",\"after\":" << after
         << ",\"ratio\":" << ratio << "}\n";
    std::cout << "mean normalized projection: before=" << before
              << " after=" << after << " ratio=" << ratio << "\n";
  } else {
    if (a.model_path.empty())
      throw odp::ConfigError("verify ortho: pass --model or --before/--after");
    cj["model"] = a.model_path;
    const double proj = odp::ortho_projection(odp::load_model(a.model_path),
                                              ds, mode, n, a.seed);
    json << "{\"projection\":" << proj << "}\n";
    std::cout << "mean normalized projection: " << proj << "\n";
  }
  if (!a.out.empty()) {
    ManifestScope scope("verify ortho", odp::sha256_hex(cj.dump()), a.seed,
                        a.out + ".manifest.json");
    odp::write_file_atomic(a.out + ".json", json.str());
    scope.finish();
  }
}

}  // namespace

void register_verify(CLI::App& app) {
  CLI::App* verify = app.add_subcommand(
      "verify", "Gradient and orthogonality checks on a trained model");
  verify->require_subcommand(1);

  auto ga = std::make_shared<VerifyArgs>();
  CLI::App* grad = verify->add_subcommand(
      "grad", "Finite-difference check of the composite objective");
  grad->add_option("--model", ga->model_path, "ODPM model")->required();
  grad->add_option("--data", ga->data_path, "ODPD dataset")->required();
  grad->add_option("--config", ga->config_path, "TrainConfig JSON (loss shape)");
  grad->add_option("--batch", ga->batch, "Check batch size");
  grad->add_option("--eps", ga->eps, "Finite-difference step");
  grad->add_option("--out", ga->out, "Optional report base");
  grad->callback([ga] { run_grad(*ga); });

  auto oa = std::make_shared<VerifyArgs>();
  CLI::App* ortho = verify->add_subcommand(
      "ortho",
      "Mean normalized gradient-nuisance projection |J^T d|/(|J|_F |d|)");
  ortho->add_option("--model", oa->model_path, "Single checkpoint");
  ortho->add_option("--before", oa->before_path, "Checkpoint before training");
  ortho->add_option("--after", oa->after_path, "Checkpoint after training");
  ortho->add_option("--data", oa->data_path, "ODPD dataset")->required();
  ortho->add_option("--samples", oa->samples, "Samples to project");
  ortho->add_option("--seed", oa->seed, "Donor derangement seed");
  ortho->add_option("--mask-mode", oa->mask_mode, "hard | soft");
  ortho->add_option("--out", oa->out, "Optional report base");
  ortho->callback([oa] { run_ortho(*oa); });
}

}  // namespace odptool
