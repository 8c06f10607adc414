#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>

#include <CLI11.hpp>
#include <json.hpp>

#include "common.hpp"
#include "odp/error.hpp"
#include "odp/io.hpp"
#include "odp/rng.hpp"
#include "odp/synth.hpp"

namespace fs = std::filesystem;

namespace odptool {

namespace {

struct ImagesArgs {
  std::string out_dir;
  std::string prefix = "img";
  std::string artifact = "none";  // none | stripe | spot
  std::string spots;              // "u,v;u,v;..."
  int count = 16;
  int side = 256;
  double alpha = 2.0;
  double amplitude = 0.1;
  int period = 8;
  double noise_sigma = 0.0;
  std::uint64_t seed = 42;
};

std::vector<std::pair<int, int>> parse_spots(const std::string& text) {
  std::vector<std::pair<int, int>> spots;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t semi = text.find(';', pos);
    const std::string tok = text.substr(pos, semi == std::string::npos
                                                 ? std::string::npos
                                                 : semi - pos);
    const std::size_t comma = tok.find(',');
    if (comma == std::string::npos)
      throw odp::ConfigError("spots: expected \"u,v;u,v;...\", got \"" + tok + "\"");
    try {
      spots.emplace_back(std::stoi(tok.substr(0, comma)),
                         std::stoi(tok.substr(comma + 1)));
    } catch (const std::exception&) {
      throw odp::ConfigError("spots: bad integer in \"" + tok + "\"");
    }
    if (semi == std::string::npos) break;
    pos = semi + 1;
  }
  if (spots.empty()) throw odp::ConfigError("spots: empty list");
  return spots;
}

void run_images(const ImagesArgs& a) {
  if (a.count < 1) throw odp::ConfigError("images: count must be >= 1");
  fs::create_directories(a.out_dir);

  odp::ArtifactSpec spec;
  bool with_artifact = false;
  if (a.artifact == "stripe") {
    with_artifact = true;
    spec.kind = odp::ArtifactSpec::Kind::Stripe;
    spec.stripe_period = a.period;
    spec.amplitude = a.amplitude;
  } else if (a.artifact == "spot") {
    with_artifact = true;
    spec.kind = odp::ArtifactSpec::Kind::Spot;
    spec.spots = parse_spots(a.spots);
    spec.amplitude = a.amplitude;
  } else if (a.artifact != "none") {
    throw odp::ConfigError("images: artifact must be none|stripe|spot, got \"" +
                           a.artifact + "\"");
  }

  nlohmann::json j;
  j["count"] = a.count;
  j["side"] = a.side;
  j["alpha"] = a.alpha;
  j["artifact"] = a.artifact;
  j["spots"] = a.spots;
  j["period"] = a.period;
  j["amplitude"] = a.amplitude;
  j["noise_sigma"] = a.noise_sigma;
  j["seed"] = a.seed;
  j["prefix"] = a.prefix;
  ManifestScope scope("synth images", odp::sha256_hex(j.dump()), a.seed,
                      (fs::path(a.out_dir) / "manifest.json").string());

  for (int i = 0; i < a.count; ++i) {
    const std::uint64_t img_seed =
        odp::substream(a.seed, "image-seed", static_cast<std::uint64_t>(i))
            .next_u64();
    odp::ImageGrid img = odp::gen_real_image(a.side, a.alpha, img_seed);
    if (with_artifact) img = odp::apply_artifact(img, spec, img_seed);
    if (a.noise_sigma > 0.0)
      img = odp::add_pixel_noise(img, a.noise_sigma, img_seed);
    char name[64];
    std::snprintf(name, sizeof(name), "%s_%04d.pgm", a.prefix.c_str(), i);
    odp::write_pgm((fs::path(a.out_dir) / name).string(), img);
  }
  scope.finish();
  std::cout << "wrote " << a.count << " images to " << a.out_dir << "\n";
}

struct FeaturesArgs {
  std::string config_path;
  std::string out;
  std::string sidecar;
  std::string split_override;
  std::int64_t n_override = -1;
  std::int64_t seed_override = -1;
};

odp::FeatureDatasetConfig parse_feature_config(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw odp::ConfigError(std::string("features config: invalid JSON: ") +
                           e.what());
  }
  if (!j.is_object())
    throw odp::ConfigError("features config: expected a JSON object");
  odp::FeatureDatasetConfig c;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "dim") c.dim = value.get<int>();
      else if (key == "n_universal") c.n_universal = value.get<int>();
      else if (key == "n_specific") c.n_specific = value.get<int>();
      else if (key == "n_generators") c.n_generators = value.get<int>();
      else if (key == "n_semantic") c.n_semantic = value.get<int>();
      else if (key == "n_samples") c.n_samples = value.get<int>();
      else if (key == "noise_sigma") c.noise_sigma = value.get<double>();
      else if (key == "leakage_eps") c.leakage_eps = value.get<double>();
      else if (key == "universal_scale") c.universal_scale = value.get<double>();
      else if (key == "fingerprint_scale") c.fingerprint_scale = value.get<double>();
      else if (key == "semantic_scale") c.semantic_scale = value.get<double>();
      else if (key == "shortcut_bias") c.shortcut_bias = value.get<bool>();
      else if (key == "unseen_generator") c.unseen_generator = value.get<bool>();
      else if (key == "unseen_real_camera") c.unseen_real_camera = value.get<bool>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "split") {
        const std::string s = value.get<std::string>();
        if (s == "train") c.split = odp::DatasetSplit::Train;
        else if (s == "test") c.split = odp::DatasetSplit::Test;
        else throw odp::ConfigError("features config: split must be train|test, got \"" + s + "\"");
      } else {
        throw odp::ConfigError("features config: unknown key \"" + key + "\"");
      }
    } catch (const nlohmann::json::exception& e) {
      throw odp::ConfigError("features config: bad value for \"" + key +
                             "\": " + e.what());
    }
  }
  return c;
}

std::string feature_config_json(const odp::FeatureDatasetConfig& c) {
  nlohmann::json j;
  j["dim"] = c.dim;
  j["n_universal"] = c.n_universal;
  j["n_specific"] = c.n_specific;
  j["n_generators"] = c.n_generators;
  j["n_semantic"] = c.n_semantic;
  j["n_samples"] = c.n_samples;
  j["noise_sigma"] = c.noise_sigma;
  j["leakage_eps"] = c.leakage_eps;
  j["universal_scale"] = c.universal_scale;
  j["fingerprint_scale"] = c.fingerprint_scale;
  j["semantic_scale"] = c.semantic_scale;
  j["shortcut_bias"] = c.shortcut_bias;
  j["unseen_generator"] = c.unseen_generator;
  j["unseen_real_camera"] = c.unseen_real_camera;
  j["split"] = c.split == odp::DatasetSplit::Train ? "train" : "test";
  j["seed"] = c.seed;
  return j.dump();
}

std::string sidecar_path(const FeaturesArgs& a) {
  if (!a.sidecar.empty()) return a.sidecar;
  fs::path p(a.out);
  p.replace_extension();
  return p.string() + ".subspaces.json";
}

void run_features(const FeaturesArgs& a) {
  odp::FeatureDatasetConfig cfg =
      parse_feature_config(odp::read_file(a.config_path));
  if (a.n_override >= 0) cfg.n_samples = static_cast<int>(a.n_override);
  if (a.seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed_override);
  if (!a.split_override.empty()) {
    if (a.split_override == "train") cfg.split = odp::DatasetSplit::Train;
    else if (a.split_override == "test") cfg.split = odp::DatasetSplit::Test;
    else throw odp::ConfigError("features: --split must be train or test");
  }

  ManifestScope scope("synth features",
                      odp::sha256_hex(feature_config_json(cfg)), cfg.seed,
                      a.out + ".manifest.json");
  auto [dataset, subspaces] = odp::gen_feature_dataset(cfg);
  odp::save_dataset(a.out, dataset);
  odp::save_subspaces(sidecar_path(a), subspaces);
  scope.finish();
  std::cout << "wrote " << a.out << " (" << dataset.size() << " samples, dim "
            << dataset.dim << ") and " << sidecar_path(a) << "\n";
}

}  // namespace

void register_synth(CLI::App& app) {
  CLI::App* synth = app.add_subcommand(
      "synth", "Synthetic image corpora and entangled feature datasets");
  synth->require_subcommand(1);

  auto img = std::make_shared<ImagesArgs>();
  CLI::App* images = synth->add_subcommand(
      "images", "Power-law images, optionally with stripe/spot artifacts");
  images->add_option("--out", img->out_dir, "Output directory")->required();
  images->add_option("--count", img->count, "Number of images");
  images->add_option("--side", img->side, "Image side in pixels");
  images->add_option("--alpha", img->alpha, "Spectral slope of the 1/f^alpha base");
  images->add_option("--artifact", img->artifact, "none | stripe | spot");
  images->add_option("--period", img->period, "Stripe period in pixels");
  images->add_option("--spots", img->spots, "Spot bins as \"u,v;u,v;...\"");
  images->add_option("--amplitude", img->amplitude, "Artifact amplitude");
  images->add_option("--noise-sigma", img->noise_sigma, "Additive pixel noise");
  images->add_option("--seed", img->seed, "Root seed");
  images->add_option("--prefix", img->prefix, "Filename prefix");
  images->callback([img] { run_images(*img); });

  auto feat = std::make_shared<FeaturesArgs>();
  CLI::App* features = synth->add_subcommand(
      "features", "Entangled feature dataset with ground-truth subspaces");
  features->add_option("--config", feat->config_path, "JSON config")->required();
  features->add_option("--out", feat->out, "Output ODPD path")->required();
  features->add_option("--sidecar", feat->sidecar,
                       "Subspace JSON path (default <out>.subspaces.json)");
  features->add_option("--split", feat->split_override,
                       "Override config split (train|test)");
  features->add_option("--n-samples", feat->n_override, "Override sample count");
  features->add_option("--seed", feat->seed_override, "Override seed");
  features->callback([feat] { run_features(*feat); });
}

}  // namespace odptool
