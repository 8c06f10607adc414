#include <algorithm>
#include <filesystem>
#include <iostream>
#include <memory>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "common.hpp"
#include "odp/error.hpp"
#include "odp/io.hpp"
#include "odp/spectra.hpp"

namespace fs = std::filesystem;

namespace odptool {

namespace {

struct SpectraArgs {
  std::string input, a, b, out;
  std::string real_dir, gen_a_dir, gen_b_dir, root_dir;
  std::string pair_name;
  std::string avg_mode = "mean-log";
  int side = 256;
  int threads = 1;
  bool pgm = false;
};

odp::AvgMode parse_avg_mode(const std::string& s) {
  if (s == "mean-log") return odp::AvgMode::MeanLog;
  if (s == "log-mean") return odp::AvgMode::LogMean;
  throw odp::ConfigError("avg-mode must be mean-log or log-mean, got \"" + s + "\"");
}

std::vector<std::string> list_images(const std::string& dir) {
  if (!fs::is_directory(dir))
    throw odp::DataError(dir + ": not a readable directory");
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (ext == ".pgm" || ext == ".png") paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty())
    throw odp::DataError(dir + ": no .pgm or .png images found");
  return paths;
}

odp::SpectrumMap dir_spectrum(const std::string& dir, const SpectraArgs& args) {
  std::vector<odp::ImageGrid> images;
  for (const std::string& p : list_images(dir))
    images.push_back(odp::preprocess(odp::read_image(p), args.side));
  return odp::average_spectrum(images, parse_avg_mode(args.avg_mode),
                               args.threads);
}

odp::SpectrumMap input_spectrum(const std::string& input,
                                const SpectraArgs& args) {
  if (fs::is_directory(input)) return dir_spectrum(input, args);
  return odp::log_magnitude_spectrum(
      odp::preprocess(odp::read_image(input), args.side));
}

std::string args_hash(const SpectraArgs& a, const std::string& sub) {
  nlohmann::json j;
  j["subcommand"] = sub;
  j["input"] = a.input;
  j["a"] = a.a;
  j["b"] = a.b;
  j["real"] = a.real_dir;
  j["gen_a"] = a.gen_a_dir;
  j["gen_b"] = a.gen_b_dir;
  j["root"] = a.root_dir;
  j["pair_name"] = a.pair_name;
  j["avg_mode"] = a.avg_mode;
  j["side"] = a.side;
  j["out"] = a.out;
  return odp::sha256_hex(j.dump());
}

void run_compute(const SpectraArgs& args) {
  ManifestScope scope("spectra compute", args_hash(args, "compute"), 0,
                      args.out + ".manifest.json");
  const odp::SpectrumMap s = input_spectrum(args.input, args);
  odp::save_spectrum(args.out, s);
  odp::write_spectrum_pgm(args.out + ".pgm", s);
  scope.finish();
  std::cout << "wrote " << args.out << " (" << s.width << "x" << s.height
            << ") and " << args.out << ".pgm\n";
}

void run_diff(const SpectraArgs& args) {
  ManifestScope scope("spectra diff", args_hash(args, "diff"), 0,
                      args.out + ".manifest.json");
  const odp::SpectrumMap a = odp::load_spectrum(args.a);
  const odp::SpectrumMap b = odp::load_spectrum(args.b);
  const odp::ArtifactMap d = odp::artifact_map(a, b);
  odp::save_spectrum(args.out, d);
  if (args.pgm) odp::write_spectrum_pgm(args.out + ".pgm", d);
  scope.finish();
  std::cout << "wrote " << args.out << "\n";
}

void run_additivity(const SpectraArgs& args) {
  ManifestScope scope("spectra additivity", args_hash(args, "additivity"), 0,
                      args.out + ".manifest.json");
  std::vector<odp::AdditivityReport> reports;

  if (!args.root_dir.empty()) {
    // All-pairs mode: root must hold a real/ directory plus generator dirs.
    std::vector<std::string> gen_dirs;
    std::string real_dir;
    for (const auto& entry : fs::directory_iterator(args.root_dir)) {
      if (!entry.is_directory()) continue;
      const std::string name = entry.path().filename().string();
      if (name == "real") {
        real_dir = entry.path().string();
      } else {
        gen_dirs.push_back(entry.path().string());
      }
    }
    if (real_dir.empty())
      throw odp::DataError(args.root_dir + ": missing real/ subdirectory");
    if (gen_dirs.size() < 2)
      throw odp::DataError(args.root_dir +
                           ": need at least two generator subdirectories");
    std::sort(gen_dirs.begin(), gen_dirs.end());

    const odp::SpectrumMap s_real = dir_spectrum(real_dir, args);
    std::vector<odp::SpectrumMap> gen_spectra;
    for (const std::string& d : gen_dirs) gen_spectra.push_back(dir_spectrum(d, args));

    for (std::size_t i = 0; i < gen_dirs.size(); ++i) {
      for (std::size_t j = i + 1; j < gen_dirs.size(); ++j) {
        const std::string name = fs::path(gen_dirs[i]).filename().string() +
                                 "_vs_" +
                                 fs::path(gen_dirs[j]).filename().string();
        reports.push_back(odp::additivity_report(s_real, gen_spectra[i],
                                                 gen_spectra[j], name));
      }
    }
    odp::AdditivityReport avg;
    avg.pair_name = "average";
    avg.n_bins = reports.front().n_bins;
    for (const auto& r : reports) {
      avg.pcc += r.pcc;
      avg.cosine_similarity += r.cosine_similarity;
    }
    avg.pcc /= static_cast<double>(reports.size());
    avg.cosine_similarity /= static_cast<double>(reports.size());
    reports.push_back(avg);
  } else {
    const odp::SpectrumMap s_real = dir_spectrum(args.real_dir, args);
    const odp::SpectrumMap s_a = dir_spectrum(args.gen_a_dir, args);
    const odp::SpectrumMap s_b = dir_spectrum(args.gen_b_dir, args);
    const std::string name =
        args.pair_name.empty()
            ? fs::path(args.gen_a_dir).filename().string() + "_vs_" +
                  fs::path(args.gen_b_dir).filename().string()
            : args.pair_name;
    reports.push_back(odp::additivity_report(s_real, s_a, s_b, name));
  }

  odp::write_file_atomic(args.out + ".csv", odp::additivity_csv(reports));
  odp::write_file_atomic(args.out + ".json", odp::additivity_json(reports));
  scope.finish();
  for (const auto& r : reports) {
    std::cout << r.pair_name << ": pcc=" << r.pcc
              << " cs=" << r.cosine_similarity << " n_bins=" << r.n_bins
              << "\n";
  }
}

}  // namespace

void register_spectra(CLI::App& app) {
  auto args = std::make_shared<SpectraArgs>();
  CLI::App* spectra =
      app.add_subcommand("spectra", "Log-magnitude spectra, artifact "
                                    "difference maps, additivity reports");
  spectra->require_subcommand(1);

  CLI::App* compute = spectra->add_subcommand(
      "compute", "Average (or single-image) log-magnitude spectrum");
  compute->add_option("--input", args->input, "Image file or directory")
      ->required();
  compute->add_option("--out", args->out, "Output ODPS path")->required();
  compute->add_option("--side", args->side, "Preprocess side (center-crop + resize)");
  compute->add_option("--avg-mode", args->avg_mode, "mean-log | log-mean");
  compute->add_option("--threads", args->threads, "Worker threads");
  compute->callback([args] { run_compute(*args); });

  CLI::App* diff = spectra->add_subcommand(
      "diff", "Elementwise |a - b| of two ODPS spectra");
  diff->add_option("--a", args->a, "First ODPS file")->required();
  diff->add_option("--b", args->b, "Second ODPS file")->required();
  diff->add_option("--out", args->out, "Output ODPS path")->required();
  diff->add_flag("--pgm", args->pgm, "Also write a PGM render");
  diff->callback([args] { run_diff(*args); });

  CLI::App* add = spectra->add_subcommand(
      "additivity",
      "Additivity Criterion report for a (real, genA, genB) triple or all "
      "generator pairs under a root directory");
  add->add_option("--real", args->real_dir, "Directory of real images");
  add->add_option("--gen-a", args->gen_a_dir, "Directory of generator-A images");
  add->add_option("--gen-b", args->gen_b_dir, "Directory of generator-B images");
  add->add_option("--root", args->root_dir,
                  "Root with real/ plus generator subdirectories (all pairs)");
  add->add_option("--pair-name", args->pair_name, "Report row label");
  add->add_option("--out", args->out, "Output base (writes .csv and .json)")
      ->required();
  add->add_option("--side", args->side, "Preprocess side");
  add->add_option("--avg-mode", args->avg_mode, "mean-log | log-mean");
  add->add_option("--threads", args->threads, "Worker threads");
  add->callback([args] {
    if (args->root_dir.empty() &&
        (args->real_dir.empty() || args->gen_a_dir.empty() ||
         args->gen_b_dir.empty()))
      throw odp::ConfigError(
          "spectra additivity: pass --root, or all of --real/--gen-a/--gen-b");
    run_additivity(*args);
  });
}

}  // namespace odptool
