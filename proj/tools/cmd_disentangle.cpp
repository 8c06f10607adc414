#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "common.hpp"
#include "odp/error.hpp"
#include "odp/io.hpp"
#include "odp/metrics.hpp"
#include "odp/trainer.hpp"

namespace fs = std::filesystem;

namespace odptool {

namespace {

struct DisentangleArgs {
  std::string model_path, data_path, sidecar, out;
  std::string mask_mode = "hard";
  int knn_k = 5;
};

struct FeatureRow {
  std::string name;
  double sil_auth, knn_auth, sil_gen, knn_gen;
};

odp::MaskMode parse_mode(const std::string& s) {
  if (s == "hard") return odp::MaskMode::Hard;
  if (s == "soft") return odp::MaskMode::Soft;
  throw odp::ConfigError("mask-mode must be hard or soft, got \"" + s + "\"");
}

void run_disentangle(const DisentangleArgs& a) {
  const odp::ModelParams params = odp::load_model(a.model_path);
  const odp::Dataset ds = odp::load_dataset(a.data_path);
  if (ds.dim != params.cfg.dim)
    throw odp::ConfigError("disentangle: dataset dim " +
                           std::to_string(ds.dim) + " does not match model dim " +
                           std::to_string(params.cfg.dim));
  const odp::MaskMode mode = parse_mode(a.mask_mode);

  nlohmann::json cj;
  cj["model"] = a.model_path;
  cj["data"] = a.data_path;
  cj["mask_mode"] = a.mask_mode;
  cj["knn_k"] = a.knn_k;
  ManifestScope scope("disentangle", odp::sha256_hex(cj.dump()), 0,
                      a.out + ".manifest.json");

  const std::size_t n = ds.size();
  const int dim = ds.dim;
  std::vector<std::vector<double>> z(n), z_u(n), z_s(n), z_n(n);
  std::vector<int> auth_labels(n), gen_labels(n);
  std::vector<long> mu_votes(static_cast<std::size_t>(dim), 0);
  std::vector<long> ms_votes(static_cast<std::size_t>(dim), 0);

  std::vector<double> zbuf(static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < n; ++i) {
    const float* row = ds.row(i);
    for (int d = 0; d < dim; ++d) zbuf[static_cast<std::size_t>(d)] = row[d];
    odp::Decomposition dec = odp::decompose_sample(params, zbuf, mode);
    z[i] = zbuf;
    z_u[i] = std::move(dec.z_u);
    z_s[i] = std::move(dec.z_s);
    z_n[i] = std::move(dec.z_n);
    auth_labels[i] = ds.y[i];
    gen_labels[i] = ds.g[i];
    for (int d = 0; d < dim; ++d) {
      if (dec.m_u[static_cast<std::size_t>(d)] > 0.5) ++mu_votes[static_cast<std::size_t>(d)];
      if (dec.m_u[static_cast<std::size_t>(d)] <= 0.5 &&
          dec.m_s[static_cast<std::size_t>(d)] > 0.5)
        ++ms_votes[static_cast<std::size_t>(d)];
    }
  }

  // Generator clustering is scored on fake samples only.
  std::vector<std::size_t> fake_idx;
  for (std::size_t i = 0; i < n; ++i)
    if (ds.y[i] == 1) fake_idx.push_back(i);

  auto score = [&](const std::vector<std::vector<double>>& feats,
                   const std::string& name) {
    FeatureRow row;
    row.name = name;
    row.sil_auth = odp::silhouette(feats, auth_labels);
    row.knn_auth = odp::knn_accuracy(feats, auth_labels, a.knn_k);
    std::vector<std::vector<double>> fake_feats;
    std::vector<int> fake_gens;
    for (std::size_t i : fake_idx) {
      fake_feats.push_back(feats[i]);
      fake_gens.push_back(gen_labels[i]);
    }
    row.sil_gen = odp::silhouette(fake_feats, fake_gens);
    row.knn_gen = odp::knn_accuracy(fake_feats, fake_gens, a.knn_k);
    return row;
  };

  const std::vector<FeatureRow> rows = {
      score(z, "Entangled"), score(z_u, "Universal"), score(z_s, "Specific"),
      score(z_n, "Residual")};

  std::ostringstream csv;
  csv.precision(17);
  csv << "feature,silhouette_auth,knn_auth,silhouette_gen,knn_gen\n";
  for (const FeatureRow& r : rows)
    csv << r.name << ',' << r.sil_auth << ',' << r.knn_auth << ','
        << r.sil_gen << ',' << r.knn_gen << "\n";
  odp::write_file_atomic(a.out + ".table.csv", csv.str());

  // Full metrics report: classification through z_u plus its clustering
  // quality, and mask-recovery IoU when ground truth is available.
  const odp::EvalResult ev = odp::evaluate(params, ds, mode);
  odp::MetricsReport report;
  report.bacc = ev.bacc;
  report.nll = ev.nll;
  report.silhouette_auth = rows[1].sil_auth;
  report.silhouette_gen = rows[1].sil_gen;
  report.knn_auth = rows[1].knn_auth;
  report.knn_gen = rows[1].knn_gen;
  report.n_samples = n;

  std::string sidecar = a.sidecar;
  if (sidecar.empty()) {
    fs::path p(a.data_path);
    p.replace_extension();
    const std::string candidate = p.string() + ".subspaces.json";
    if (fs::exists(candidate)) sidecar = candidate;
  }
  if (!sidecar.empty()) {
    const odp::GroundTruthSubspaces gt = odp::load_subspaces(sidecar);
    std::vector<std::uint32_t> learned_u, learned_s;
    for (int d = 0; d < dim; ++d) {
      if (2 * mu_votes[static_cast<std::size_t>(d)] > static_cast<long>(n))
        learned_u.push_back(static_cast<std::uint32_t>(d));
      if (2 * ms_votes[static_cast<std::size_t>(d)] > static_cast<long>(n))
        learned_s.push_back(static_cast<std::uint32_t>(d));
    }
    report.mask_iou_u = odp::mask_iou(learned_u, gt.u);
    report.mask_iou_s = odp::mask_iou(learned_s, gt.s);
  }

  odp::write_file_atomic(a.out + ".metrics.json",
                         odp::metrics_report_json(report) + "\n");
  odp::write_file_atomic(a.out + ".metrics.csv", odp::metrics_report_csv(report));
  scope.finish();

  std::cout << "feature       sil_auth  knn_auth  sil_gen   knn_gen\n";
  for (const FeatureRow& r : rows) {
    std::printf("%-12s  %8.4f  %8.4f  %8.4f  %8.4f\n", r.name.c_str(),
                r.sil_auth, r.knn_auth, r.sil_gen, r.knn_gen);
  }
  if (report.mask_iou_u)
    std::cout << "mask IoU: U=" << *report.mask_iou_u
              << " S=" << *report.mask_iou_s << "\n";
}

}  // namespace

void register_disentangle(CLI::App& app) {
  auto args = std::make_shared<DisentangleArgs>();
  CLI::App* dis = app.add_subcommand(
      "disentangle",
      "Silhouette/kNN table over z, z_u, z_s, z_n plus mask-recovery IoU");
  dis->add_option("--model", args->model_path, "ODPM model")->required();
  dis->add_option("--data", args->data_path, "ODPD dataset")->required();
  dis->add_option("--sidecar", args->sidecar,
                  "Ground-truth subspace JSON (default: sibling of --data)");
  dis->add_option("--out", args->out,
                  "Output base (.table.csv, .metrics.json, .metrics.csv)")
      ->required();
  dis->add_option("--mask-mode", args->mask_mode, "hard | soft");
  dis->add_option("--knn-k", args->knn_k, "Neighbors for kNN accuracy");
  dis->callback([args] { run_disentangle(*args); });
}

}  // namespace odptool
