#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace odp {

/// Balanced accuracy over binary labels {0, 1}: mean of per-class recalls.
/// `degenerate` is set when only one class is present in `truths`, in which
/// case the value is the recall of that class.
struct BalancedAccuracy {
  double value = 0.0;
  bool degenerate = false;
};

BalancedAccuracy balanced_accuracy(std::span<const int> preds,
                                   std::span<const int> truths);

/// Mean negative log-likelihood of p(fake). Probabilities are clamped to
/// [1e-7, 1 - 1e-7] before the log.
double nll(std::span<const double> p_fake, std::span<const int> truths);

/// Sample Pearson correlation. Throws DegenerateError if either input is
/// constant.
double pearson(std::span<const double> x, std::span<const double> y);

/// <x,y> / (|x| |y|). Throws DegenerateError on a zero vector.
double cosine_similarity(std::span<const double> x, std::span<const double> y);

/// Mean silhouette coefficient with Euclidean distances. Samples in
/// singleton clusters score 0. Throws DegenerateError when fewer than two
/// distinct labels are present.
double silhouette(const std::vector<std::vector<double>>& features,
                  std::span<const int> labels);

/// Leave-one-out k-nearest-neighbor accuracy. Distance ties break toward
/// the lower sample index, vote ties toward the smaller label id.
double knn_accuracy(const std::vector<std::vector<double>>& features,
                    std::span<const int> labels, int k);

/// |A intersect B| / |A union B| over channel index sets; 1.0 when both are
/// empty.
double mask_iou(std::span<const std::uint32_t> learned_channels,
                std::span<const std::uint32_t> truth_channels);

/// Evaluation statistics for one run. Clustering fields describe the
/// universal component z_u; mask IoU fields are present only when a
/// ground-truth subspace sidecar was available.
struct MetricsReport {
  double bacc = 0.0;
  double nll = 0.0;
  double silhouette_auth = 0.0;
  double silhouette_gen = 0.0;
  double knn_auth = 0.0;
  double knn_gen = 0.0;
  std::optional<double> mask_iou_u;
  std::optional<double> mask_iou_s;
  std::size_t n_samples = 0;
};

std::string metrics_report_json(const MetricsReport& r);
std::string metrics_report_csv(const MetricsReport& r);

}  // namespace odp
