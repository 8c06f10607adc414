#include "odp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "odp/error.hpp"

namespace odp {

BalancedAccuracy balanced_accuracy(std::span<const int> preds,
                                   std::span<const int> truths) {
  if (preds.size() != truths.size())
    throw ConfigError("balanced_accuracy: length mismatch");
  if (truths.empty()) throw ConfigError("balanced_accuracy: empty input");
  long tp = 0, fn = 0, tn = 0, fp = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (truths[i] == 1) {
      (preds[i] == 1 ? tp : fn) += 1;
    } else {
      (preds[i] == 0 ? tn : fp) += 1;
    }
  }
  const long pos = tp + fn;
  const long neg = tn + fp;
  BalancedAccuracy out;
  if (pos == 0 || neg == 0) {
    out.degenerate = true;
    out.value = pos == 0 ? static_cast<double>(tn) / neg
                         : static_cast<double>(tp) / pos;
    return out;
  }
  out.value = 0.5 * (static_cast<double>(tp) / pos +
                     static_cast<double>(tn) / neg);
  return out;
}

double nll(std::span<const double> p_fake, std::span<const int> truths) {
  if (p_fake.size() != truths.size()) throw ConfigError("nll: length mismatch");
  if (truths.empty()) throw ConfigError("nll: empty input");
  constexpr double eps = 1e-7;
  double sum = 0.0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    const double p = std::clamp(p_fake[i], eps, 1.0 - eps);
    sum += truths[i] == 1 ? -std::log(p) : -std::log(1.0 - p);
  }
  return sum / static_cast<double>(truths.size());
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ConfigError("pearson: length mismatch");
  if (x.size() < 2) throw ConfigError("pearson: need at least 2 samples");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw DegenerateError("pearson: constant input vector");
  return sxy / std::sqrt(sxx * syy);
}

double cosine_similarity(std::span<const double> x,
                         std::span<const double> y) {
  if (x.size() != y.size())
    throw ConfigError("cosine_similarity: length mismatch");
  double xx = 0.0, yy = 0.0, xy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx += x[i] * x[i];
    yy += y[i] * y[i];
    xy += x[i] * y[i];
  }
  if (xx == 0.0 || yy == 0.0)
    throw DegenerateError("cosine_similarity: zero vector");
  return xy / std::sqrt(xx * yy);
}

namespace {

double euclid(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

// Map arbitrary labels to 0..K-1 in order of first appearance.
std::vector<int> encode_labels(std::span<const int> labels, int& n_clusters) {
  std::map<int, int> to_idx;
  std::vector<int> enc(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto it = to_idx.find(labels[i]);
    if (it == to_idx.end()) {
      const int k = static_cast<int>(to_idx.size());
      to_idx.emplace(labels[i], k);
      enc[i] = k;
    } else {
      enc[i] = it->second;
    }
  }
  n_clusters = static_cast<int>(to_idx.size());
  return enc;
}

}  // namespace

double silhouette(const std::vector<std::vector<double>>& features,
                  std::span<const int> labels) {
  const std::size_t n = features.size();
  if (n != labels.size()) throw ConfigError("silhouette: length mismatch");
  if (n == 0) throw ConfigError("silhouette: empty input");
  int k = 0;
  const std::vector<int> enc = encode_labels(labels, k);
  if (k < 2) throw DegenerateError("silhouette: fewer than two labels");

  std::vector<std::size_t> cluster_size(static_cast<std::size_t>(k), 0);
  for (int c : enc) cluster_size[static_cast<std::size_t>(c)]++;

  double total = 0.0;
  std::vector<double> dist_sum(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i) {
    const int ci = enc[i];
    if (cluster_size[static_cast<std::size_t>(ci)] == 1) {
      continue;  // singleton scores 0
    }
    std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      dist_sum[static_cast<std::size_t>(enc[j])] += euclid(features[i], features[j]);
    }
    const double a = dist_sum[static_cast<std::size_t>(ci)] /
                     static_cast<double>(cluster_size[static_cast<std::size_t>(ci)] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      if (c == ci || cluster_size[static_cast<std::size_t>(c)] == 0) continue;
      b = std::min(b, dist_sum[static_cast<std::size_t>(c)] /
                          static_cast<double>(cluster_size[static_cast<std::size_t>(c)]));
    }
    const double m = std::max(a, b);
    total += m > 0.0 ? (b - a) / m : 0.0;
  }
  return total / static_cast<double>(n);
}

double knn_accuracy(const std::vector<std::vector<double>>& features,
                    std::span<const int> labels, int k) {
  const std::size_t n = features.size();
  if (n != labels.size()) throw ConfigError("knn_accuracy: length mismatch");
  if (k <= 0) throw ConfigError("knn_accuracy: k must be positive");
  if (n <= static_cast<std::size_t>(k))
    throw ConfigError("knn_accuracy: need more samples than neighbors");

  std::size_t correct = 0;
  std::vector<std::pair<double, std::size_t>> cand(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t m = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;  // leave-one-out: never its own neighbor
      double s = 0.0;
      for (std::size_t d = 0; d < features[i].size(); ++d) {
        const double diff = features[i][d] - features[j][d];
        s += diff * diff;
      }
      cand[m++] = {s, j};
    }
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end(),
                      [](const auto& a, const auto& b) {
                        if (a.first != b.first) return a.first < b.first;
                        return a.second < b.second;
                      });
    std::map<int, int> votes;
    for (int t = 0; t < k; ++t) votes[labels[cand[static_cast<std::size_t>(t)].second]]++;
    int best_label = 0, best_votes = -1;
    for (const auto& [lab, cnt] : votes) {
      if (cnt > best_votes) {  // map iterates in label order: smaller id wins ties
        best_votes = cnt;
        best_label = lab;
      }
    }
    if (best_label == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

double mask_iou(std::span<const std::uint32_t> learned_channels,
                std::span<const std::uint32_t> truth_channels) {
  std::vector<std::uint32_t> a(learned_channels.begin(), learned_channels.end());
  std::vector<std::uint32_t> b(truth_channels.begin(), truth_channels.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  if (a.empty() && b.empty()) return 1.0;
  std::vector<std::uint32_t> inter;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(inter));
  const std::size_t uni = a.size() + b.size() - inter.size();
  return static_cast<double>(inter.size()) / static_cast<double>(uni);
}

namespace {
std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}
}  // namespace

std::string metrics_report_json(const MetricsReport& r) {
  std::ostringstream os;
  os << "{\"bacc\":" << fmt_double(r.bacc) << ",\"nll\":" << fmt_double(r.nll)
     << ",\"silhouette_auth\":" << fmt_double(r.silhouette_auth)
     << ",\"silhouette_gen\":" << fmt_double(r.silhouette_gen)
     << ",\"knn_auth\":" << fmt_double(r.knn_auth)
     << ",\"knn_gen\":" << fmt_double(r.knn_gen);
  if (r.mask_iou_u) os << ",\"mask_iou_u\":" << fmt_double(*r.mask_iou_u);
  if (r.mask_iou_s) os << ",\"mask_iou_s\":" << fmt_double(*r.mask_iou_s);
  os << ",\"n_samples\":" << r.n_samples << "}";
  return os.str();
}

std::string metrics_report_csv(const MetricsReport& r) {
  std::ostringstream os;
  os << "bacc,nll,silhouette_auth,silhouette_gen,knn_auth,knn_gen,"
        "mask_iou_u,mask_iou_s,n_samples\n";
  os << fmt_double(r.bacc) << ',' << fmt_double(r.nll) << ','
     << fmt_double(r.silhouette_auth) << ',' << fmt_double(r.silhouette_gen)
     << ',' << fmt_double(r.knn_auth) << ',' << fmt_double(r.knn_gen) << ',';
  if (r.mask_iou_u) os << fmt_double(*r.mask_iou_u);
  os << ',';
  if (r.mask_iou_s) os << fmt_double(*r.mask_iou_s);
  os << ',' << r.n_samples << '\n';
  return os.str();
}

}  // namespace odp
