#include "odp/spectra.hpp"

#include <cmath>
#include <complex>
#include <thread>

#include "odp/error.hpp"
#include "odp/fft.hpp"
#include "odp/metrics.hpp"

namespace odp {

namespace {

void check_image(const ImageGrid& image) {
  if (image.width <= 0 || image.height <= 0)
    throw ConfigError("image: non-positive dimensions");
  if (image.values.size() !=
      static_cast<std::size_t>(image.width) * image.height)
    throw ConfigError("image: values length does not match dimensions");
  for (double v : image.values) {
    if (!std::isfinite(v))
      throw DataError("image: non-finite intensity value");
  }
}

// Magnitude spectrum |F| of the unnormalized forward DFT, not yet centered.
std::vector<double> magnitude_spectrum(const ImageGrid& image) {
  const int w = image.width, h = image.height;
  std::vector<std::complex<double>> buf(image.values.size());
  for (std::size_t i = 0; i < image.values.size(); ++i)
    buf[i] = {image.values[i], 0.0};
  fft_2d(buf, w, h, false);
  std::vector<double> mag(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) mag[i] = std::abs(buf[i]);
  return mag;
}

// Swap quadrants so the DC bin lands at (h/2, w/2).
void center_into(const std::vector<double>& raw, SpectrumMap& out) {
  const int w = out.width, h = out.height;
  for (int r = 0; r < h; ++r) {
    const int rr = (r + h / 2) % h;
    for (int c = 0; c < w; ++c) {
      const int cc = (c + w / 2) % w;
      out.at(rr, cc) = raw[static_cast<std::size_t>(r) * w + c];
    }
  }
}

}  // namespace

SpectrumMap log_magnitude_spectrum(const ImageGrid& image) {
  check_image(image);
  std::vector<double> mag = magnitude_spectrum(image);
  for (double& v : mag) v = std::log1p(v);
  SpectrumMap out(image.width, image.height);
  center_into(mag, out);
  return out;
}

SpectrumMap average_spectrum(const std::vector<ImageGrid>& images,
                             AvgMode mode, int n_threads) {
  if (images.empty()) throw ConfigError("average_spectrum: empty image list");
  const int w = images.front().width, h = images.front().height;
  for (const ImageGrid& img : images) {
    if (img.width != w || img.height != h)
      throw ConfigError("average_spectrum: mismatched image dimensions");
  }

  // Per-image spectra, indexed by position so worker count cannot reorder.
  std::vector<std::vector<double>> per_image(images.size());
  auto compute_range = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      check_image(images[i]);
      std::vector<double> mag = magnitude_spectrum(images[i]);
      if (mode == AvgMode::MeanLog)
        for (double& v : mag) v = std::log1p(v);
      per_image[i] = std::move(mag);
    }
  };
  const int workers =
      std::max(1, std::min<int>(n_threads, static_cast<int>(images.size())));
  if (workers == 1) {
    compute_range(0, images.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (images.size() + workers - 1) / workers;
    for (int t = 0; t < workers; ++t) {
      const std::size_t lo = static_cast<std::size_t>(t) * chunk;
      const std::size_t hi = std::min(images.size(), lo + chunk);
      if (lo < hi) pool.emplace_back(compute_range, lo, hi);
    }
    for (std::thread& th : pool) th.join();
  }

  // Fixed-order sequential reduction.
  std::vector<double> acc(per_image.front().size(), 0.0);
  for (const std::vector<double>& s : per_image)
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += s[i];
  const double inv_n = 1.0 / static_cast<double>(images.size());
  for (double& v : acc) v *= inv_n;
  if (mode == AvgMode::LogMean)
    for (double& v : acc) v = std::log1p(v);

  SpectrumMap out(w, h);
  center_into(acc, out);
  return out;
}

ArtifactMap artifact_map(const SpectrumMap& s_a, const SpectrumMap& s_b) {
  if (s_a.width != s_b.width || s_a.height != s_b.height)
    throw ConfigError("artifact_map: dimension mismatch");
  ArtifactMap out(s_a.width, s_a.height);
  for (std::size_t i = 0; i < s_a.values.size(); ++i)
    out.values[i] = std::abs(s_a.values[i] - s_b.values[i]);
  return out;
}

AdditivityReport additivity_report(const SpectrumMap& s_real,
                                   const SpectrumMap& s_gen_a,
                                   const SpectrumMap& s_gen_b,
                                   const std::string& pair_name) {
  if (s_real.width != s_gen_a.width || s_real.height != s_gen_a.height ||
      s_real.width != s_gen_b.width || s_real.height != s_gen_b.height)
    throw ConfigError("additivity_report: dimension mismatch");

  const ArtifactMap d_a_real = artifact_map(s_gen_a, s_real);
  const ArtifactMap d_b_real = artifact_map(s_gen_b, s_real);
  const ArtifactMap d_a_b = artifact_map(s_gen_a, s_gen_b);

  std::vector<double> p_sum(d_a_real.values.size());
  for (std::size_t i = 0; i < p_sum.size(); ++i)
    p_sum[i] = d_a_real.values[i] + d_b_real.values[i];

  AdditivityReport rep;
  rep.pair_name = pair_name;
  rep.n_bins = p_sum.size();
  rep.pcc = pearson(p_sum, d_a_b.values);
  rep.cosine_similarity = cosine_similarity(p_sum, d_a_b.values);
  return rep;
}

ImageGrid preprocess(const ImageGrid& image, int side) {
  if (side <= 0) throw ConfigError("preprocess: side must be positive");
  const int crop = std::min(image.width, image.height);
  const int off_x = (image.width - crop) / 2;
  const int off_y = (image.height - crop) / 2;
  ImageGrid out(side, side);
  for (int r = 0; r < side; ++r) {
    // Nearest-neighbor: map output pixel centers onto the crop.
    const int src_r = off_y + static_cast<int>((static_cast<long long>(r) * crop) / side);
    for (int c = 0; c < side; ++c) {
      const int src_c = off_x + static_cast<int>((static_cast<long long>(c) * crop) / side);
      out.at(r, c) = image.at(src_r, src_c);
    }
  }
  return out;
}

}  // namespace odp
