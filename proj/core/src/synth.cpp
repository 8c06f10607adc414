#include "odp/synth.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include "odp/error.hpp"
#include "odp/fft.hpp"
#include "odp/rng.hpp"

namespace odp {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

double clip01(double v) { return std::clamp(v, 0.0, 1.0); }
}  // namespace

ImageGrid gen_real_image(int side, double alpha, std::uint64_t seed) {
  if (side < 16) throw ConfigError("gen_real_image: side must be >= 16");
  if (alpha < 0.5 || alpha > 3.0)
    throw ConfigError("gen_real_image: alpha must be in [0.5, 3]");

  Rng rng = substream(seed, "power-law-image");
  const std::size_t n = static_cast<std::size_t>(side) * side;
  std::vector<std::complex<double>> buf(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = {rng.normal(), 0.0};
  fft_2d(buf, side, side, false);

  // Shape white noise: |H(u,v)| = r^(-alpha/2) gives expected power r^-alpha.
  // DC is zeroed; the mean is reintroduced by the [0,1] mapping below.
  for (int r = 0; r < side; ++r) {
    const int fr = std::min(r, side - r);
    for (int c = 0; c < side; ++c) {
      const int fc = std::min(c, side - c);
      const std::size_t i = static_cast<std::size_t>(r) * side + c;
      if (fr == 0 && fc == 0) {
        buf[i] = 0.0;
        continue;
      }
      const double radius = std::sqrt(static_cast<double>(fr) * fr +
                                      static_cast<double>(fc) * fc);
      buf[i] *= std::pow(radius, -alpha / 2.0);
    }
  }
  fft_2d(buf, side, side, true);

  double mean = 0.0;
  for (const auto& z : buf) mean += z.real();
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (const auto& z : buf) {
    const double d = z.real() - mean;
    var += d * d;
  }
  var /= static_cast<double>(n);
  const double sd = std::sqrt(var);

  ImageGrid out(side, side, 0.5);
  if (sd > 0.0) {
    // Center at 0.5 with +-3 sigma spanning [0,1]; the tails clip.
    const double scale = 1.0 / (6.0 * sd);
    for (std::size_t i = 0; i < n; ++i)
      out.values[i] = clip01(0.5 + (buf[i].real() - mean) * scale);
  }
  return out;
}

ImageGrid apply_artifact(const ImageGrid& image, const ArtifactSpec& spec,
                         std::uint64_t seed) {
  if (spec.amplitude < 0.0)
    throw ConfigError("apply_artifact: amplitude must be >= 0");
  ImageGrid out = image;
  const int w = image.width, h = image.height;

  if (spec.kind == ArtifactSpec::Kind::Stripe) {
    if (spec.stripe_period < 2)
      throw ConfigError("apply_artifact: stripe period must be >= 2 px");
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        const double wave =
            spec.amplitude * std::sin(kTwoPi * c / spec.stripe_period);
        out.at(r, c) = clip01(out.at(r, c) + wave);
      }
    }
    return out;
  }

  // Spot gratings at explicit frequency bins, random phase per spot.
  const int nyq_u = w / 2, nyq_v = h / 2;
  for (const auto& [u, v] : spec.spots) {
    if (std::abs(u) > nyq_u || std::abs(v) > nyq_v)
      throw ConfigError("apply_artifact: spot (" + std::to_string(u) + "," +
                        std::to_string(v) + ") outside Nyquist range");
  }
  Rng rng = substream(seed, "spot-phase");
  std::vector<double> phases(spec.spots.size());
  for (double& p : phases) p = kTwoPi * rng.uniform();
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double wave = 0.0;
      for (std::size_t s = 0; s < spec.spots.size(); ++s) {
        const auto& [u, v] = spec.spots[s];
        wave += spec.amplitude *
                std::cos(kTwoPi * (static_cast<double>(u) * c / w +
                                   static_cast<double>(v) * r / h) +
                         phases[s]);
      }
      out.at(r, c) = clip01(out.at(r, c) + wave);
    }
  }
  return out;
}

ImageGrid add_pixel_noise(const ImageGrid& image, double sigma,
                          std::uint64_t seed) {
  if (sigma < 0.0) throw ConfigError("add_pixel_noise: sigma must be >= 0");
  if (sigma == 0.0) return image;
  ImageGrid out = image;
  Rng rng = substream(seed, "pixel-noise");
  for (double& v : out.values) v = clip01(v + sigma * rng.normal());
  return out;
}

// ---------------------------------------------------------------------------

namespace {

void check_feature_config(const FeatureDatasetConfig& c) {
  if (c.dim <= 0) throw ConfigError("features: dim must be positive");
  if (c.n_universal < 1 || c.n_specific < 1)
    throw ConfigError("features: n_universal and n_specific must be >= 1");
  if (c.n_universal + c.n_specific >= c.dim)
    throw ConfigError("features: n_universal + n_specific must be < dim");
  if (c.n_generators < 2) throw ConfigError("features: n_generators must be >= 2");
  if (c.n_semantic < 2) throw ConfigError("features: n_semantic must be >= 2");
  if (c.n_samples < 1) throw ConfigError("features: n_samples must be >= 1");
  if (c.noise_sigma < 0.0) throw ConfigError("features: noise_sigma must be >= 0");
  if (c.leakage_eps < 0.0 || c.leakage_eps >= 0.5)
    throw ConfigError("features: leakage_eps must be in [0, 0.5)");
  for (double sc : {c.universal_scale, c.fingerprint_scale, c.semantic_scale})
    if (!(sc > 0.0))
      throw ConfigError("features: signature scales must be > 0");
}

std::vector<double> unit_vector(Rng& rng, int dim) {
  std::vector<double> v(static_cast<std::size_t>(dim));
  double norm_sq = 0.0;
  do {
    norm_sq = 0.0;
    for (double& x : v) {
      x = rng.normal();
      norm_sq += x * x;
    }
  } while (norm_sq == 0.0);
  const double inv = 1.0 / std::sqrt(norm_sq);
  for (double& x : v) x *= inv;
  return v;
}

// A signature lives on its home channels; a fixed fraction of its energy is
// bled into a frozen set of off-subspace channels.
struct Signature {
  std::vector<std::uint32_t> home;
  std::vector<double> pattern;       // unit norm over home
  std::vector<std::uint32_t> leak;   // off-subspace channels
  std::vector<double> leak_pattern;  // unit norm over leak
};

Signature make_signature(Rng& sig_rng, Rng& leak_rng,
                         const std::vector<std::uint32_t>& home, int dim,
                         double eps) {
  Signature s;
  s.home = home;
  s.pattern = unit_vector(sig_rng, static_cast<int>(home.size()));
  if (eps > 0.0) {
    std::vector<std::uint32_t> complement;
    std::vector<char> in_home(static_cast<std::size_t>(dim), 0);
    for (std::uint32_t ch : home) in_home[ch] = 1;
    for (int d = 0; d < dim; ++d)
      if (!in_home[static_cast<std::size_t>(d)])
        complement.push_back(static_cast<std::uint32_t>(d));
    std::size_t m = static_cast<std::size_t>(
        std::ceil(eps * static_cast<double>(dim)));
    m = std::min(m, complement.size());
    // Partial Fisher-Yates draw of m distinct off-subspace channels.
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = i + leak_rng.below(complement.size() - i);
      std::swap(complement[i], complement[j]);
    }
    s.leak.assign(complement.begin(), complement.begin() + static_cast<long>(m));
    s.leak_pattern = unit_vector(leak_rng, static_cast<int>(m));
  }
  return s;
}

void add_signature(std::vector<double>& z, const Signature& s, double eps,
                   double scale) {
  const double home_scale = scale * std::sqrt(1.0 - eps);
  for (std::size_t j = 0; j < s.home.size(); ++j)
    z[s.home[j]] += home_scale * s.pattern[j];
  if (!s.leak.empty()) {
    const double leak_scale = scale * std::sqrt(eps);
    for (std::size_t j = 0; j < s.leak.size(); ++j)
      z[s.leak[j]] += leak_scale * s.leak_pattern[j];
  }
}

}  // namespace

std::pair<Dataset, GroundTruthSubspaces> gen_feature_dataset(
    const FeatureDatasetConfig& config) {
  check_feature_config(config);
  const int dim = config.dim;
  const int k = config.n_generators;
  const int n_sem = config.n_semantic;

  // Subspace draw depends only on (seed, dim, |U|, |S|), never on the split
  // or sample count, so paired train/test datasets share it.
  GroundTruthSubspaces subspaces;
  {
    Rng rng = substream(config.seed, "subspaces");
    std::vector<std::uint32_t> channels(static_cast<std::size_t>(dim));
    std::iota(channels.begin(), channels.end(), 0u);
    for (std::size_t i = channels.size() - 1; i > 0; --i) {
      const std::size_t j = rng.below(i + 1);
      std::swap(channels[i], channels[j]);
    }
    subspaces.u.assign(channels.begin(), channels.begin() + config.n_universal);
    subspaces.s.assign(channels.begin() + config.n_universal,
                       channels.begin() + config.n_universal + config.n_specific);
    subspaces.n.assign(channels.begin() + config.n_universal + config.n_specific,
                       channels.end());
    std::sort(subspaces.u.begin(), subspaces.u.end());
    std::sort(subspaces.s.begin(), subspaces.s.end());
    std::sort(subspaces.n.begin(), subspaces.n.end());
  }

  // Frozen signatures: one shared authenticity pattern on U, per-generator
  // fingerprints on S (0 = real camera domain, K+1 = unseen generator),
  // per-semantic-class patterns on N.
  Rng sig_rng = substream(config.seed, "signatures");
  Rng leak_rng = substream(config.seed, "leakage");
  const double eps = config.leakage_eps;
  const Signature universal =
      make_signature(sig_rng, leak_rng, subspaces.u, dim, eps);
  std::vector<Signature> fingerprints;
  for (int g = 0; g <= k + 1; ++g)
    fingerprints.push_back(make_signature(sig_rng, leak_rng, subspaces.s, dim, eps));
  std::vector<Signature> semantics;
  for (int c = 0; c < n_sem; ++c)
    semantics.push_back(make_signature(sig_rng, leak_rng, subspaces.n, dim, eps));
  // Drawn last so enabling it never perturbs the draws above.
  const Signature test_real_camera =
      make_signature(sig_rng, leak_rng, subspaces.s, dim, eps);

  const bool is_train = config.split == DatasetSplit::Train;
  const char* stream_name = is_train ? "sample-train" : "sample-test";

  Dataset ds;
  ds.dim = dim;
  ds.n_generators = k;
  ds.n_semantic = n_sem;
  ds.flags = (config.shortcut_bias ? 1u : 0u) |
             (config.unseen_generator ? 2u : 0u);
  const std::size_t n = static_cast<std::size_t>(config.n_samples);
  ds.features.resize(n * static_cast<std::size_t>(dim));
  ds.y.resize(n);
  ds.g.resize(n);
  ds.c.resize(n);

  const std::size_t n_real = n / 2;
  std::vector<double> z(static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = substream(config.seed, stream_name, i);
    const bool fake = i >= n_real;
    const int c = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n_sem)));
    int g = 0;
    if (fake) {
      if (!is_train && config.unseen_generator) {
        g = k + 1;
      } else if (is_train && config.shortcut_bias) {
        // Spurious train-time coupling: semantics determine the generator.
        g = 1 + (c - 1) % k;
      } else {
        g = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
      }
    }

    std::fill(z.begin(), z.end(), 0.0);
    if (fake) add_signature(z, universal, eps, config.universal_scale);
    const Signature& camera =
        (!fake && !is_train && config.unseen_real_camera)
            ? test_real_camera
            : fingerprints[static_cast<std::size_t>(g)];
    add_signature(z, camera, eps, config.fingerprint_scale);
    add_signature(z, semantics[static_cast<std::size_t>(c - 1)], eps,
                  config.semantic_scale);
    if (config.noise_sigma > 0.0)
      for (double& v : z) v += config.noise_sigma * rng.normal();

    float* row = &ds.features[i * static_cast<std::size_t>(dim)];
    for (int d = 0; d < dim; ++d) row[d] = static_cast<float>(z[static_cast<std::size_t>(d)]);
    ds.y[i] = fake ? 1 : 0;
    ds.g[i] = static_cast<std::uint16_t>(g);
    ds.c[i] = static_cast<std::uint16_t>(c);
  }
  return {std::move(ds), std::move(subspaces)};
}

}  // namespace odp
