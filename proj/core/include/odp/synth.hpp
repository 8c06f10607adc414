#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "odp/grid.hpp"

namespace odp {

/// Injected generator-style artifact. Stripes mimic upsampling-grid
/// periodicity; spots concentrate energy at chosen frequency bins.
struct ArtifactSpec {
  enum class Kind { Stripe, Spot };
  Kind kind = Kind::Stripe;
  int stripe_period = 8;                       // pixels, >= 2
  std::vector<std::pair<int, int>> spots;      // (u, v) bin offsets from DC
  double amplitude = 0.1;                      // intensity units, >= 0
};

/// Random-phase image whose expected radial power spectrum follows
/// 1/f^alpha. Values are clipped to [0, 1]. Deterministic per seed.
ImageGrid gen_real_image(int side, double alpha, std::uint64_t seed);

/// Superimpose the artifact onto the image in the spatial domain and clip
/// to [0, 1]. amplitude == 0 returns the input exactly. The seed fixes the
/// spot grating phases.
ImageGrid apply_artifact(const ImageGrid& image, const ArtifactSpec& spec,
                         std::uint64_t seed);

/// Additive white pixel noise, clipped to [0, 1]. sigma == 0 is the
/// identity.
ImageGrid add_pixel_noise(const ImageGrid& image, double sigma,
                          std::uint64_t seed);

// ---------------------------------------------------------------------------
// Entangled feature datasets with known ground-truth subspaces.
// ---------------------------------------------------------------------------

enum class DatasetSplit { Train, Test };

struct FeatureDatasetConfig {
  int dim = 128;              // D
  int n_universal = 16;       // |U|
  int n_specific = 16;        // |S|
  int n_generators = 4;       // K
  int n_semantic = 4;         // C
  int n_samples = 1000;       // N
  double noise_sigma = 0.1;
  double leakage_eps = 0.0;   // fraction of signature energy bled off-subspace
  // Norms of the planted patterns. Unit patterns scaled down make the
  // universal trace non-trivial to recover relative to the fingerprints.
  double universal_scale = 1.0;
  double fingerprint_scale = 1.0;
  double semantic_scale = 1.0;
  bool shortcut_bias = false;
  bool unseen_generator = false;
  // Test-split reals drawn from a camera domain never seen in training,
  // the real-domain mirror of unseen_generator.
  bool unseen_real_camera = false;
  DatasetSplit split = DatasetSplit::Train;
  std::uint64_t seed = 42;
};

/// One encoded sample: feature vector z with authenticity label y
/// (0 = real, 1 = fake), generator id g (0 = real domain) and semantic
/// class c (1..C). y == 0 iff g == 0.
struct Dataset {
  int dim = 0;
  int n_generators = 0;  // K from the generating config
  int n_semantic = 0;
  std::uint32_t flags = 0;  // bit0 shortcut_bias, bit1 unseen_generator
  std::vector<float> features;      // n * dim, row-major
  std::vector<std::uint8_t> y;
  std::vector<std::uint16_t> g;
  std::vector<std::uint16_t> c;

  std::size_t size() const { return y.size(); }
  const float* row(std::size_t i) const { return &features[i * dim]; }
};

/// Disjoint channel index sets with U + S + N = {0..D-1}.
struct GroundTruthSubspaces {
  std::vector<std::uint32_t> u;
  std::vector<std::uint32_t> s;
  std::vector<std::uint32_t> n;
};

/// Draw a dataset realizing z = z_u + z_s + z_n on channel-aligned
/// subspaces: every fake carries one shared unit-norm authenticity
/// signature on U; each generator (and the real camera domain, id 0) has
/// its own signature on S; each semantic class has a signature on N.
/// Subspaces and signatures depend only on (seed, dims), so train and test
/// splits drawn from the same seed share them.
std::pair<Dataset, GroundTruthSubspaces> gen_feature_dataset(
    const FeatureDatasetConfig& config);

}  // namespace odp
