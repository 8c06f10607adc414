#pragma once

#include <string>
#include <vector>

#include "odp/grid.hpp"

namespace odp {

/// How a stack of spectra is reduced to one map.
///  - MeanLog: elementwise mean of the per-image log(1+|F|) spectra (default).
///  - LogMean: log(1+.) of the elementwise mean of per-image |F|.
enum class AvgMode { MeanLog, LogMean };

/// Log-magnitude Fourier spectrum of an image: unnormalized 2D DFT,
/// magnitude, log(1+|F|), quadrants swapped so DC lands at (h/2, w/2).
/// Deterministic for identical input; rejects non-finite values.
SpectrumMap log_magnitude_spectrum(const ImageGrid& image);

/// Elementwise mean spectrum of a corpus. All images must share dimensions.
/// Per-image spectra may be computed on `n_threads` workers; the final
/// reduction is a fixed-order sequential sum, so the result is bit-identical
/// for any thread count.
SpectrumMap average_spectrum(const std::vector<ImageGrid>& images,
                             AvgMode mode = AvgMode::MeanLog,
                             int n_threads = 1);

/// Elementwise |s_a - s_b|.
ArtifactMap artifact_map(const SpectrumMap& s_a, const SpectrumMap& s_b);

struct AdditivityReport {
  std::string pair_name;
  double pcc = 0.0;
  double cosine_similarity = 0.0;
  std::size_t n_bins = 0;
};

/// Additivity Criterion for a (real, gen A, gen B) spectrum triple: regress
/// the predicted superposition D_{A,real} + D_{B,real} against the observed
/// cross-generator difference D_{A,B}. Artifacts on disjoint frequency
/// supports give PCC and cosine similarity near 1.
AdditivityReport additivity_report(const SpectrumMap& s_real,
                                   const SpectrumMap& s_gen_a,
                                   const SpectrumMap& s_gen_b,
                                   const std::string& pair_name);

/// Grayscale preprocessing: center-crop to square then nearest-neighbor
/// resize to side x side. Interpolation-free, hence deterministic.
ImageGrid preprocess(const ImageGrid& image, int side);

}  // namespace odp
