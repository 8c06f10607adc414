#pragma once

#include <cstddef>
#include <vector>

namespace odp {

/// Row-major grayscale image with intensities in [0, 1].
struct ImageGrid {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  ImageGrid() = default;
  ImageGrid(int w, int h, double fill = 0.0)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int row, int col) {
    return values[static_cast<std::size_t>(row) * width + col];
  }
  double at(int row, int col) const {
    return values[static_cast<std::size_t>(row) * width + col];
  }
};

/// DC-centered log-magnitude spectrum: log(1 + |F|) per bin. For an h x w
/// grid the DC bin sits at (h/2, w/2) after centering.
struct SpectrumMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  SpectrumMap() = default;
  SpectrumMap(int w, int h, double fill = 0.0)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int row, int col) {
    return values[static_cast<std::size_t>(row) * width + col];
  }
  double at(int row, int col) const {
    return values[static_cast<std::size_t>(row) * width + col];
  }
};

/// Elementwise |difference| of two spectra; same grid layout as SpectrumMap.
struct ArtifactMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  ArtifactMap() = default;
  ArtifactMap(int w, int h, double fill = 0.0)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int row, int col) {
    return values[static_cast<std::size_t>(row) * width + col];
  }
  double at(int row, int col) const {
    return values[static_cast<std::size_t>(row) * width + col];
  }
};

}  // namespace odp
