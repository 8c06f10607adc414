#pragma once

#include <string>
#include <vector>

#include "odp/grid.hpp"
#include "odp/spectra.hpp"
#include "odp/synth.hpp"

namespace odp {

/// Read the whole file; DataError on failure.
std::string read_file(const std::string& path);

/// Atomic write: write to a temp sibling, then rename over the target.
void write_file_atomic(const std::string& path, const std::string& bytes);

/// Hex SHA-256 of a byte string / file.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

// --- images ----------------------------------------------------------------

/// 8-bit binary PGM (P5). Intensities map to [0, 1].
ImageGrid read_pgm(const std::string& path);
void write_pgm(const std::string& path, const ImageGrid& image);

/// 8-bit grayscale/RGB/palette PNG; RGB collapses through luminance
/// weights (0.299, 0.587, 0.114).
ImageGrid read_png(const std::string& path);

/// Dispatch on file contents (PNG signature vs "P5").
ImageGrid read_image(const std::string& path);

// --- spectrum container ------------------------------------------------------

/// ODPS: magic "ODPS", version u32=1, height u32, width u32, then
/// height*width little-endian f32 values.
void save_spectrum(const std::string& path, const SpectrumMap& s);
void save_spectrum(const std::string& path, const ArtifactMap& s);
SpectrumMap load_spectrum(const std::string& path);

/// Min-max normalized 8-bit PGM render for visual inspection.
void write_spectrum_pgm(const std::string& path, const SpectrumMap& s);
void write_spectrum_pgm(const std::string& path, const ArtifactMap& s);

// --- feature datasets --------------------------------------------------------

/// ODPD: magic "ODPD", version u32=1, N u32, D u32, K u32, C u32,
/// flags u32 (bit0 shortcut_bias, bit1 unseen_generator), then per sample
/// D little-endian f32 features, y u8, g u16, c u16.
void save_dataset(const std::string& path, const Dataset& ds);
Dataset load_dataset(const std::string& path);

/// JSON sidecar {"U":[...],"S":[...],"N":[...]}.
void save_subspaces(const std::string& path, const GroundTruthSubspaces& gt);
GroundTruthSubspaces load_subspaces(const std::string& path);

// --- reports -----------------------------------------------------------------

std::string additivity_csv(const std::vector<AdditivityReport>& reports);
std::string additivity_json(const std::vector<AdditivityReport>& reports);

}  // namespace odp
