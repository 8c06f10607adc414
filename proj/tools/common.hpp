#pragma once

#include <cstdint>
#include <string>

#include "odp/manifest.hpp"

// Shared CLI plumbing. Exit codes: 0 success, 2 usage/config error,
// 3 data-format error, 4 degenerate-statistics error.

namespace odptool {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitDataFormat = 3;
inline constexpr int kExitDegenerate = 4;

struct ManifestScope {
  odp::RunManifest manifest;
  std::string path;

  ManifestScope(std::string command, std::string config_hash,
                std::uint64_t seed, std::string out_path);
  void finish();
};

int run_spectra(int argc, char** argv);
int run_synth(int argc, char** argv);
int run_train(int argc, char** argv);
int run_eval(int argc, char** argv);
int run_disentangle(int argc, char** argv);
int run_verify(int argc, char** argv);

}  // namespace odptool
