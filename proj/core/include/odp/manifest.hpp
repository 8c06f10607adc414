#pragma once

#include <cstdint>
#include <string>

namespace odp {

inline constexpr const char* kToolVersion = "0.1.0";

/// Provenance record written alongside every command's outputs. config_hash
/// is the SHA-256 of the canonicalized (sorted-key) JSON config that
/// produced the run, so identical inputs are detectable by digest equality.
struct RunManifest {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string tool_version = kToolVersion;
  std::string started_at;
  std::string finished_at;
};

std::string manifest_json(const RunManifest& m);

/// Current UTC time in ISO 8601 (seconds resolution).
std::string utc_timestamp();

}  // namespace odp
