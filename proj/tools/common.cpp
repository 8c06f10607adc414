#include "common.hpp"

#include "odp/io.hpp"

namespace odptool {

ManifestScope::ManifestScope(std::string command, std::string config_hash,
                             std::uint64_t seed, std::string out_path)
    : path(std::move(out_path)) {
  manifest.command = std::move(command);
  manifest.config_hash = std::move(config_hash);
  manifest.seed = seed;
  manifest.started_at = odp::utc_timestamp();
}

void ManifestScope::finish() {
  manifest.finished_at = odp::utc_timestamp();
  odp::write_file_atomic(path, odp::manifest_json(manifest));
}

}  // namespace odptool
