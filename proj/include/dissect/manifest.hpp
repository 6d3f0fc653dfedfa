#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace dissect {

// Run provenance written alongside every output directory. Rerunning with an
// identical config and seed reproduces every non-timestamp line.
struct RunManifest {
  std::string command_line;
  std::string config_path;  // "(flags-only)" when no config file was given
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::string output_dir;
  std::string version;
  std::string started_utc;
  std::string finished_utc;
};

std::uint64_t fnv1a64(const std::string& data);
std::string utc_timestamp();

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);

}  // namespace dissect
