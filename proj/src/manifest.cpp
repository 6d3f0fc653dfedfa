#include "dissect/manifest.hpp"

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <ctime>
#include <fstream>

#include "dissect/errors.hpp"

namespace dissect {

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open manifest for writing: " + path.string());
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016" PRIx64, manifest.config_hash);
  out << "tool = " << manifest.version << "\n";
  out << "command = " << manifest.command_line << "\n";
  out << "config_file = " << manifest.config_path << "\n";
  out << "config_hash = " << hash << "\n";
  out << "seed = " << manifest.seed << "\n";
  out << "output_dir = " << manifest.output_dir << "\n";
  out << "started_utc = " << manifest.started_utc << "\n";
  out << "finished_utc = " << manifest.finished_utc << "\n";
  if (!out) throw IoError("manifest write failed: " + path.string());
}

}  // namespace dissect
