#include "pgru/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>

#include "pgru/data.hpp"
#include "pgru/error.hpp"
#include "pgru/evaluation.hpp"

namespace pgru {

std::uint64_t file_digest(const std::filesystem::path& path) {
  return fnv1a64(read_text_file(path));
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string manifest_text(const RunManifest& m) {
  std::string out;
  out += "# command: " + m.command + "\n";
  out += "# argv:";
  for (const auto& a : m.argv) out += " " + a;
  out += "\n";
  out += "# version: " + std::string(kToolkitVersion) + "\n";
  out += "# seed: " + std::to_string(m.seed) + "\n";
  out += "# started_at: " + m.started_at + "\n";
  if (!m.finished_at.empty()) out += "# finished_at: " + m.finished_at + "\n";
  for (const auto& [path, digest] : m.input_digests) {
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(digest));
    out += "# input: " + path + " fnv1a64=" + hex + "\n";
  }
  out += serialize_config(m.config);
  return out;
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write manifest " + path.string());
  out << manifest_text(manifest);
}

}  // namespace pgru
