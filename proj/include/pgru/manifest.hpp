#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "pgru/config.hpp"

namespace pgru {

inline constexpr const char* kToolkitVersion = "0.1.0";

/// Everything needed to re-run a command. Serialized as a valid config file:
/// metadata lines are '#' comments and the resolved config follows as
/// key=value lines, so `--config run.manifest` replays the same settings.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  TrainConfig config;
  std::vector<std::pair<std::string, std::uint64_t>> input_digests;  // path, FNV-1a 64
  std::uint64_t seed = 0;
  std::string started_at;
  std::string finished_at;
};

/// FNV-1a 64 of the file's bytes; throws InvalidArgument if unreadable.
std::uint64_t file_digest(const std::filesystem::path& path);

/// UTC, ISO-8601 to the second.
std::string utc_timestamp();

std::string manifest_text(const RunManifest& manifest);
void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

}  // namespace pgru
