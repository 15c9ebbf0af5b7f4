#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vpath {

inline constexpr std::string_view kToolVersion = "1.0.0";

std::string sha256_hex(std::string_view data);
/// Throws IoError when the file cannot be read.
std::string sha256_file(const std::string& path);

struct FileDigest {
  std::string path;
  std::string sha256;
};

/// Everything needed to reproduce one CLI run.
struct RunManifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> parameters;
  std::optional<std::uint64_t> seed;
  std::vector<FileDigest> inputs;
  std::vector<FileDigest> outputs; // paths relative to the manifest's directory
  std::int64_t started = 0;        // seconds since the epoch
  std::int64_t finished = 0;
};

/// SOURCE_DATE_EPOCH when set, so manifests can be reproduced byte for byte.
std::int64_t manifest_clock();
std::string format_rfc3339(std::int64_t seconds);

void write_manifest(std::ostream& out, const RunManifest& m);

} // namespace vpath
