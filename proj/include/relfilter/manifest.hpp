#pragma once

// Run manifests: the command, every flag, the seed and input digests. Two
// runs with equal manifests write byte-identical artifacts.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace relfilter {

inline constexpr const char* kToolVersion = "1.0.0";

struct RunManifest {
  std::string command;
  std::map<std::string, std::string> flags;  // output location excluded
  std::uint64_t seed = 0;
  std::map<std::string, std::string> input_digests;  // path -> sha256 hex
  std::string simd_backend;

  std::string to_json() const;
};

std::string sha256_hex(std::string_view data);
std::string file_sha256(const std::filesystem::path& path);

}  // namespace relfilter
