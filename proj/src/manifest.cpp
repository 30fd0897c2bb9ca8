#include "relfilter/manifest.hpp"

#include <openssl/evp.h>

#include <memory>

#include "json.hpp"
#include "relfilter/error.hpp"
#include "relfilter/text_io.hpp"

namespace relfilter {

std::string sha256_hex(std::string_view data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

std::string file_sha256(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["tool"] = "relfilter";
  j["version"] = kToolVersion;
  j["command"] = command;
  j["flags"] = flags;
  j["seed"] = seed;
  j["inputs"] = input_digests;
  j["simd"] = simd_backend;
  return j.dump(2) + "\n";
}

}  // namespace relfilter
