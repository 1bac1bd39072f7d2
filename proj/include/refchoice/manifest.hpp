#pragma once

// Run manifest: every CLI invocation records its resolved options, input
// digests, seed and version next to its outputs, so a run can be reproduced
// from the manifest alone and inputs can be tamper-checked later.

#include <openssl/evp.h>

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "refchoice/errors.hpp"

namespace refchoice {

inline constexpr const char* kToolVersion = "0.1.0";

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(),
                  nullptr))
    throw Error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

inline std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path + " for digest");
  std::string bytes((std::istreambuf_iterator<char>(in)), {});
  return sha256_hex(bytes);
}

struct RunManifest {
  std::string subcommand;
  nlohmann::json options = nlohmann::json::object();
  std::map<std::string, std::string> input_digests;
  std::vector<std::string> outputs;
  std::uint64_t seed = 0;
  int threads = 1;
  double wall_seconds = 0.0;

  void add_input(const std::string& path) {
    input_digests[path] = "sha256:" + sha256_file(path);
  }

  nlohmann::json to_json() const {
    return nlohmann::json{{"tool", "refchoice"},
                          {"version", kToolVersion},
                          {"subcommand", subcommand},
                          {"options", options},
                          {"inputs", input_digests},
                          {"outputs", outputs},
                          {"seed", seed},
                          {"threads", threads},
                          {"wall_seconds", wall_seconds}};
  }

  void write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << to_json().dump(2) << '\n';
  }
};

// Recompute the stored digests; returns the paths whose content changed.
inline std::vector<std::string> manifest_stale_inputs(
    const nlohmann::json& manifest) {
  std::vector<std::string> stale;
  if (!manifest.contains("inputs")) return stale;
  for (const auto& [path, digest] : manifest.at("inputs").items())
    if ("sha256:" + sha256_file(path) != digest.get<std::string>())
      stale.push_back(path);
  return stale;
}

}  // namespace refchoice
