#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>

#include <json.hpp>

#include "deepctr/errors.hpp"

namespace deepctr {

// FNV-1a over a string; used to stamp reports with config/schema identities.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Provenance header carried by every machine-readable report.
inline nlohmann::json report_header(const nlohmann::json& config, std::uint64_t seed,
                                    const std::string& schema_dump = "") {
  nlohmann::json h{{"config_hash", hash_hex(fnv1a(config.dump()))}, {"seed", seed}};
  if (!schema_dump.empty()) h["schema_hash"] = hash_hex(fnv1a(schema_dump));
  return h;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw IoError("write failure on '" + path + "'");
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

// JSON-lines sink for training logs.
class JsonLinesWriter {
 public:
  explicit JsonLinesWriter(const std::string& path) : out_(path, std::ios::trunc) {
    if (!out_) throw IoError("cannot open '" + path + "' for writing");
  }

  void write(const nlohmann::json& j) {
    out_ << j.dump() << '\n';
    if (!out_) throw IoError("training log write failure");
  }

 private:
  std::ofstream out_;
};

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace deepctr
