#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "deepctr/errors.hpp"
#include "deepctr/model.hpp"

namespace deepctr {

// Checkpoint file: magic, format version, length-prefixed JSON header
// (model spec + dimensions), then every tensor in declaration order as
// little-endian 64-bit floats, each prefixed by its element count.
// A .json sidecar mirrors the header for tooling that won't parse binary.
inline constexpr char kCheckpointMagic[8] = {'D', 'C', 'T', 'R', 'C', 'K', 'P', '1'};

namespace detail {

inline void put_u64_le(std::uint64_t v, std::ostream& out) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(buf, 8);
}

inline std::uint64_t get_u64_le(std::istream& in) {
  char buf[8];
  in.read(buf, 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
  }
  return v;
}

inline void put_f64_le(double v, std::ostream& out) {
  put_u64_le(std::bit_cast<std::uint64_t>(v), out);
}

inline double get_f64_le(std::istream& in) {
  return std::bit_cast<double>(get_u64_le(in));
}

}  // namespace detail

inline nlohmann::json checkpoint_header(const Model& model) {
  return nlohmann::json{{"model", model.spec().to_json()},
                        {"total_features", model.feature_count()},
                        {"fields", model.field_count()}};
}

inline void save_checkpoint(const Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint '" + path + "' for writing");
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  const std::string header = checkpoint_header(model).dump();
  detail::put_u64_le(header.size(), out);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for_each_tensor(model.params(), [&out](const ConstTensorRef& t) {
    detail::put_u64_le(t.size, out);
    for (std::size_t i = 0; i < t.size; ++i) detail::put_f64_le(t.data[i], out);
  });
  if (!out) throw IoError("write failure on checkpoint '" + path + "'");
  out.close();

  std::ofstream side(path + ".json", std::ios::trunc);
  if (!side) throw IoError("cannot open sidecar '" + path + ".json'");
  side << checkpoint_header(model).dump(2) << '\n';
}

inline Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw IoError("'" + path + "' is not a checkpoint file");
  }
  const std::uint64_t header_len = detail::get_u64_le(in);
  std::string header(header_len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw IoError("truncated checkpoint header in '" + path + "'");

  nlohmann::json j = nlohmann::json::parse(header);
  const ModelSpec spec = ModelSpec::from_json(j.at("model"));
  const std::size_t d = j.at("total_features").get<std::size_t>();
  const std::size_t m = j.at("fields").get<std::size_t>();

  Model model(spec, d, m, /*seed=*/0);
  bool ok = true;
  for_each_tensor(model.params(), [&in, &ok, &path](const TensorRef& t) {
    const std::uint64_t count = detail::get_u64_le(in);
    if (count != t.size) {
      throw IoError("checkpoint tensor '" + t.name + "' has " + std::to_string(count) +
                    " elements, expected " + std::to_string(t.size));
    }
    for (std::size_t i = 0; i < t.size; ++i) t.data[i] = detail::get_f64_le(in);
    ok = ok && static_cast<bool>(in);
  });
  if (!ok || !in) throw IoError("truncated checkpoint '" + path + "'");
  return model;
}

}  // namespace deepctr
