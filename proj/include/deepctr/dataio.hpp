#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "deepctr/errors.hpp"
#include "deepctr/instance.hpp"
#include "deepctr/rng.hpp"
#include "deepctr/schema.hpp"

namespace deepctr {

// Indexed binary format: per record, one label byte followed by
// m x (u32 global ID, f32 value), all little-endian. Constant stride
// 1 + 8*m bytes so the async producer reads at fixed offsets.
namespace detail {

inline void put_u32_le(std::uint32_t v, char* out) {
  out[0] = static_cast<char>(v & 0xFF);
  out[1] = static_cast<char>((v >> 8) & 0xFF);
  out[2] = static_cast<char>((v >> 16) & 0xFF);
  out[3] = static_cast<char>((v >> 24) & 0xFF);
}

inline std::uint32_t get_u32_le(const char* in) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(in[0])) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(in[1])) << 8) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(in[2])) << 16) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(in[3])) << 24);
}

inline void put_f32_le(float v, char* out) {
  put_u32_le(std::bit_cast<std::uint32_t>(v), out);
}

inline float get_f32_le(const char* in) {
  return std::bit_cast<float>(get_u32_le(in));
}

}  // namespace detail

inline std::size_t indexed_record_stride(std::size_t field_count) {
  return 1 + field_count * 8;
}

// Pull-based instance stream.
class InstanceSource {
 public:
  virtual ~InstanceSource() = default;
  virtual std::optional<SparseInstance> next() = 0;
};

// Re-encodes raw delimited records on every read; no intermediate storage.
class OnlineMapSource : public InstanceSource {
 public:
  OnlineMapSource(std::string raw_path, const FeatureSchema& schema)
      : path_(std::move(raw_path)), schema_(&schema), in_(path_) {
    if (!in_) throw IoError("cannot open raw input '" + path_ + "'");
  }

  std::optional<SparseInstance> next() override {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (line.empty()) continue;
      return encode_line(*schema_, line, line_no_);
    }
    if (in_.bad()) throw IoError("read failure on '" + path_ + "'");
    return std::nullopt;
  }

 private:
  std::string path_;
  const FeatureSchema* schema_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
};

class IndexedFileWriter {
 public:
  IndexedFileWriter(std::string path, std::size_t field_count)
      : path_(std::move(path)),
        out_(path_, std::ios::binary | std::ios::trunc),
        buf_(indexed_record_stride(field_count)),
        field_count_(field_count) {
    if (!out_) throw IoError("cannot open indexed output '" + path_ + "'");
  }

  void write(const SparseInstance& inst) {
    buf_[0] = static_cast<char>(inst.label);
    char* p = buf_.data() + 1;
    for (std::size_t f = 0; f < field_count_; ++f) {
      detail::put_u32_le(inst.ids[f], p);
      detail::put_f32_le(inst.values[f], p + 4);
      p += 8;
    }
    out_.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!out_) throw IoError("write failure on '" + path_ + "'");
  }

  void close() {
    out_.close();
    if (!out_) throw IoError("close failure on '" + path_ + "'");
  }

 private:
  std::string path_;
  std::ofstream out_;
  std::vector<char> buf_;
  std::size_t field_count_;
};

class IndexedFileSource : public InstanceSource {
 public:
  IndexedFileSource(std::string path, std::size_t field_count)
      : path_(std::move(path)),
        in_(path_, std::ios::binary),
        buf_(indexed_record_stride(field_count)),
        field_count_(field_count) {
    if (!in_) throw IoError("cannot open indexed input '" + path_ + "'");
  }

  std::optional<SparseInstance> next() override {
    in_.read(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (in_.gcount() == 0 && in_.eof()) return std::nullopt;
    if (in_.gcount() != static_cast<std::streamsize>(buf_.size())) {
      throw IoError("truncated record in '" + path_ + "'");
    }
    SparseInstance inst;
    inst.label = static_cast<std::uint8_t>(buf_[0]);
    inst.ids.resize(field_count_);
    inst.values.resize(field_count_);
    const char* p = buf_.data() + 1;
    for (std::size_t f = 0; f < field_count_; ++f) {
      inst.ids[f] = detail::get_u32_le(p);
      inst.values[f] = detail::get_f32_le(p + 4);
      p += 8;
    }
    return inst;
  }

 private:
  std::string path_;
  std::ifstream in_;
  std::vector<char> buf_;
  std::size_t field_count_;
};

// One-time materialization of the ID-encoded dataset, record order preserved.
// Returns the number of records written.
inline std::size_t index_offline(const std::string& raw_path, const FeatureSchema& schema,
                                 const std::string& out_path) {
  OnlineMapSource src(raw_path, schema);
  IndexedFileWriter writer(out_path, schema.field_count());
  std::size_t n = 0;
  while (auto inst = src.next()) {
    writer.write(*inst);
    ++n;
  }
  writer.close();
  return n;
}

inline std::vector<SparseInstance> read_all(InstanceSource& src) {
  std::vector<SparseInstance> out;
  while (auto inst = src.next()) out.push_back(std::move(*inst));
  return out;
}

inline std::vector<SparseInstance> load_indexed(const std::string& path,
                                                std::size_t field_count) {
  IndexedFileSource src(path, field_count);
  return read_all(src);
}

// --- batching ---------------------------------------------------------------

class BatchSource {
 public:
  virtual ~BatchSource() = default;
  virtual std::optional<Batch> next() = 0;
};

// One epoch over an in-memory dataset. Every instance is emitted exactly
// once; the final short batch is kept. With shuffle off the order equals the
// dataset order; with a fixed seed the permutation is reproducible.
class MemoryBatchSource : public BatchSource {
 public:
  MemoryBatchSource(const std::vector<SparseInstance>& data, std::size_t batch_size,
                    bool shuffle, std::uint64_t seed)
      : data_(&data), batch_size_(batch_size) {
    if (batch_size_ == 0) throw ConfigError("batch size must be >= 1");
    order_.resize(data.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    if (shuffle) {
      Rng rng(seed);
      rng.shuffle(order_.begin(), order_.end());
    }
  }

  std::optional<Batch> next() override {
    if (pos_ >= order_.size()) return std::nullopt;
    Batch b;
    const std::size_t end = std::min(pos_ + batch_size_, order_.size());
    b.instances.reserve(end - pos_);
    for (; pos_ < end; ++pos_) b.instances.push_back((*data_)[order_[pos_]]);
    return b;
  }

 private:
  const std::vector<SparseInstance>* data_;
  std::size_t batch_size_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

// Streams batches straight from an instance source (no shuffle).
class StreamingBatchSource : public BatchSource {
 public:
  StreamingBatchSource(InstanceSource& src, std::size_t batch_size)
      : src_(&src), batch_size_(batch_size) {
    if (batch_size_ == 0) throw ConfigError("batch size must be >= 1");
  }

  std::optional<Batch> next() override {
    Batch b;
    b.instances.reserve(batch_size_);
    while (b.size() < batch_size_) {
      auto inst = src_->next();
      if (!inst) break;
      b.instances.push_back(std::move(*inst));
    }
    if (b.empty()) return std::nullopt;
    return b;
  }

 private:
  InstanceSource* src_;
  std::size_t batch_size_;
};

inline std::vector<Batch> collect(BatchSource& src) {
  std::vector<Batch> out;
  while (auto b = src.next()) out.push_back(std::move(*b));
  return out;
}

// Order-sensitive checksum over a batch stream (ids, value bits, labels).
inline std::uint64_t batch_checksum(const Batch& b) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 0x100000001B3ULL;
  };
  for (const auto& inst : b.instances) {
    mix(inst.label);
    for (std::size_t f = 0; f < inst.ids.size(); ++f) {
      mix(inst.ids[f]);
      mix(std::bit_cast<std::uint32_t>(inst.values[f]));
    }
  }
  return h;
}

}  // namespace deepctr
