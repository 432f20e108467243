#pragma once

#include <cstdint>
#include <vector>

namespace deepctr {

// One labeled record over m fields: exactly one active feature per field.
// Values are stored as float so the in-memory stream is identical whether it
// came from the online mapper or from the fixed-width indexed file.
struct SparseInstance {
  std::vector<std::uint32_t> ids;  // one global feature ID per field
  std::vector<float> values;       // 1.0 for one-hot, (scaled) value for numeric
  std::uint8_t label = 0;          // 0 or 1

  bool operator==(const SparseInstance&) const = default;
};

struct Batch {
  std::vector<SparseInstance> instances;

  std::size_t size() const { return instances.size(); }
  bool empty() const { return instances.empty(); }

  bool operator==(const Batch&) const = default;
};

}  // namespace deepctr
