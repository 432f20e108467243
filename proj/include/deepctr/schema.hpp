#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "deepctr/errors.hpp"
#include "deepctr/instance.hpp"

namespace deepctr {

enum class FieldKind { kCategorical, kNumerical };
enum class NumericPolicy { kRetain, kDiscretize };

// Per-field metadata. Categorical fields hold a token vocabulary mapping to
// dense local indices in [0, cardinality). Numerical fields either retain
// the value on a single ID, or one-hot over len(boundaries)+1 buckets.
struct FieldSpec {
  std::string name;
  FieldKind kind = FieldKind::kCategorical;
  NumericPolicy policy = NumericPolicy::kRetain;
  std::map<std::string, std::uint32_t> vocab;  // categorical only
  std::vector<double> boundaries;              // discretize only, strictly increasing
  double mean = 0.0;                           // retain only, training-set stats
  double stddev = 1.0;
  bool has_unknown = false;  // last local index reserved for unseen tokens

  std::uint32_t cardinality() const {
    switch (kind) {
      case FieldKind::kCategorical:
        return static_cast<std::uint32_t>(vocab.size()) + (has_unknown ? 1u : 0u);
      case FieldKind::kNumerical:
        return policy == NumericPolicy::kRetain
                   ? 1u
                   : static_cast<std::uint32_t>(boundaries.size()) + 1u;
    }
    return 0;
  }

  std::uint32_t unknown_local_index() const {
    return static_cast<std::uint32_t>(vocab.size());
  }

  std::uint32_t bucket_of(double v) const {
    // boundaries [b0,b1,...]: bucket i covers [b_{i-1}, b_i)
    auto it = std::upper_bound(boundaries.begin(), boundaries.end(), v);
    return static_cast<std::uint32_t>(it - boundaries.begin());
  }
};

struct SchemaOptions {
  char delimiter = '\t';
  // Reserve one extra local index per categorical field so unseen tokens at
  // eval time map into a stable global-ID layout.
  bool reserve_unknown = true;
  // Standardize retain-policy numerics to zero mean / unit variance using
  // training-set statistics.
  bool standardize_numeric = true;

  bool operator==(const SchemaOptions&) const = default;
};

// Field layout of the global sparse feature space. Immutable once built;
// safe for concurrent readers.
class FeatureSchema {
 public:
  FeatureSchema() = default;
  FeatureSchema(std::vector<FieldSpec> fields, SchemaOptions options)
      : fields_(std::move(fields)), options_(options) {
    rebuild_offsets();
  }

  std::size_t field_count() const { return fields_.size(); }
  const FieldSpec& field(std::size_t i) const { return fields_[i]; }
  const std::vector<FieldSpec>& fields() const { return fields_; }
  const SchemaOptions& options() const { return options_; }

  std::uint32_t total_features() const { return total_features_; }

  std::uint32_t field_offset(std::size_t field_index) const {
    return offsets_[field_index];
  }

  // GlobalID(i, j) = sum of cardinalities of fields before i, plus j.
  // field_index is 0-based here; the public API hides the 1-based sum.
  std::uint32_t global_id(std::size_t field_index, std::uint32_t local_index) const {
    if (field_index >= fields_.size()) {
      throw IndexError("field index " + std::to_string(field_index) + " out of range");
    }
    if (local_index >= fields_[field_index].cardinality()) {
      throw IndexError("local index " + std::to_string(local_index) +
                       " out of range for field '" + fields_[field_index].name +
                       "' (cardinality " +
                       std::to_string(fields_[field_index].cardinality()) + ")");
    }
    return offsets_[field_index] + local_index;
  }

  // Inverse of global_id: (field index, local index).
  std::pair<std::size_t, std::uint32_t> locate(std::uint32_t gid) const {
    if (gid >= total_features_) {
      throw IndexError("global id " + std::to_string(gid) + " out of range");
    }
    auto it = std::upper_bound(offsets_.begin(), offsets_.end(), gid);
    const std::size_t f = static_cast<std::size_t>(it - offsets_.begin()) - 1;
    return {f, gid - offsets_[f]};
  }

  nlohmann::json to_json() const;
  static FeatureSchema from_json(const nlohmann::json& j);

 private:
  void rebuild_offsets() {
    offsets_.resize(fields_.size());
    std::uint32_t off = 0;
    for (std::size_t i = 0; i < fields_.size(); ++i) {
      offsets_[i] = off;
      off += fields_[i].cardinality();
    }
    total_features_ = off;
  }

  std::vector<FieldSpec> fields_;
  SchemaOptions options_;
  std::vector<std::uint32_t> offsets_;
  std::uint32_t total_features_ = 0;
};

// --- raw record parsing ---------------------------------------------------

inline std::vector<std::string> split_line(std::string_view line, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline double parse_double(const std::string& token, std::size_t line_no,
                           const std::string& field_name) {
  try {
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line_no) + ": field '" + field_name +
                     "': cannot parse numeric value '" + token + "'");
  }
}

inline std::uint8_t parse_label(const std::string& token, std::size_t line_no) {
  if (token == "0") return 0;
  if (token == "1") return 1;
  throw ParseError("line " + std::to_string(line_no) + ": label must be 0 or 1, got '" +
                   token + "'");
}

// --- schema building --------------------------------------------------------

struct FieldDecl {
  std::string name;
  FieldKind kind = FieldKind::kCategorical;
  NumericPolicy policy = NumericPolicy::kRetain;
  std::vector<double> boundaries;  // required when policy == kDiscretize
};

namespace detail {

struct FieldAccum {
  std::map<std::string, std::uint32_t> vocab;
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t count = 0;
};

}  // namespace detail

// One pass over header-less delimited records (label first, then one token
// per declared field) collecting vocabularies and numeric statistics.
// `records` is any range of lines.
template <typename LineRange>
FeatureSchema build_schema(const LineRange& records, const std::vector<FieldDecl>& decls,
                           const SchemaOptions& options = {}) {
  for (const auto& d : decls) {
    if (d.policy == NumericPolicy::kDiscretize) {
      if (d.kind != FieldKind::kNumerical) {
        throw ConfigError("field '" + d.name + "': discretize policy on non-numeric field");
      }
      if (d.boundaries.empty()) {
        throw ConfigError("field '" + d.name + "': discretize requires boundaries");
      }
      if (!std::is_sorted(d.boundaries.begin(), d.boundaries.end()) ||
          std::adjacent_find(d.boundaries.begin(), d.boundaries.end()) !=
              d.boundaries.end()) {
        throw ConfigError("field '" + d.name +
                          "': discretize boundaries must be strictly increasing");
      }
    }
  }

  std::vector<detail::FieldAccum> accums(decls.size());
  std::size_t line_no = 0;
  for (const auto& line : records) {
    ++line_no;
    if (line.empty()) continue;
    const auto tokens = split_line(line, options.delimiter);
    if (tokens.size() != decls.size() + 1) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(decls.size() + 1) + " columns, got " +
                       std::to_string(tokens.size()));
    }
    parse_label(tokens[0], line_no);
    for (std::size_t f = 0; f < decls.size(); ++f) {
      const std::string& tok = tokens[f + 1];
      auto& acc = accums[f];
      if (decls[f].kind == FieldKind::kCategorical) {
        acc.vocab.try_emplace(tok, 0);
      } else {
        const double v = parse_double(tok, line_no, decls[f].name);
        acc.sum += v;
        acc.sum_sq += v * v;
        acc.count += 1;
      }
    }
  }

  std::vector<FieldSpec> fields(decls.size());
  for (std::size_t f = 0; f < decls.size(); ++f) {
    FieldSpec& spec = fields[f];
    spec.name = decls[f].name;
    spec.kind = decls[f].kind;
    spec.policy = decls[f].policy;
    spec.boundaries = decls[f].boundaries;
    if (spec.kind == FieldKind::kCategorical) {
      // Dense local indices in token sort order.
      std::uint32_t next = 0;
      for (auto& [tok, idx] : accums[f].vocab) {
        (void)tok;
        idx = next++;
      }
      spec.vocab = std::move(accums[f].vocab);
      spec.has_unknown = options.reserve_unknown;
    } else if (spec.policy == NumericPolicy::kRetain) {
      const auto& acc = accums[f];
      if (acc.count > 0) {
        spec.mean = acc.sum / static_cast<double>(acc.count);
        const double var =
            acc.sum_sq / static_cast<double>(acc.count) - spec.mean * spec.mean;
        spec.stddev = var > 0.0 ? std::sqrt(var) : 1.0;
      }
    }
  }
  return FeatureSchema(std::move(fields), options);
}

// --- encode / decode --------------------------------------------------------

// Encode one record's field tokens (label already stripped) into a sparse
// instance. Unseen categorical tokens route to the field's reserved UNKNOWN
// index when the schema has one, otherwise raise.
inline SparseInstance encode(const FeatureSchema& schema,
                             std::span<const std::string> field_tokens,
                             std::uint8_t label, std::size_t line_no = 0) {
  if (field_tokens.size() != schema.field_count()) {
    throw ParseError("line " + std::to_string(line_no) + ": expected " +
                     std::to_string(schema.field_count()) + " fields, got " +
                     std::to_string(field_tokens.size()));
  }
  SparseInstance inst;
  inst.label = label;
  inst.ids.resize(schema.field_count());
  inst.values.resize(schema.field_count());
  for (std::size_t f = 0; f < schema.field_count(); ++f) {
    const FieldSpec& spec = schema.field(f);
    const std::string& tok = field_tokens[f];
    if (spec.kind == FieldKind::kCategorical) {
      auto it = spec.vocab.find(tok);
      std::uint32_t local;
      if (it != spec.vocab.end()) {
        local = it->second;
      } else if (spec.has_unknown) {
        local = spec.unknown_local_index();
      } else {
        throw ParseError("line " + std::to_string(line_no) + ": field '" + spec.name +
                         "': unseen token '" + tok + "' and no UNKNOWN slot");
      }
      inst.ids[f] = schema.global_id(f, local);
      inst.values[f] = 1.0f;
    } else {
      const double v = parse_double(tok, line_no, spec.name);
      if (spec.policy == NumericPolicy::kDiscretize) {
        inst.ids[f] = schema.global_id(f, spec.bucket_of(v));
        inst.values[f] = 1.0f;
      } else {
        inst.ids[f] = schema.global_id(f, 0);
        const double scaled = schema.options().standardize_numeric
                                  ? (v - spec.mean) / spec.stddev
                                  : v;
        inst.values[f] = static_cast<float>(scaled);
      }
    }
  }
  return inst;
}

inline SparseInstance encode_line(const FeatureSchema& schema, std::string_view line,
                                  std::size_t line_no = 0) {
  const auto tokens = split_line(line, schema.options().delimiter);
  if (tokens.size() != schema.field_count() + 1) {
    throw ParseError("line " + std::to_string(line_no) + ": expected " +
                     std::to_string(schema.field_count() + 1) + " columns, got " +
                     std::to_string(tokens.size()));
  }
  const std::uint8_t label = parse_label(tokens[0], line_no);
  return encode(schema, std::span<const std::string>(tokens).subspan(1), label, line_no);
}

// Inverse of encode, per field: the original token for categorical fields,
// "bucket:<i>" for discretized fields, the de-standardized value otherwise.
inline std::vector<std::string> decode(const FeatureSchema& schema,
                                       const SparseInstance& inst) {
  std::vector<std::string> out(schema.field_count());
  for (std::size_t f = 0; f < schema.field_count(); ++f) {
    const FieldSpec& spec = schema.field(f);
    const std::uint32_t local = inst.ids[f] - schema.field_offset(f);
    if (spec.kind == FieldKind::kCategorical) {
      if (spec.has_unknown && local == spec.unknown_local_index()) {
        out[f] = "<unk>";
      } else {
        for (const auto& [tok, idx] : spec.vocab) {
          if (idx == local) {
            out[f] = tok;
            break;
          }
        }
      }
    } else if (spec.policy == NumericPolicy::kDiscretize) {
      out[f] = "bucket:" + std::to_string(local);
    } else {
      const double raw = schema.options().standardize_numeric
                             ? static_cast<double>(inst.values[f]) * spec.stddev + spec.mean
                             : static_cast<double>(inst.values[f]);
      out[f] = std::to_string(raw);
    }
  }
  return out;
}

// --- JSON serialization -----------------------------------------------------

inline nlohmann::json FeatureSchema::to_json() const {
  nlohmann::json jfields = nlohmann::json::array();
  for (const auto& f : fields_) {
    nlohmann::json jf;
    jf["name"] = f.name;
    jf["kind"] = f.kind == FieldKind::kCategorical ? "categorical" : "numerical";
    if (f.kind == FieldKind::kCategorical) {
      jf["vocab"] = f.vocab;
      jf["has_unknown"] = f.has_unknown;
    } else {
      jf["policy"] = f.policy == NumericPolicy::kRetain ? "retain" : "discretize";
      if (f.policy == NumericPolicy::kDiscretize) {
        jf["boundaries"] = f.boundaries;
      } else {
        jf["mean"] = f.mean;
        jf["stddev"] = f.stddev;
      }
    }
    jfields.push_back(std::move(jf));
  }
  return nlohmann::json{{"fields", std::move(jfields)},
                        {"total_features", total_features_},
                        {"options",
                         {{"delimiter", std::string(1, options_.delimiter)},
                          {"reserve_unknown", options_.reserve_unknown},
                          {"standardize_numeric", options_.standardize_numeric}}}};
}

inline FeatureSchema FeatureSchema::from_json(const nlohmann::json& j) {
  SchemaOptions opts;
  const auto& jo = j.at("options");
  opts.delimiter = jo.at("delimiter").get<std::string>().at(0);
  opts.reserve_unknown = jo.at("reserve_unknown").get<bool>();
  opts.standardize_numeric = jo.at("standardize_numeric").get<bool>();

  std::vector<FieldSpec> fields;
  for (const auto& jf : j.at("fields")) {
    FieldSpec f;
    f.name = jf.at("name").get<std::string>();
    f.kind = jf.at("kind").get<std::string>() == "categorical" ? FieldKind::kCategorical
                                                               : FieldKind::kNumerical;
    if (f.kind == FieldKind::kCategorical) {
      f.vocab = jf.at("vocab").get<std::map<std::string, std::uint32_t>>();
      f.has_unknown = jf.at("has_unknown").get<bool>();
    } else {
      f.policy = jf.at("policy").get<std::string>() == "retain" ? NumericPolicy::kRetain
                                                                : NumericPolicy::kDiscretize;
      if (f.policy == NumericPolicy::kDiscretize) {
        f.boundaries = jf.at("boundaries").get<std::vector<double>>();
      } else {
        f.mean = jf.at("mean").get<double>();
        f.stddev = jf.at("stddev").get<double>();
      }
    }
    fields.push_back(std::move(f));
  }
  FeatureSchema schema(std::move(fields), opts);
  if (schema.total_features() != j.at("total_features").get<std::uint32_t>()) {
    throw IoError("schema JSON total_features does not match field layout");
  }
  return schema;
}

}  // namespace deepctr
