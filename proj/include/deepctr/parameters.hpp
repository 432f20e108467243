#pragma once

#include <bit>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "deepctr/errors.hpp"
#include "deepctr/model_spec.hpp"
#include "deepctr/rng.hpp"
#include "deepctr/tensor.hpp"

namespace deepctr {

struct DenseLayer {
  DenseMatrix W;
  std::vector<double> b;
};

struct LayerNormParams {
  std::vector<double> gain;
  std::vector<double> bias;
};

// Every learnable tensor of one model. Which tensors are non-empty depends
// on the model kind; see init_params. The same struct doubles as the
// gradient container so gradients mirror parameters tensor-for-tensor.
struct ParameterStore {
  // wide side
  double w0 = 0.0;
  std::vector<double> w;       // order-1 weights, length d
  DenseMatrix V;               // FM latents, d x k; the shared table in DeepFM
  std::vector<double> pair_w;  // poly2 pairwise hash table

  // deep side
  DenseMatrix V_deep;           // deep-only embedding table, d x (k+1); empty when shared
  DenseMatrix prod_linear;      // product layer, hidden[0] x (m*e)
  DenseMatrix prod_quad;        // product layer, hidden[0] x p_dim
  std::vector<double> prod_bias;
  std::vector<DenseLayer> deep;     // affine chain ending in the scalar projection
  std::vector<LayerNormParams> ln;  // one per hidden layer when enabled
};

// Gradients for one batch: tensors shaped exactly like the store, plus the
// global feature ids / pair slots that actually received contributions,
// which drive the sparse-aware optimizer updates.
struct GradientSet {
  ParameterStore tensors;
  std::vector<std::uint32_t> active_ids;   // sorted, unique
  std::vector<std::uint64_t> active_pairs; // sorted, unique (poly2 slots)
};

enum class SparsePattern { kDense, kFeatureRows, kPairEntries };

struct TensorRef {
  std::string name;
  double* data;
  std::size_t size;
  SparsePattern sparse;
  std::size_t row_width;  // meaningful for kFeatureRows
};

struct ConstTensorRef {
  ConstTensorRef(std::string name_, const double* data_, std::size_t size_,
                 SparsePattern sparse_, std::size_t row_width_)
      : name(std::move(name_)), data(data_), size(size_), sparse(sparse_),
        row_width(row_width_) {}
  ConstTensorRef(const TensorRef& t)  // read-only view of a mutable ref
      : name(t.name), data(t.data), size(t.size), sparse(t.sparse),
        row_width(t.row_width) {}

  std::string name;
  const double* data;
  std::size_t size;
  SparsePattern sparse;
  std::size_t row_width;
};

// Visits every tensor in declaration order. The order is the checkpoint
// format and the optimizer-state layout, so it must stay stable.
template <typename Fn>
void for_each_tensor(ParameterStore& store, Fn&& fn) {
  if (!store.w.empty()) {
    fn(TensorRef{"w0", &store.w0, 1, SparsePattern::kDense, 0});
    fn(TensorRef{"w", store.w.data(), store.w.size(), SparsePattern::kFeatureRows, 1});
  }
  if (!store.V.empty()) {
    fn(TensorRef{"V", store.V.data().data(), store.V.size(), SparsePattern::kFeatureRows,
                 store.V.cols()});
  }
  if (!store.pair_w.empty()) {
    fn(TensorRef{"pair_w", store.pair_w.data(), store.pair_w.size(),
                 SparsePattern::kPairEntries, 1});
  }
  if (!store.V_deep.empty()) {
    fn(TensorRef{"V_deep", store.V_deep.data().data(), store.V_deep.size(),
                 SparsePattern::kFeatureRows, store.V_deep.cols()});
  }
  if (!store.prod_linear.empty()) {
    fn(TensorRef{"prod_linear", store.prod_linear.data().data(), store.prod_linear.size(),
                 SparsePattern::kDense, 0});
  }
  if (!store.prod_quad.empty()) {
    fn(TensorRef{"prod_quad", store.prod_quad.data().data(), store.prod_quad.size(),
                 SparsePattern::kDense, 0});
  }
  if (!store.prod_bias.empty()) {
    fn(TensorRef{"prod_bias", store.prod_bias.data(), store.prod_bias.size(),
                 SparsePattern::kDense, 0});
  }
  for (std::size_t l = 0; l < store.deep.size(); ++l) {
    fn(TensorRef{"deep_w" + std::to_string(l), store.deep[l].W.data().data(),
                 store.deep[l].W.size(), SparsePattern::kDense, 0});
    fn(TensorRef{"deep_b" + std::to_string(l), store.deep[l].b.data(),
                 store.deep[l].b.size(), SparsePattern::kDense, 0});
  }
  for (std::size_t l = 0; l < store.ln.size(); ++l) {
    fn(TensorRef{"ln_gain" + std::to_string(l), store.ln[l].gain.data(),
                 store.ln[l].gain.size(), SparsePattern::kDense, 0});
    fn(TensorRef{"ln_bias" + std::to_string(l), store.ln[l].bias.data(),
                 store.ln[l].bias.size(), SparsePattern::kDense, 0});
  }
}

template <typename Fn>
void for_each_tensor(const ParameterStore& store, Fn&& fn) {
  // read-only view over the same enumeration
  for_each_tensor(const_cast<ParameterStore&>(store), [&fn](const TensorRef& t) {
    fn(ConstTensorRef{t.name, t.data, t.size, t.sparse, t.row_width});
  });
}

// Quadratic-neuron count of the product layer.
inline std::size_t product_dim(const ModelSpec& spec, std::size_t m) {
  const std::size_t e = static_cast<std::size_t>(spec.deep_embed_dim());
  const std::size_t pairs = m * (m - 1) / 2;
  const std::size_t outer = spec.exact_outer ? pairs * e * e : e * e;
  switch (spec.product_type()) {
    case ProductType::kInner: return pairs;
    case ProductType::kOuter: return outer;
    case ProductType::kBoth: return pairs + outer;
    case ProductType::kNone: return 0;
  }
  return 0;
}

// Fresh parameter store for a model over d global features and m fields.
// Latent tables and dense weights start at Normal(0, 0.01); order-1 weights
// and biases start at zero; layer-norm gains at one.
inline ParameterStore init_params(const ModelSpec& spec, std::size_t d, std::size_t m,
                                  std::uint64_t seed) {
  spec.validate();
  ParameterStore store;
  Rng rng = Rng(seed).split(0x50415241);

  auto fill_normal = [&rng](DenseMatrix& mat) {
    for (auto& v : mat.data()) v = rng.normal(0.0, 0.01);
  };

  if (spec.has_wide()) {
    store.w.assign(d, 0.0);
    if (spec.wide_kind() == WideKind::kFm) {
      store.V = DenseMatrix(d, static_cast<std::size_t>(spec.wide_embed_dim()));
      fill_normal(store.V);
    }
    if (spec.wide_kind() == WideKind::kPoly2) {
      store.pair_w.assign(spec.poly2_table_size, 0.0);
    }
  }

  if (spec.has_deep()) {
    const std::size_t e = static_cast<std::size_t>(spec.deep_embed_dim());
    const std::size_t input = m * e;
    if (!spec.shared_embedding()) {
      store.V_deep = DenseMatrix(d, e);
      fill_normal(store.V_deep);
    }
    const std::size_t num_hidden = spec.hidden.size();
    std::size_t prev;
    if (spec.deep_kind() == DeepKind::kPnn) {
      const std::size_t h0 = static_cast<std::size_t>(spec.hidden[0]);
      store.prod_linear = DenseMatrix(h0, input);
      store.prod_quad = DenseMatrix(h0, product_dim(spec, m));
      store.prod_bias.assign(h0, 0.0);
      fill_normal(store.prod_linear);
      fill_normal(store.prod_quad);
      prev = h0;
      for (std::size_t l = 1; l < num_hidden; ++l) {
        DenseLayer layer;
        layer.W = DenseMatrix(static_cast<std::size_t>(spec.hidden[l]), prev);
        layer.b.assign(static_cast<std::size_t>(spec.hidden[l]), 0.0);
        fill_normal(layer.W);
        store.deep.push_back(std::move(layer));
        prev = static_cast<std::size_t>(spec.hidden[l]);
      }
    } else {
      prev = input;
      for (std::size_t l = 0; l < num_hidden; ++l) {
        DenseLayer layer;
        layer.W = DenseMatrix(static_cast<std::size_t>(spec.hidden[l]), prev);
        layer.b.assign(static_cast<std::size_t>(spec.hidden[l]), 0.0);
        fill_normal(layer.W);
        store.deep.push_back(std::move(layer));
        prev = static_cast<std::size_t>(spec.hidden[l]);
      }
    }
    DenseLayer out;
    out.W = DenseMatrix(1, prev);
    out.b.assign(1, 0.0);
    fill_normal(out.W);
    store.deep.push_back(std::move(out));

    if (spec.use_layer_norm) {
      store.ln.resize(num_hidden);
      for (std::size_t l = 0; l < num_hidden; ++l) {
        store.ln[l].gain.assign(static_cast<std::size_t>(spec.hidden[l]), 1.0);
        store.ln[l].bias.assign(static_cast<std::size_t>(spec.hidden[l]), 0.0);
      }
    }
  }
  return store;
}

// Zero-filled gradient container matching the store's shapes.
inline GradientSet make_gradients(const ParameterStore& store) {
  GradientSet g;
  g.tensors.w.assign(store.w.size(), 0.0);
  g.tensors.V = DenseMatrix(store.V.rows(), store.V.cols());
  g.tensors.pair_w.assign(store.pair_w.size(), 0.0);
  g.tensors.V_deep = DenseMatrix(store.V_deep.rows(), store.V_deep.cols());
  g.tensors.prod_linear = DenseMatrix(store.prod_linear.rows(), store.prod_linear.cols());
  g.tensors.prod_quad = DenseMatrix(store.prod_quad.rows(), store.prod_quad.cols());
  g.tensors.prod_bias.assign(store.prod_bias.size(), 0.0);
  g.tensors.deep.resize(store.deep.size());
  for (std::size_t l = 0; l < store.deep.size(); ++l) {
    g.tensors.deep[l].W = DenseMatrix(store.deep[l].W.rows(), store.deep[l].W.cols());
    g.tensors.deep[l].b.assign(store.deep[l].b.size(), 0.0);
  }
  g.tensors.ln.resize(store.ln.size());
  for (std::size_t l = 0; l < store.ln.size(); ++l) {
    g.tensors.ln[l].gain.assign(store.ln[l].gain.size(), 0.0);
    g.tensors.ln[l].bias.assign(store.ln[l].bias.size(), 0.0);
  }
  return g;
}

// Shape-chain validation for externally supplied stores (checkpoint loads).
inline void validate_store(const ParameterStore& store, const ModelSpec& spec,
                           std::size_t d, std::size_t m) {
  ParameterStore fresh = init_params(spec, d, m, 0);
  ParameterStore copy = store;
  std::vector<std::pair<std::string, std::size_t>> want, got;
  for_each_tensor(fresh, [&want](const TensorRef& t) { want.emplace_back(t.name, t.size); });
  for_each_tensor(copy, [&got](const TensorRef& t) { got.emplace_back(t.name, t.size); });
  if (want != got) {
    throw DimensionError("parameter store does not match spec '" + to_string(spec.kind) +
                         "' over d=" + std::to_string(d) + ", m=" + std::to_string(m));
  }
}

// Poly-2 slot for an unordered global-ID pair: multiply-shift into a
// power-of-two table, collisions accepted.
inline std::uint64_t poly2_slot(std::uint32_t a, std::uint32_t b,
                                std::uint64_t table_size) {
  if (a > b) std::swap(a, b);
  const std::uint64_t key = (static_cast<std::uint64_t>(a) << 32) | b;
  const int bits = std::countr_zero(table_size);
  return (key * 0x9E3779B97F4A7C15ULL) >> (64 - bits);
}

}  // namespace deepctr
