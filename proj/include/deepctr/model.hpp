#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "deepctr/instance.hpp"
#include "deepctr/model_spec.hpp"
#include "deepctr/numerics.hpp"
#include "deepctr/parameters.hpp"

namespace deepctr {

// e_i = x_i * T[id_i]
inline void embed_field(const DenseMatrix& table, std::uint32_t id, double value,
                        std::span<double> out) {
  const auto row = table.row(id);
  for (std::size_t j = 0; j < row.size(); ++j) out[j] = value * row[j];
}

// Per-instance activations kept for the backward pass.
struct InstanceCache {
  std::vector<double> fm_sum;   // FM per-factor sums over active features
  std::vector<double> emb;      // concatenated field embeddings, m*e
  std::vector<double> p;        // product-layer quadratic neurons
  std::vector<double> emb_sum;  // sum of field embeddings (compressed outer)
  std::vector<std::vector<double>> z;     // pre-activation per hidden layer (pre-LN)
  std::vector<std::vector<double>> zn;    // post-LN pre-activation
  std::vector<LayerNormCache> ln;
  std::vector<std::vector<double>> a;     // post-activation, post-dropout
  std::vector<std::vector<double>> mask;  // dropout masks, empty when inactive
};

struct ForwardResult {
  std::vector<double> logits;
  std::vector<InstanceCache> caches;
  bool training = false;
};

// One CTR predictor: a wide component (order-1 + order-2 terms), a deep
// component (DNN or PNN over field embeddings), or both summed into a single
// logit. The sigmoid lives at the prediction/loss boundary, not here.
class Model {
 public:
  Model(ModelSpec spec, std::size_t d, std::size_t m, std::uint64_t seed)
      : spec_(std::move(spec)), d_(d), m_(m), params_(init_params(spec_, d, m, seed)) {}

  Model(ModelSpec spec, std::size_t d, std::size_t m, ParameterStore store)
      : spec_(std::move(spec)), d_(d), m_(m), params_(std::move(store)) {
    validate_store(params_, spec_, d_, m_);
  }

  const ModelSpec& spec() const { return spec_; }
  std::size_t feature_count() const { return d_; }
  std::size_t field_count() const { return m_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }

  // instance_offset shifts the per-instance dropout streams so that a shard
  // of a batch draws exactly the masks it would draw inside the full batch.
  ForwardResult forward(const Batch& batch, bool training,
                        std::uint64_t dropout_seed = 0,
                        std::uint64_t instance_offset = 0) const {
    ForwardResult result;
    result.training = training;
    result.logits.resize(batch.size());
    result.caches.resize(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const SparseInstance& inst = batch.instances[i];
      check_instance(inst);
      double logit = 0.0;
      if (spec_.has_wide()) logit += wide_forward(inst, result.caches[i]);
      if (spec_.has_deep()) {
        logit += deep_forward(inst, result.caches[i], training, dropout_seed,
                              instance_offset + i);
      }
      result.logits[i] = logit;
    }
    return result;
  }

  // Gradients are summed over the batch (no 1/bs factor); the caller owns
  // the loss scaling through dlogit.
  GradientSet backward(const Batch& batch, const ForwardResult& fwd,
                       std::span<const double> dlogit) const {
    if (dlogit.size() != batch.size()) {
      throw DimensionError("backward: dlogit size " + std::to_string(dlogit.size()) +
                           " vs batch " + std::to_string(batch.size()));
    }
    GradientSet grads = make_gradients(params_);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const double g = dlogit[i];
      if (g == 0.0) continue;
      const SparseInstance& inst = batch.instances[i];
      if (spec_.has_wide()) wide_backward(inst, fwd.caches[i], g, grads);
      if (spec_.has_deep()) deep_backward(inst, fwd.caches[i], g, grads);
    }
    for (const auto& inst : batch.instances) {
      grads.active_ids.insert(grads.active_ids.end(), inst.ids.begin(), inst.ids.end());
    }
    std::sort(grads.active_ids.begin(), grads.active_ids.end());
    grads.active_ids.erase(
        std::unique(grads.active_ids.begin(), grads.active_ids.end()),
        grads.active_ids.end());
    std::sort(grads.active_pairs.begin(), grads.active_pairs.end());
    grads.active_pairs.erase(
        std::unique(grads.active_pairs.begin(), grads.active_pairs.end()),
        grads.active_pairs.end());
    return grads;
  }

  std::vector<double> predict(const Batch& batch) const {
    ForwardResult fwd = forward(batch, /*training=*/false);
    std::vector<double> probs(fwd.logits.size());
    for (std::size_t i = 0; i < probs.size(); ++i) probs[i] = sigmoid(fwd.logits[i]);
    return probs;
  }

 private:
  void check_instance(const SparseInstance& inst) const {
    if (inst.ids.size() != m_ || inst.values.size() != m_) {
      throw DimensionError("instance has " + std::to_string(inst.ids.size()) +
                           " fields, model expects " + std::to_string(m_));
    }
    for (std::uint32_t id : inst.ids) {
      if (id >= d_) {
        throw IndexError("feature id " + std::to_string(id) + " out of range [0," +
                         std::to_string(d_) + ")");
      }
    }
  }

  const DenseMatrix& deep_table() const {
    return spec_.shared_embedding() ? params_.V : params_.V_deep;
  }

  // --- wide component -------------------------------------------------------

  double wide_forward(const SparseInstance& inst, InstanceCache& cache) const {
    double logit = params_.w0;
    for (std::size_t f = 0; f < m_; ++f) {
      logit += params_.w[inst.ids[f]] * inst.values[f];
    }
    switch (spec_.wide_kind()) {
      case WideKind::kPoly2:
        for (std::size_t i = 0; i < m_; ++i) {
          for (std::size_t j = i + 1; j < m_; ++j) {
            const auto slot =
                poly2_slot(inst.ids[i], inst.ids[j], spec_.poly2_table_size);
            logit += params_.pair_w[slot] * inst.values[i] * inst.values[j];
          }
        }
        break;
      case WideKind::kFm: {
        // O(k*m) via 0.5 * sum_f [ (sum_i v_if x_i)^2 - sum_i v_if^2 x_i^2 ]
        const std::size_t k = params_.V.cols();
        cache.fm_sum.assign(k, 0.0);
        double quad = 0.0;
        for (std::size_t f = 0; f < m_; ++f) {
          const double x = inst.values[f];
          const auto row = params_.V.row(inst.ids[f]);
          for (std::size_t j = 0; j < k; ++j) {
            cache.fm_sum[j] += x * row[j];
            quad -= x * x * row[j] * row[j];
          }
        }
        for (std::size_t j = 0; j < k; ++j) quad += cache.fm_sum[j] * cache.fm_sum[j];
        logit += 0.5 * quad;
        break;
      }
      default: break;
    }
    return logit;
  }

  void wide_backward(const SparseInstance& inst, const InstanceCache& cache, double g,
                     GradientSet& grads) const {
    grads.tensors.w0 += g;
    for (std::size_t f = 0; f < m_; ++f) {
      grads.tensors.w[inst.ids[f]] += g * inst.values[f];
    }
    switch (spec_.wide_kind()) {
      case WideKind::kPoly2:
        for (std::size_t i = 0; i < m_; ++i) {
          for (std::size_t j = i + 1; j < m_; ++j) {
            const auto slot =
                poly2_slot(inst.ids[i], inst.ids[j], spec_.poly2_table_size);
            grads.tensors.pair_w[slot] += g * inst.values[i] * inst.values[j];
            grads.active_pairs.push_back(slot);
          }
        }
        break;
      case WideKind::kFm: {
        const std::size_t k = params_.V.cols();
        for (std::size_t f = 0; f < m_; ++f) {
          const double x = inst.values[f];
          const auto row = params_.V.row(inst.ids[f]);
          auto grow = grads.tensors.V.row(inst.ids[f]);
          for (std::size_t j = 0; j < k; ++j) {
            grow[j] += g * (cache.fm_sum[j] * x - row[j] * x * x);
          }
        }
        break;
      }
      default: break;
    }
  }

  // --- deep component -------------------------------------------------------

  bool dropout_active(bool training) const {
    return training && spec_.keep_prob < 1.0;
  }

  double deep_forward(const SparseInstance& inst, InstanceCache& cache, bool training,
                      std::uint64_t dropout_seed, std::uint64_t instance_index) const {
    const DenseMatrix& table = deep_table();
    const std::size_t e = table.cols();
    cache.emb.resize(m_ * e);
    for (std::size_t f = 0; f < m_; ++f) {
      embed_field(table, inst.ids[f], inst.values[f],
                  std::span<double>(cache.emb).subspan(f * e, e));
    }

    const std::size_t num_hidden = spec_.hidden.size();
    const bool use_ln = spec_.use_layer_norm;
    const bool drop = dropout_active(training);
    cache.z.resize(num_hidden);
    cache.a.resize(num_hidden);
    if (use_ln) {
      cache.zn.resize(num_hidden);
      cache.ln.resize(num_hidden);
    }
    if (drop) cache.mask.resize(num_hidden);
    Rng inst_rng = Rng(dropout_seed).split(instance_index);

    const bool pnn = spec_.deep_kind() == DeepKind::kPnn;
    if (pnn) build_product(cache, e);

    const std::vector<double>* prev = &cache.emb;
    for (std::size_t l = 0; l < num_hidden; ++l) {
      const std::size_t width = static_cast<std::size_t>(spec_.hidden[l]);
      auto& z = cache.z[l];
      z.assign(width, 0.0);
      if (l == 0 && pnn) {
        affine(params_.prod_linear, cache.emb, params_.prod_bias, z);
        affine_add(params_.prod_quad, cache.p, z);
      } else {
        const DenseLayer& layer = params_.deep[pnn ? l - 1 : l];
        affine(layer.W, *prev, layer.b, z);
      }
      const std::vector<double>* pre = &z;
      if (use_ln) {
        cache.zn[l].resize(width);
        layer_norm(z, params_.ln[l].gain, params_.ln[l].bias, kLayerNormEpsilon,
                   cache.zn[l], &cache.ln[l]);
        pre = &cache.zn[l];
      }
      auto& a = cache.a[l];
      a.resize(width);
      activate(spec_.activation, *pre, a);
      if (drop) {
        Rng layer_rng = inst_rng.split(l);
        cache.mask[l] = dropout_mask(spec_.keep_prob, width, layer_rng);
        for (std::size_t j = 0; j < width; ++j) a[j] *= cache.mask[l][j];
      }
      prev = &a;
    }

    const DenseLayer& out = params_.deep.back();
    return out.b[0] + dot(out.W.row(0), *prev);
  }

  void deep_backward(const SparseInstance& inst, const InstanceCache& cache, double g,
                     GradientSet& grads) const {
    const std::size_t num_hidden = spec_.hidden.size();
    const bool use_ln = spec_.use_layer_norm;
    const bool pnn = spec_.deep_kind() == DeepKind::kPnn;
    const DenseMatrix& table = deep_table();
    const std::size_t e = table.cols();

    // scalar projection
    const DenseLayer& out = params_.deep.back();
    auto& gout = grads.tensors.deep.back();
    const std::vector<double>& last_a = cache.a[num_hidden - 1];
    axpy(g, last_a, gout.W.row(0));
    gout.b[0] += g;
    std::vector<double> da(last_a.size());
    for (std::size_t j = 0; j < da.size(); ++j) da[j] = g * out.W.row(0)[j];

    std::vector<double> dz;
    for (std::size_t l = num_hidden; l-- > 0;) {
      const std::size_t width = static_cast<std::size_t>(spec_.hidden[l]);
      if (!cache.mask.empty()) {
        for (std::size_t j = 0; j < width; ++j) da[j] *= cache.mask[l][j];
      }
      const std::vector<double>& pre = use_ln ? cache.zn[l] : cache.z[l];
      dz.assign(width, 0.0);
      for (std::size_t j = 0; j < width; ++j) {
        dz[j] = da[j] * activate_grad_scalar(spec_.activation, pre[j]);
      }
      if (use_ln) {
        std::vector<double> dx(width);
        layer_norm_backward(dz, params_.ln[l].gain, cache.ln[l], dx,
                            grads.tensors.ln[l].gain, grads.tensors.ln[l].bias);
        dz = std::move(dx);
      }
      if (l == 0) {
        std::vector<double> demb(m_ * e, 0.0);
        if (pnn) {
          affine_backward_params(dz, cache.emb, grads.tensors.prod_linear,
                                 grads.tensors.prod_bias);
          affine_backward_input(params_.prod_linear, dz, demb);
          std::vector<double> dp(cache.p.size(), 0.0);
          // dprod_quad += dz * p^T
          for (std::size_t r = 0; r < dz.size(); ++r) {
            axpy(dz[r], cache.p, grads.tensors.prod_quad.row(r));
          }
          affine_backward_input(params_.prod_quad, dz, dp);
          product_backward(cache, e, dp, demb);
        } else {
          affine_backward_params(dz, cache.emb, grads.tensors.deep[0].W,
                                 grads.tensors.deep[0].b);
          affine_backward_input(params_.deep[0].W, dz, demb);
        }
        auto& gtable = spec_.shared_embedding() ? grads.tensors.V : grads.tensors.V_deep;
        for (std::size_t f = 0; f < m_; ++f) {
          axpy(inst.values[f], std::span<const double>(demb).subspan(f * e, e),
               gtable.row(inst.ids[f]));
        }
      } else {
        const std::size_t idx = pnn ? l - 1 : l;
        affine_backward_params(dz, cache.a[l - 1], grads.tensors.deep[idx].W,
                               grads.tensors.deep[idx].b);
        std::vector<double> next_da(cache.a[l - 1].size(), 0.0);
        affine_backward_input(params_.deep[idx].W, dz, next_da);
        da = std::move(next_da);
      }
    }
  }

  // Quadratic neurons: all pairwise interactions of the field embeddings.
  // Layout for "both": inner block first, then the outer block.
  void build_product(InstanceCache& cache, std::size_t e) const {
    const ProductType type = spec_.product_type();
    cache.p.assign(product_dim(spec_, m_), 0.0);
    std::size_t idx = 0;
    if (type == ProductType::kInner || type == ProductType::kBoth) {
      for (std::size_t i = 0; i < m_; ++i) {
        for (std::size_t j = i + 1; j < m_; ++j) {
          cache.p[idx++] =
              dot(std::span<const double>(cache.emb).subspan(i * e, e),
                  std::span<const double>(cache.emb).subspan(j * e, e));
        }
      }
    }
    if (type == ProductType::kOuter || type == ProductType::kBoth) {
      if (spec_.exact_outer) {
        for (std::size_t i = 0; i < m_; ++i) {
          for (std::size_t j = i + 1; j < m_; ++j) {
            const auto ei = std::span<const double>(cache.emb).subspan(i * e, e);
            const auto ej = std::span<const double>(cache.emb).subspan(j * e, e);
            for (std::size_t r = 0; r < e; ++r) {
              for (std::size_t c = 0; c < e; ++c) cache.p[idx++] = ei[r] * ej[c];
            }
          }
        }
      } else {
        // outer product of the summed embedding vector with itself
        cache.emb_sum.assign(e, 0.0);
        for (std::size_t f = 0; f < m_; ++f) {
          axpy(1.0, std::span<const double>(cache.emb).subspan(f * e, e),
               std::span<double>(cache.emb_sum));
        }
        for (std::size_t r = 0; r < e; ++r) {
          for (std::size_t c = 0; c < e; ++c) {
            cache.p[idx++] = cache.emb_sum[r] * cache.emb_sum[c];
          }
        }
      }
    }
  }

  void product_backward(const InstanceCache& cache, std::size_t e,
                        std::span<const double> dp, std::span<double> demb) const {
    const ProductType type = spec_.product_type();
    std::size_t idx = 0;
    if (type == ProductType::kInner || type == ProductType::kBoth) {
      for (std::size_t i = 0; i < m_; ++i) {
        for (std::size_t j = i + 1; j < m_; ++j) {
          const double d = dp[idx++];
          const auto ei = std::span<const double>(cache.emb).subspan(i * e, e);
          const auto ej = std::span<const double>(cache.emb).subspan(j * e, e);
          axpy(d, ej, demb.subspan(i * e, e));
          axpy(d, ei, demb.subspan(j * e, e));
        }
      }
    }
    if (type == ProductType::kOuter || type == ProductType::kBoth) {
      if (spec_.exact_outer) {
        for (std::size_t i = 0; i < m_; ++i) {
          for (std::size_t j = i + 1; j < m_; ++j) {
            const auto ei = std::span<const double>(cache.emb).subspan(i * e, e);
            const auto ej = std::span<const double>(cache.emb).subspan(j * e, e);
            auto di = demb.subspan(i * e, e);
            auto dj = demb.subspan(j * e, e);
            for (std::size_t r = 0; r < e; ++r) {
              for (std::size_t c = 0; c < e; ++c) {
                const double d = dp[idx++];
                di[r] += d * ej[c];
                dj[c] += d * ei[r];
              }
            }
          }
        }
      } else {
        std::vector<double> ds(e, 0.0);
        for (std::size_t r = 0; r < e; ++r) {
          for (std::size_t c = 0; c < e; ++c) {
            const double d = dp[idx++];
            ds[r] += d * cache.emb_sum[c];
            ds[c] += d * cache.emb_sum[r];
          }
        }
        for (std::size_t f = 0; f < m_; ++f) {
          axpy(1.0, std::span<const double>(ds), demb.subspan(f * e, e));
        }
      }
    }
  }

  static void affine_add(const DenseMatrix& W, std::span<const double> x,
                         std::span<double> out) {
    if (W.cols() != x.size() || W.rows() != out.size()) {
      throw DimensionError("affine_add shape mismatch: W " + W.shape_str() + ", x " +
                           std::to_string(x.size()));
    }
    for (std::size_t r = 0; r < W.rows(); ++r) out[r] += dot(W.row(r), x);
  }

  static constexpr double kLayerNormEpsilon = 1e-6;

  ModelSpec spec_;
  std::size_t d_;
  std::size_t m_;
  ParameterStore params_;
};

// FNN starts from a trained FM: each embedding row becomes [V_i ; w_i]
// (width k+1), so the deep net begins where the factorization left off.
inline Model pretrain_fnn(const Model& fm, ModelSpec fnn_spec, std::uint64_t seed) {
  if (fm.spec().kind != ModelKind::kFm) {
    throw ConfigError("pretrain_fnn requires a trained fm model");
  }
  if (fnn_spec.kind != ModelKind::kFnn) {
    throw ConfigError("pretrain_fnn target spec must be fnn");
  }
  if (fnn_spec.k != fm.spec().k) {
    throw DimensionError("pretrain_fnn: fnn k=" + std::to_string(fnn_spec.k) +
                         " does not match fm k=" + std::to_string(fm.spec().k));
  }
  Model fnn(fnn_spec, fm.feature_count(), fm.field_count(), seed);
  const std::size_t k = static_cast<std::size_t>(fm.spec().k);
  const DenseMatrix& v = fm.params().V;
  DenseMatrix& target = fnn.params().V_deep;
  for (std::size_t i = 0; i < fm.feature_count(); ++i) {
    for (std::size_t j = 0; j < k; ++j) target(i, j) = v(i, j);
    target(i, k) = fm.params().w[i];
  }
  return fnn;
}

}  // namespace deepctr
