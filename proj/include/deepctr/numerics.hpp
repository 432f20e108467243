#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "deepctr/errors.hpp"
#include "deepctr/rng.hpp"
#include "deepctr/tensor.hpp"

namespace deepctr {

enum class Activation { kRelu, kTanh, kSigmoid, kIdentity };

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kIdentity: return "identity";
  }
  return "?";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "tanh") return Activation::kTanh;
  if (s == "sigmoid") return Activation::kSigmoid;
  if (s == "identity") return Activation::kIdentity;
  throw ConfigError("unknown activation: " + s);
}

// Exponent argument clamp; keeps exp() finite well below the 64-bit
// saturation point.
inline constexpr double kSigmoidClamp = 40.0;

inline double sigmoid(double z) {
  if (z > kSigmoidClamp) z = kSigmoidClamp;
  if (z < -kSigmoidClamp) z = -kSigmoidClamp;
  return 1.0 / (1.0 + std::exp(-z));
}

inline double activate_scalar(Activation kind, double z) {
  switch (kind) {
    case Activation::kRelu: return z > 0.0 ? z : 0.0;
    case Activation::kTanh: return std::tanh(z);
    case Activation::kSigmoid: return sigmoid(z);
    case Activation::kIdentity: return z;
  }
  return z;
}

// Derivative with respect to the pre-activation z.
inline double activate_grad_scalar(Activation kind, double z) {
  switch (kind) {
    case Activation::kRelu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::kTanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::kSigmoid: {
      const double s = sigmoid(z);
      return s * (1.0 - s);
    }
    case Activation::kIdentity: return 1.0;
  }
  return 1.0;
}

inline void activate(Activation kind, std::span<const double> z, std::span<double> out) {
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = activate_scalar(kind, z[i]);
}

inline void activate_grad(Activation kind, std::span<const double> z,
                          std::span<double> out) {
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = activate_grad_scalar(kind, z[i]);
}

// out = W * a + b
inline void affine(const DenseMatrix& W, std::span<const double> a,
                   std::span<const double> b, std::span<double> out) {
  if (W.cols() != a.size() || W.rows() != b.size() || W.rows() != out.size()) {
    throw DimensionError("affine shape mismatch: W " + W.shape_str() + ", a " +
                         std::to_string(a.size()) + ", b " + std::to_string(b.size()));
  }
  for (std::size_t r = 0; r < W.rows(); ++r) {
    out[r] = b[r] + dot(W.row(r), a);
  }
}

// da += W^T * dz
inline void affine_backward_input(const DenseMatrix& W, std::span<const double> dz,
                                  std::span<double> da) {
  if (W.rows() != dz.size() || W.cols() != da.size()) {
    throw DimensionError("affine backward shape mismatch: W " + W.shape_str() +
                         ", dz " + std::to_string(dz.size()));
  }
  for (std::size_t r = 0; r < W.rows(); ++r) {
    axpy(dz[r], W.row(r), da);
  }
}

// dW += dz * a^T, db += dz
inline void affine_backward_params(std::span<const double> dz, std::span<const double> a,
                                   DenseMatrix& dW, std::span<double> db) {
  for (std::size_t r = 0; r < dz.size(); ++r) {
    axpy(dz[r], a, dW.row(r));
    db[r] += dz[r];
  }
}

// Inverted-scaling dropout mask: entries are 1/keep_prob with probability
// keep_prob, else 0. keep_prob == 1 yields an exact all-ones mask so
// inference needs no special path.
inline std::vector<double> dropout_mask(double keep_prob, std::size_t size, Rng& rng) {
  if (!(keep_prob > 0.0) || keep_prob > 1.0) {
    throw ConfigError("dropout keep_prob must be in (0,1], got " +
                      std::to_string(keep_prob));
  }
  std::vector<double> mask(size, 1.0);
  if (keep_prob == 1.0) return mask;
  const double scale = 1.0 / keep_prob;
  for (auto& m : mask) m = rng.bernoulli(keep_prob) ? scale : 0.0;
  return mask;
}

// Per-record normalization of a layer's summed inputs: gain * (x - mean) /
// sqrt(var + eps) + bias, with population variance over the layer.
struct LayerNormCache {
  std::vector<double> x_hat;  // normalized pre-gain values
  double inv_std = 0.0;
};

inline void layer_norm(std::span<const double> x, std::span<const double> gain,
                       std::span<const double> bias, double epsilon,
                       std::span<double> out, LayerNormCache* cache = nullptr) {
  if (gain.size() != x.size() || bias.size() != x.size()) {
    throw DimensionError("layer_norm gain/bias size " + std::to_string(gain.size()) +
                         " vs input " + std::to_string(x.size()));
  }
  const std::size_t n = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  const double inv_std = 1.0 / std::sqrt(var + epsilon);
  if (cache != nullptr) {
    cache->x_hat.resize(n);
    cache->inv_std = inv_std;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double xh = (x[i] - mean) * inv_std;
    if (cache != nullptr) cache->x_hat[i] = xh;
    out[i] = gain[i] * xh + bias[i];
  }
}

// Backward through layer_norm. Accumulates dgain/dbias, writes dx.
inline void layer_norm_backward(std::span<const double> dout,
                                std::span<const double> gain,
                                const LayerNormCache& cache, std::span<double> dx,
                                std::span<double> dgain, std::span<double> dbias) {
  const std::size_t n = dout.size();
  std::vector<double> dxhat(n);
  double mean_dxhat = 0.0;
  double mean_dxhat_xhat = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dgain[i] += dout[i] * cache.x_hat[i];
    dbias[i] += dout[i];
    dxhat[i] = dout[i] * gain[i];
    mean_dxhat += dxhat[i];
    mean_dxhat_xhat += dxhat[i] * cache.x_hat[i];
  }
  mean_dxhat /= static_cast<double>(n);
  mean_dxhat_xhat /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    dx[i] = cache.inv_std * (dxhat[i] - mean_dxhat - cache.x_hat[i] * mean_dxhat_xhat);
  }
}

}  // namespace deepctr
