#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "deepctr/errors.hpp"
#include "deepctr/parameters.hpp"

namespace deepctr {

enum class OptimizerKind { kAdam, kFtrl };

inline std::string to_string(OptimizerKind k) {
  return k == OptimizerKind::kAdam ? "adam" : "ftrl";
}

inline OptimizerKind optimizer_kind_from_string(const std::string& s) {
  if (s == "adam") return OptimizerKind::kAdam;
  if (s == "ftrl") return OptimizerKind::kFtrl;
  throw ConfigError("unknown optimizer: " + s);
}

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct FtrlConfig {
  double alpha = 0.1;
  double beta = 1.0;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
};

// With P workers each consuming a full batch per step, the mini-batch
// gradient variance drops by the effective batch growth, so the learning
// rate can grow by its square root.
inline double scaled_lr(double lr, int workers, double bs_ratio = 1.0) {
  if (workers < 1) throw ConfigError("worker count must be >= 1");
  return lr * std::sqrt(static_cast<double>(workers) * bs_ratio);
}

// Adam with sparse-aware embedding updates: rows of w / V / V_deep (and
// poly2 slots) are only touched when the batch touched them, and the moment
// accumulators of untouched rows are not decayed. This deviates from dense
// Adam on purpose; dense tensors get the textbook update every step.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(AdamConfig cfg) : cfg_(cfg) {}

  AdamConfig& config() { return cfg_; }
  const AdamConfig& config() const { return cfg_; }
  std::int64_t step_count() const { return step_; }

  void step(ParameterStore& store, const GradientSet& grads) {
    std::vector<TensorRef> params;
    std::vector<ConstTensorRef> gradient;
    for_each_tensor(store, [&params](const TensorRef& t) { params.push_back(t); });
    for_each_tensor(grads.tensors,
                    [&gradient](const ConstTensorRef& t) { gradient.push_back(t); });
    if (params.size() != gradient.size()) {
      throw DimensionError("gradient set does not mirror the parameter store");
    }
    if (m_.empty()) {
      m_.resize(params.size());
      v_.resize(params.size());
      for (std::size_t t = 0; t < params.size(); ++t) {
        m_[t].assign(params[t].size, 0.0);
        v_[t].assign(params[t].size, 0.0);
      }
    }
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));

    for (std::size_t t = 0; t < params.size(); ++t) {
      const TensorRef& p = params[t];
      const ConstTensorRef& g = gradient[t];
      if (p.size != g.size) {
        throw DimensionError("tensor '" + p.name + "' shape mismatch in adam step");
      }
      auto update_entry = [&](std::size_t i) {
        const double gi = g.data[i];
        double& mi = m_[t][i];
        double& vi = v_[t][i];
        mi = cfg_.beta1 * mi + (1.0 - cfg_.beta1) * gi;
        vi = cfg_.beta2 * vi + (1.0 - cfg_.beta2) * gi * gi;
        p.data[i] -= cfg_.lr * (mi / bc1) / (std::sqrt(vi / bc2) + cfg_.epsilon);
      };
      switch (p.sparse) {
        case SparsePattern::kDense:
          for (std::size_t i = 0; i < p.size; ++i) update_entry(i);
          break;
        case SparsePattern::kFeatureRows:
          for (std::uint32_t row : grads.active_ids) {
            const std::size_t base = static_cast<std::size_t>(row) * p.row_width;
            for (std::size_t j = 0; j < p.row_width; ++j) update_entry(base + j);
          }
          break;
        case SparsePattern::kPairEntries:
          for (std::uint64_t slot : grads.active_pairs) update_entry(slot);
          break;
      }
    }
  }

 private:
  AdamConfig cfg_;
  std::int64_t step_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

// Per-coordinate FTRL-Proximal with L1/L2, for the order-1 weights of LR
// (w and the bias w0).
class FtrlOptimizer {
 public:
  explicit FtrlOptimizer(FtrlConfig cfg) : cfg_(cfg) {}

  FtrlConfig& config() { return cfg_; }

  void step(ParameterStore& store, const GradientSet& grads) {
    if (!store.V.empty() || !store.V_deep.empty() || !store.deep.empty() ||
        !store.pair_w.empty()) {
      throw ConfigError("ftrl applies to the pure linear model only");
    }
    if (z_.empty()) {
      z_.assign(store.w.size() + 1, 0.0);  // [w..., w0]
      n_.assign(store.w.size() + 1, 0.0);
    }
    for (std::uint32_t id : grads.active_ids) {
      update_coord(store.w[id], grads.tensors.w[id], id);
    }
    update_coord(store.w0, grads.tensors.w0, store.w.size());
  }

 private:
  void update_coord(double& weight, double g, std::size_t i) {
    const double sigma = (std::sqrt(n_[i] + g * g) - std::sqrt(n_[i])) / cfg_.alpha;
    z_[i] += g - sigma * weight;
    n_[i] += g * g;
    const double sgn = z_[i] < 0.0 ? -1.0 : 1.0;
    if (std::abs(z_[i]) <= cfg_.lambda1) {
      weight = 0.0;
    } else {
      weight = -(z_[i] - sgn * cfg_.lambda1) /
               ((cfg_.beta + std::sqrt(n_[i])) / cfg_.alpha + cfg_.lambda2);
    }
  }

  FtrlConfig cfg_;
  std::vector<double> z_;
  std::vector<double> n_;
};

// Uniform front over the two update rules.
class Optimizer {
 public:
  static Optimizer adam(AdamConfig cfg) { return Optimizer(cfg); }
  static Optimizer ftrl(FtrlConfig cfg) { return Optimizer(cfg); }

  OptimizerKind kind() const { return kind_; }

  void step(ParameterStore& store, const GradientSet& grads) {
    if (kind_ == OptimizerKind::kAdam) {
      adam_.step(store, grads);
    } else {
      ftrl_.step(store, grads);
    }
  }

  void set_lr(double lr) {
    if (kind_ == OptimizerKind::kAdam) adam_.config().lr = lr;
  }

  double lr() const { return kind_ == OptimizerKind::kAdam ? adam_.config().lr : 0.0; }

 private:
  explicit Optimizer(AdamConfig cfg) : kind_(OptimizerKind::kAdam), adam_(cfg), ftrl_(FtrlConfig{}) {}
  explicit Optimizer(FtrlConfig cfg) : kind_(OptimizerKind::kFtrl), adam_(AdamConfig{}), ftrl_(cfg) {}

  OptimizerKind kind_;
  AdamOptimizer adam_;
  FtrlOptimizer ftrl_;
};

}  // namespace deepctr
