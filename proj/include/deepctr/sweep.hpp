#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "deepctr/metrics.hpp"
#include "deepctr/model.hpp"
#include "deepctr/trainer.hpp"

namespace deepctr {

enum class SweepAxisKind {
  kActivation,
  kDropout,
  kNeuronsPerLayer,
  kHiddenLayers,
  kNetworkShape,
};

inline std::string to_string(SweepAxisKind a) {
  switch (a) {
    case SweepAxisKind::kActivation: return "activation";
    case SweepAxisKind::kDropout: return "dropout";
    case SweepAxisKind::kNeuronsPerLayer: return "neurons_per_layer";
    case SweepAxisKind::kHiddenLayers: return "hidden_layers";
    case SweepAxisKind::kNetworkShape: return "network_shape";
  }
  return "?";
}

inline SweepAxisKind sweep_axis_from_string(const std::string& s) {
  if (s == "activation") return SweepAxisKind::kActivation;
  if (s == "dropout") return SweepAxisKind::kDropout;
  if (s == "neurons_per_layer") return SweepAxisKind::kNeuronsPerLayer;
  if (s == "hidden_layers") return SweepAxisKind::kHiddenLayers;
  if (s == "network_shape") return SweepAxisKind::kNetworkShape;
  throw ConfigError("unknown sweep axis: " + s);
}

enum class NetworkShape { kConstant, kIncreasing, kDecreasing, kDiamond };

inline std::string to_string(NetworkShape s) {
  switch (s) {
    case NetworkShape::kConstant: return "constant";
    case NetworkShape::kIncreasing: return "increasing";
    case NetworkShape::kDecreasing: return "decreasing";
    case NetworkShape::kDiamond: return "diamond";
  }
  return "?";
}

inline NetworkShape network_shape_from_string(const std::string& s) {
  if (s == "constant") return NetworkShape::kConstant;
  if (s == "increasing") return NetworkShape::kIncreasing;
  if (s == "decreasing") return NetworkShape::kDecreasing;
  if (s == "diamond") return NetworkShape::kDiamond;
  throw ConfigError("unknown network shape: " + s);
}

// Redistributes a fixed neuron budget over a fixed layer count. Ideal
// proportions per shape (constant 1:1:..., increasing 1:2:...:L, decreasing
// reversed, diamond a tent peaking in the middle) are floored and the
// leftover units go to the middle layer, so the total is preserved exactly.
inline std::vector<int> shape_layout(NetworkShape shape, int layers, int total_neurons) {
  if (layers < 1) throw ConfigError("shape_layout requires >= 1 layer");
  if (total_neurons < layers) {
    throw ConfigError("shape_layout requires at least one neuron per layer");
  }
  std::vector<double> weight(static_cast<std::size_t>(layers));
  for (int i = 0; i < layers; ++i) {
    switch (shape) {
      case NetworkShape::kConstant: weight[i] = 1.0; break;
      case NetworkShape::kIncreasing: weight[i] = static_cast<double>(i + 1); break;
      case NetworkShape::kDecreasing: weight[i] = static_cast<double>(layers - i); break;
      case NetworkShape::kDiamond:
        weight[i] = 1.0 + static_cast<double>(std::min(i, layers - 1 - i));
        break;
    }
  }
  double wsum = 0.0;
  for (double w : weight) wsum += w;

  std::vector<int> widths(static_cast<std::size_t>(layers));
  int assigned = 0;
  for (int i = 0; i < layers; ++i) {
    widths[i] = static_cast<int>(total_neurons * weight[i] / wsum);
    if (widths[i] < 1) widths[i] = 1;
    assigned += widths[i];
  }
  widths[static_cast<std::size_t>(layers / 2)] += total_neurons - assigned;
  return widths;
}

struct SweepAxis {
  SweepAxisKind kind = SweepAxisKind::kDropout;
  // One entry per cell. Numeric axes use doubles; activation and shape axes
  // use names.
  std::vector<double> numeric_values;
  std::vector<std::string> name_values;
  int shape_layers = 0;        // network_shape axis
  int shape_total_neurons = 0;

  std::size_t cell_count() const {
    return numeric_values.empty() ? name_values.size() : numeric_values.size();
  }
};

struct SweepRow {
  std::string axis_value;
  double auc = 0.0;
  double logloss = 0.0;
  double wall_time_s = 0.0;
};

inline ModelSpec apply_axis_value(const ModelSpec& base, const SweepAxis& axis,
                                  std::size_t cell) {
  ModelSpec spec = base;
  switch (axis.kind) {
    case SweepAxisKind::kActivation:
      spec.activation = activation_from_string(axis.name_values[cell]);
      break;
    case SweepAxisKind::kDropout:
      spec.keep_prob = axis.numeric_values[cell];
      break;
    case SweepAxisKind::kNeuronsPerLayer: {
      const int width = static_cast<int>(axis.numeric_values[cell]);
      spec.hidden.assign(spec.hidden.size(), width);
      break;
    }
    case SweepAxisKind::kHiddenLayers: {
      const int layers = static_cast<int>(axis.numeric_values[cell]);
      if (layers < 1) throw ConfigError("hidden_layers axis values must be >= 1");
      const int width = base.hidden.empty() ? 0 : base.hidden[0];
      spec.hidden.assign(static_cast<std::size_t>(layers), width);
      break;
    }
    case SweepAxisKind::kNetworkShape:
      spec.hidden = shape_layout(network_shape_from_string(axis.name_values[cell]),
                                 axis.shape_layers, axis.shape_total_neurons);
      break;
  }
  spec.validate();
  return spec;
}

inline std::string axis_value_label(const SweepAxis& axis, std::size_t cell) {
  if (!axis.name_values.empty()) return axis.name_values[cell];
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", axis.numeric_values[cell]);
  return buf;
}

// Trains one model per axis value under a fixed seed and epoch budget and
// reports test AUC / Logloss per cell. Deep axes are rejected for models
// without a deep component.
inline std::vector<SweepRow> sweep(const ModelSpec& base_spec, const SweepAxis& axis,
                                   const TrainConfig& train_cfg,
                                   const std::vector<SparseInstance>& train_data,
                                   const std::vector<SparseInstance>& test_data,
                                   std::size_t d, std::size_t m) {
  if (!base_spec.has_deep()) {
    throw ConfigError("sweep axis '" + to_string(axis.kind) +
                      "' does not apply to model '" + to_string(base_spec.kind) + "'");
  }
  if (axis.cell_count() == 0) throw ConfigError("sweep axis has no values");

  std::vector<SweepRow> rows;
  for (std::size_t cell = 0; cell < axis.cell_count(); ++cell) {
    const ModelSpec spec = apply_axis_value(base_spec, axis, cell);
    const auto t0 = std::chrono::steady_clock::now();
    Model model(spec, d, m, train_cfg.seed);
    Optimizer opt = make_optimizer(train_cfg, spec);
    std::size_t step = 0;
    for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
      train_epoch(model, opt, train_data, train_cfg, epoch, &step);
    }
    ScoredSet scored;
    scored.reserve(test_data.size());
    Batch all{test_data};
    const auto probs = model.predict(all);
    for (std::size_t i = 0; i < test_data.size(); ++i) {
      scored.push_back(ScoredPair{probs[i], test_data[i].label});
    }
    SweepRow row;
    row.axis_value = axis_value_label(axis, cell);
    row.auc = auc(scored);
    row.logloss = dataset_logloss(scored);
    row.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace deepctr
