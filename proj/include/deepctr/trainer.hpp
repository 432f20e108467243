#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <thread>
#include <vector>

#include <json.hpp>

#include "deepctr/async_reader.hpp"
#include "deepctr/dataio.hpp"
#include "deepctr/loss.hpp"
#include "deepctr/model.hpp"
#include "deepctr/optimizer.hpp"

namespace deepctr {

struct TrainConfig {
  std::size_t bs = 256;
  double lr = 0.001;
  int epochs = 1;
  double l2_fm = 0.0;
  int workers = 1;
  bool lr_scale_on_parallel = false;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  bool shuffle = true;
  bool async_read = false;
  std::size_t queue_capacity = 8;
  FtrlConfig ftrl;

  void validate() const {
    if (bs == 0) throw ConfigError("batch size must be >= 1");
    if (!(lr > 0.0)) throw ConfigError("learning rate must be > 0");
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (l2_fm < 0.0) throw ConfigError("l2_fm must be >= 0");
    if (workers < 1) throw ConfigError("workers must be >= 1");
  }

  nlohmann::json to_json() const {
    return nlohmann::json{{"bs", bs},
                          {"lr", lr},
                          {"epochs", epochs},
                          {"l2_fm", l2_fm},
                          {"workers", workers},
                          {"lr_scale_on_parallel", lr_scale_on_parallel},
                          {"seed", seed},
                          {"optimizer", to_string(optimizer)},
                          {"shuffle", shuffle},
                          {"async_read", async_read},
                          {"queue_capacity", queue_capacity}};
  }

  static TrainConfig from_json(const nlohmann::json& j) {
    TrainConfig cfg;
    cfg.bs = j.value("bs", std::size_t(256));
    cfg.lr = j.value("lr", 0.001);
    cfg.epochs = j.value("epochs", 1);
    cfg.l2_fm = j.value("l2_fm", 0.0);
    cfg.workers = j.value("workers", 1);
    cfg.lr_scale_on_parallel = j.value("lr_scale_on_parallel", false);
    cfg.seed = j.value("seed", std::uint64_t(0));
    cfg.optimizer =
        optimizer_kind_from_string(j.value("optimizer", std::string("adam")));
    cfg.shuffle = j.value("shuffle", true);
    cfg.async_read = j.value("async_read", false);
    cfg.queue_capacity = j.value("queue_capacity", std::size_t(8));
    if (j.contains("ftrl")) {
      const auto& jf = j.at("ftrl");
      cfg.ftrl.alpha = jf.value("alpha", cfg.ftrl.alpha);
      cfg.ftrl.beta = jf.value("beta", cfg.ftrl.beta);
      cfg.ftrl.lambda1 = jf.value("lambda1", cfg.ftrl.lambda1);
      cfg.ftrl.lambda2 = jf.value("lambda2", cfg.ftrl.lambda2);
    }
    cfg.validate();
    return cfg;
  }
};

// FTRL goes with LR; everything else trains with Adam.
inline Optimizer make_optimizer(const TrainConfig& cfg, const ModelSpec& spec) {
  const double lr = cfg.lr_scale_on_parallel ? scaled_lr(cfg.lr, cfg.workers) : cfg.lr;
  if (cfg.optimizer == OptimizerKind::kFtrl) {
    if (spec.kind != ModelKind::kLr) {
      throw ConfigError("ftrl optimizer applies to the lr model only");
    }
    return Optimizer::ftrl(cfg.ftrl);
  }
  AdamConfig adam;
  adam.lr = lr;
  return Optimizer::adam(adam);
}

// L2 on the FM-side parameters only (the deep side is regularized by
// dropout): grads.w += l2*w and grads.V += l2*V on the rows the batch
// touched. Expects grads already scaled to mean-loss gradients.
inline void regularize(GradientSet& grads, const ParameterStore& store, double l2_fm) {
  if (l2_fm < 0.0) throw ConfigError("l2_fm must be >= 0");
  if (l2_fm == 0.0) return;
  for (std::uint32_t id : grads.active_ids) {
    if (!store.w.empty()) grads.tensors.w[id] += l2_fm * store.w[id];
    if (!store.V.empty()) {
      axpy(l2_fm, store.V.row(id), grads.tensors.V.row(id));
    }
  }
}

// Contiguous shard sizes; the remainder goes to the last worker.
inline std::vector<std::size_t> shard_sizes(std::size_t bs, int workers) {
  const std::size_t p = static_cast<std::size_t>(workers);
  std::vector<std::size_t> sizes(p, bs / p);
  sizes.back() += bs % p;
  return sizes;
}

namespace detail {

// acc += g, touching only the entries g actually filled.
inline void accumulate_grads(GradientSet& acc, const GradientSet& g) {
  std::vector<TensorRef> at;
  std::vector<ConstTensorRef> gt;
  for_each_tensor(acc.tensors, [&at](const TensorRef& t) { at.push_back(t); });
  for_each_tensor(g.tensors, [&gt](const ConstTensorRef& t) { gt.push_back(t); });
  for (std::size_t t = 0; t < at.size(); ++t) {
    switch (at[t].sparse) {
      case SparsePattern::kDense:
        for (std::size_t i = 0; i < at[t].size; ++i) at[t].data[i] += gt[t].data[i];
        break;
      case SparsePattern::kFeatureRows:
        for (std::uint32_t row : g.active_ids) {
          const std::size_t base = static_cast<std::size_t>(row) * at[t].row_width;
          for (std::size_t j = 0; j < at[t].row_width; ++j) {
            at[t].data[base + j] += gt[t].data[base + j];
          }
        }
        break;
      case SparsePattern::kPairEntries:
        for (std::uint64_t slot : g.active_pairs) at[t].data[slot] += gt[t].data[slot];
        break;
    }
  }
  acc.active_ids.insert(acc.active_ids.end(), g.active_ids.begin(), g.active_ids.end());
  acc.active_pairs.insert(acc.active_pairs.end(), g.active_pairs.begin(),
                          g.active_pairs.end());
}

inline void dedupe_active(GradientSet& g) {
  std::sort(g.active_ids.begin(), g.active_ids.end());
  g.active_ids.erase(std::unique(g.active_ids.begin(), g.active_ids.end()),
                     g.active_ids.end());
  std::sort(g.active_pairs.begin(), g.active_pairs.end());
  g.active_pairs.erase(std::unique(g.active_pairs.begin(), g.active_pairs.end()),
                       g.active_pairs.end());
}

inline void scale_grads(GradientSet& g, double factor) {
  std::vector<TensorRef> ts;
  for_each_tensor(g.tensors, [&ts](const TensorRef& t) { ts.push_back(t); });
  for (const TensorRef& t : ts) {
    switch (t.sparse) {
      case SparsePattern::kDense:
        for (std::size_t i = 0; i < t.size; ++i) t.data[i] *= factor;
        break;
      case SparsePattern::kFeatureRows:
        for (std::uint32_t row : g.active_ids) {
          const std::size_t base = static_cast<std::size_t>(row) * t.row_width;
          for (std::size_t j = 0; j < t.row_width; ++j) t.data[base + j] *= factor;
        }
        break;
      case SparsePattern::kPairEntries:
        for (std::uint64_t slot : g.active_pairs) t.data[slot] *= factor;
        break;
    }
  }
}

struct ShardResult {
  GradientSet grads;
  double loss_sum = 0.0;
};

inline ShardResult run_shard(const Model& model, const Batch& shard,
                             std::uint64_t dropout_seed, std::uint64_t offset) {
  ShardResult result;
  ForwardResult fwd = model.forward(shard, /*training=*/true, dropout_seed, offset);
  std::vector<double> dlogit(shard.size());
  for (std::size_t i = 0; i < shard.size(); ++i) {
    const double p = sigmoid(fwd.logits[i]);
    const int y = shard.instances[i].label;
    result.loss_sum += logloss(y, p);
    dlogit[i] = loss_grad(y, p);
  }
  result.grads = model.backward(shard, fwd, dlogit);
  return result;
}

}  // namespace detail

struct BatchGradient {
  GradientSet grads;  // gradient of the mean batch loss
  double mean_loss = 0.0;
};

// Gradient of the mean batch loss, computed by P workers over contiguous
// shards (a frozen parameter snapshot, worker-private gradient buffers).
// Shard gradients are summed in worker-index order and divided once by the
// batch size, so the result is the plain full-batch gradient up to
// floating-point summation order.
inline BatchGradient compute_batch_gradient(const Model& model, const Batch& batch,
                                            int workers, std::uint64_t dropout_seed) {
  if (workers < 1) throw ConfigError("workers must be >= 1");
  const std::vector<std::size_t> sizes = shard_sizes(batch.size(), workers);
  std::vector<detail::ShardResult> results(workers);

  if (workers == 1) {
    results[0] = detail::run_shard(model, batch, dropout_seed, 0);
  } else {
    std::vector<std::thread> threads;
    threads.reserve(workers);
    std::size_t offset = 0;
    for (int p = 0; p < workers; ++p) {
      const std::size_t begin = offset;
      const std::size_t count = sizes[static_cast<std::size_t>(p)];
      offset += count;
      threads.emplace_back([&model, &batch, &results, p, begin, count, dropout_seed] {
        Batch shard;
        shard.instances.assign(batch.instances.begin() + static_cast<std::ptrdiff_t>(begin),
                               batch.instances.begin() +
                                   static_cast<std::ptrdiff_t>(begin + count));
        results[static_cast<std::size_t>(p)] =
            detail::run_shard(model, shard, dropout_seed, begin);
      });
    }
    for (auto& t : threads) t.join();
  }

  BatchGradient out;
  out.grads = std::move(results[0].grads);
  double loss_sum = results[0].loss_sum;
  for (int p = 1; p < workers; ++p) {
    detail::accumulate_grads(out.grads, results[static_cast<std::size_t>(p)].grads);
    loss_sum += results[static_cast<std::size_t>(p)].loss_sum;
  }
  detail::dedupe_active(out.grads);
  detail::scale_grads(out.grads, 1.0 / static_cast<double>(batch.size()));
  out.mean_loss = loss_sum / static_cast<double>(batch.size());
  return out;
}

struct StepOutcome {
  double mean_loss = 0.0;
};

inline StepOutcome parallel_train_step(Model& model, Optimizer& optimizer,
                                       const Batch& batch, const TrainConfig& cfg,
                                       std::uint64_t dropout_seed) {
  BatchGradient bg = compute_batch_gradient(model, batch, cfg.workers, dropout_seed);
  regularize(bg.grads, model.params(), cfg.l2_fm);
  optimizer.step(model.params(), bg.grads);
  return StepOutcome{bg.mean_loss};
}

struct StepLog {
  std::size_t step = 0;
  int epoch = 0;
  double mean_loss = 0.0;
  double wall_time_s = 0.0;

  nlohmann::json to_json() const {
    return nlohmann::json{{"step", step},
                          {"epoch", epoch},
                          {"mean_loss", mean_loss},
                          {"wall_time", wall_time_s}};
  }
};

// One full pass over the data: forward, loss, backward, regularize,
// optimizer step per batch. Aborts with diagnostics on a non-finite loss.
inline std::vector<StepLog> train_epoch(Model& model, Optimizer& optimizer,
                                        const std::vector<SparseInstance>& data,
                                        const TrainConfig& cfg, int epoch,
                                        std::size_t* step_counter = nullptr) {
  cfg.validate();
  const std::uint64_t epoch_seed =
      Rng(cfg.seed).split(0x45504F43).split(static_cast<std::uint64_t>(epoch)).next_u64();
  MemoryBatchSource base(data, cfg.bs, cfg.shuffle, epoch_seed);
  std::optional<AsyncBatchReader> async;
  BatchSource* source = &base;
  if (cfg.async_read) {
    async.emplace(base, cfg.queue_capacity);
    source = &*async;
  }

  std::vector<StepLog> log;
  std::size_t local_step = 0;
  const auto t0 = std::chrono::steady_clock::now();
  while (auto batch = source->next()) {
    const std::size_t step = step_counter != nullptr ? (*step_counter)++ : local_step;
    const std::uint64_t dropout_seed = Rng(cfg.seed)
                                           .split(0x44524F50)
                                           .split(static_cast<std::uint64_t>(epoch))
                                           .split(step)
                                           .next_u64();
    const StepOutcome outcome =
        parallel_train_step(model, optimizer, *batch, cfg, dropout_seed);
    if (!std::isfinite(outcome.mean_loss)) {
      throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) +
                           ", step " + std::to_string(step) + " (model " +
                           to_string(model.spec().kind) + ")");
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log.push_back(StepLog{step, epoch, outcome.mean_loss, elapsed});
    ++local_step;
  }
  return log;
}

}  // namespace deepctr
