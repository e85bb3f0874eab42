#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "gran/dataset.hpp"
#include "gran/model.hpp"
#include "gran/rng.hpp"

namespace gran {

struct TrainConfig {
  int epochs = 4;
  double lr = 0.05;
  double momentum = 0.9;
  int batch = 32;
  uint64_t seed = 0;
  int log_every = 200;  // batches between log lines; 0 silences logging
};

struct TrainStats {
  double final_train_accuracy = 0.0;
  double final_test_accuracy = 0.0;
  int steps = 0;
  std::vector<double> logged_losses;
};

inline double accuracy(const Model& model, const Dataset& data) {
  if (data.empty()) return 0.0;
  size_t hits = 0;
  for (const auto& item : data.items) {
    if (model.predict(item.pixels).label == item.label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

// Plain SGD with momentum on softmax cross-entropy. Single-threaded and
// deterministic for a given seed: the per-epoch shuffle and the per-sample
// gradient accumulation both run in a fixed order. A non-finite batch loss
// aborts with the offending step index.
inline TrainStats train(Model& model, const Dataset& train_set, const Dataset& test_set,
                        const TrainConfig& cfg) {
  if (train_set.empty()) throw UsageError("train: empty training set");
  Rng rng(cfg.seed);
  TrainStats stats;

  std::vector<Tensor> velocity;
  velocity.reserve(model.params().size());
  for (const auto& p : model.params()) velocity.emplace_back(p.shape());

  std::vector<size_t> order(train_set.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch)) {
      const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch));
      const double inv = 1.0 / static_cast<double>(end - start);

      std::vector<Tensor> grad;
      grad.reserve(model.params().size());
      for (const auto& p : model.params()) grad.emplace_back(p.shape());
      double batch_loss = 0.0;

      for (size_t k = start; k < end; ++k) {
        const auto& item = train_set.items[order[k]];
        Tape tape;
        const auto run = model.forward(tape, item.pixels);
        const ValueId loss = tape.softmax_cross_entropy(run.logits, item.label);
        batch_loss += tape.value(loss).item();
        const auto grads = tape.backward(loss);
        for (size_t t = 0; t < run.param_ids.size(); ++t) {
          const auto it = grads.find(run.param_ids[t]);
          if (it == grads.end()) continue;
          Tensor& acc = grad[t];
          const Tensor& g = it->second;
          for (int64_t i = 0; i < acc.numel(); ++i) acc[i] += g[i];
        }
      }
      batch_loss *= inv;
      if (!std::isfinite(batch_loss)) {
        throw NumericError("train: loss diverged to non-finite at step " + std::to_string(stats.steps));
      }

      auto& params = model.params();
      for (size_t t = 0; t < params.size(); ++t) {
        Tensor& v = velocity[t];
        Tensor& p = params[t];
        const Tensor& g = grad[t];
        for (int64_t i = 0; i < p.numel(); ++i) {
          v[i] = cfg.momentum * v[i] + g[i] * inv;
          p[i] -= cfg.lr * v[i];
        }
      }

      ++stats.steps;
      if (cfg.log_every > 0 && stats.steps % cfg.log_every == 0) {
        stats.logged_losses.push_back(batch_loss);
        std::fprintf(stderr, "[train] epoch %d step %d loss %.4f\n", epoch + 1, stats.steps, batch_loss);
      }
    }
  }

  stats.final_train_accuracy = accuracy(model, train_set);
  stats.final_test_accuracy = test_set.empty() ? 0.0 : accuracy(model, test_set);
  return stats;
}

}  // namespace gran
