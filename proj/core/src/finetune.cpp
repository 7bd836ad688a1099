// Copyright 2026 The entlm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "entlm/finetune.h"

#include <cmath>
#include <map>
#include <numeric>

#include "entlm/error.h"
#include "entlm/rng.h"

namespace entlm {

const char* task_name(TaskKind task) {
  switch (task) {
    case TaskKind::kQa: return "qa";
    case TaskKind::kRe: return "re";
    case TaskKind::kNer: return "ner";
  }
  return "?";
}

std::vector<int> batch_size_grid(TaskKind task) {
  if (task == TaskKind::kQa) return {16, 32};
  return {4, 8, 16};
}

int default_epochs(TaskKind task) { return task == TaskKind::kQa ? 2 : 5; }

FinetuneConfig FinetuneConfig::defaults(TaskKind task) {
  FinetuneConfig c;
  c.epochs = default_epochs(task);
  c.batch_size = batch_size_grid(task).front();
  return c;
}

void FinetuneConfig::validate() const {
  if (!(lr >= 0.0)) throw ValidationError("finetune: lr must be >= 0");
  if (epochs < 1) throw ValidationError("finetune: epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("finetune: batch_size must be >= 1");
  if (!(adam.eps > 0.0)) throw ValidationError("finetune: adam eps must be > 0");
}

FinetuneResult finetune(ParameterStore& params, const FinetuneHooks& hooks,
                        const FinetuneConfig& config) {
  config.validate();
  if (hooks.train_size == 0 || !hooks.example_loss) {
    throw ValidationError("finetune: empty training set");
  }
  const auto n = hooks.train_size;
  const auto batch = static_cast<std::size_t>(config.batch_size);
  const std::int64_t steps_per_epoch = static_cast<std::int64_t>((n + batch - 1) / batch);
  const std::int64_t total = steps_per_epoch * config.epochs;

  AdamW optimizer(config.adam);
  FinetuneResult result;
  std::map<std::string, Tensor> best;
  std::int64_t step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle = Rng::substream(config.seed, "shuffle", static_cast<std::uint64_t>(epoch));
    for (std::size_t i = n; i > 1; --i) {
      std::swap(order[i - 1], order[shuffle.uniform_int(i)]);
    }
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < n; begin += batch, ++step) {
      const std::size_t end = std::min(n, begin + batch);
      Rng dropout = Rng::substream(config.seed, "dropout", static_cast<std::uint64_t>(step));
      ForwardOptions fwd;
      fwd.training = true;
      fwd.dropout_rng = &dropout;
      Graph g;
      Var loss = hooks.example_loss(g, order[begin], fwd);
      for (std::size_t i = begin + 1; i < end; ++i) {
        loss = add(loss, hooks.example_loss(g, order[i], fwd));
      }
      loss = scale(loss, 1.0 / double(end - begin));
      const double value = loss.value().item();
      if (!std::isfinite(value)) {
        throw NumericError("finetune: non-finite loss at step " + std::to_string(step));
      }
      epoch_loss += value * double(end - begin);
      params.zero_grad();
      g.backward(loss);
      optimizer.step(params, finetune_lr_at(step, total, config.lr));
    }
    result.epoch_losses.push_back(epoch_loss / double(n));
    if (hooks.dev_score) {
      const double score = hooks.dev_score();
      result.epoch_scores.push_back(score);
      if (result.best_epoch < 0 || score > result.best_score) {
        result.best_epoch = epoch;
        result.best_score = score;
        best.clear();
        for (const auto& [name, p] : params) best.emplace(name, p.value);
      }
    }
  }
  result.steps = step;
  if (!best.empty()) {
    for (auto& [name, p] : params) p.value = best.at(name);
  }
  return result;
}

}  // namespace entlm
