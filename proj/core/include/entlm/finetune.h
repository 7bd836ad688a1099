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

#ifndef ENTLM_FINETUNE_H_
#define ENTLM_FINETUNE_H_

#include <cstdint>
#include <functional>
#include <vector>

#include "entlm/autograd.h"
#include "entlm/encoder.h"
#include "entlm/optimizer.h"

namespace entlm {

enum class TaskKind { kQa, kRe, kNer };

const char* task_name(TaskKind task);
// Batch sizes searched per task; the first is the default.
std::vector<int> batch_size_grid(TaskKind task);
int default_epochs(TaskKind task);

inline constexpr double kFinetuneLearningRate = 2e-5;

struct FinetuneConfig {
  double lr = kFinetuneLearningRate;
  int epochs = 2;
  int batch_size = 16;
  AdamWConfig adam;
  std::uint64_t seed = 0;

  static FinetuneConfig defaults(TaskKind task);
  void validate() const;
};

struct FinetuneHooks {
  std::size_t train_size = 0;
  // Loss of one training example; the driver averages over the batch.
  std::function<Var(Graph&, std::size_t, const ForwardOptions&)> example_loss;
  // Higher is better. When set, parameters from the best epoch are kept.
  std::function<double()> dev_score;
};

struct FinetuneResult {
  int best_epoch = -1;  // -1 without a dev hook
  double best_score = 0.0;
  std::vector<double> epoch_scores;
  std::vector<double> epoch_losses;
  std::int64_t steps = 0;
};

// AdamW over every parameter in `params` with 6% linear warmup and linear
// decay to zero. Example order is reshuffled each epoch from the seed.
FinetuneResult finetune(ParameterStore& params, const FinetuneHooks& hooks,
                        const FinetuneConfig& config);

}  // namespace entlm

#endif  // ENTLM_FINETUNE_H_
