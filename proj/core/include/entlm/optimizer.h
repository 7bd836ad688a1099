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

#ifndef ENTLM_OPTIMIZER_H_
#define ENTLM_OPTIMIZER_H_

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>

#include "entlm/autograd.h"
#include "entlm/tensor.h"

namespace entlm {

// Linear warmup from 0 to `peak` over `warmup` steps, then linear decay to
// 0 at `length`. `step` is local to the schedule.
double linear_warmup_decay(std::int64_t step, std::int64_t length,
                           std::int64_t warmup, double peak);

struct TwoStageSchedule {
  std::int64_t total_steps = 1'000'000;
  std::int64_t stage1_steps = 500'000;
  std::int64_t warmup_steps = 2'500;
  double stage1_peak_lr = 5e-4;
  double peak_lr = 1e-4;

  void validate() const;
  // 0 for the first stage, 1 for the second.
  int stage_of(std::int64_t step) const;
};

// Each stage runs its own warmup/decay; the second restarts from zero.
double lr_at(std::int64_t step, const TwoStageSchedule& schedule);

inline constexpr double kFinetuneWarmupFraction = 0.06;

// ceil(0.06 * total_steps).
std::int64_t finetune_warmup_steps(std::int64_t total_steps);
double finetune_lr_at(std::int64_t step, std::int64_t total_steps, double peak);

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-6;
  double weight_decay = 0.01;
};

// Biases and LayerNorm gains/offsets are exempt from weight decay.
bool decays(std::string_view parameter_name);

class AdamW {
 public:
  struct Slot {
    Tensor m;
    Tensor v;
    std::int64_t steps = 0;
  };

  explicit AdamW(AdamWConfig config = {}) : config_(config) {}

  // Updates parameters accepted by `trainable` (all when empty). Others keep
  // their values and their moment estimates untouched.
  void step(ParameterStore& params, double lr,
            const std::function<bool(const std::string&)>& trainable = {});

  const AdamWConfig& config() const { return config_; }
  std::map<std::string, Slot>& slots() { return slots_; }
  const std::map<std::string, Slot>& slots() const { return slots_; }

 private:
  AdamWConfig config_;
  std::map<std::string, Slot> slots_;
};

}  // namespace entlm

#endif  // ENTLM_OPTIMIZER_H_
