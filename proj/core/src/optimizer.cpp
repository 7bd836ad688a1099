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

#include "entlm/optimizer.h"

#include <cmath>

#include "entlm/error.h"

namespace entlm {

double linear_warmup_decay(std::int64_t step, std::int64_t length,
                           std::int64_t warmup, double peak) {
  if (step < 0 || step >= length) return 0.0;
  if (step < warmup) {
    return peak * static_cast<double>(step) / static_cast<double>(warmup);
  }
  return peak * static_cast<double>(length - step) /
         static_cast<double>(length - warmup);
}

void TwoStageSchedule::validate() const {
  if (total_steps < 1) throw ValidationError("schedule: total_steps must be >= 1");
  if (stage1_steps < 0 || stage1_steps > total_steps) {
    throw ValidationError("schedule: stage1_steps must lie in [0, total_steps]");
  }
  if (warmup_steps < 0) throw ValidationError("schedule: warmup_steps must be >= 0");
  if (!(stage1_peak_lr >= 0.0) || !(peak_lr >= 0.0)) {
    throw ValidationError("schedule: learning rates must be non-negative");
  }
}

int TwoStageSchedule::stage_of(std::int64_t step) const {
  return step < stage1_steps ? 0 : 1;
}

double lr_at(std::int64_t step, const TwoStageSchedule& s) {
  if (step < 0 || step >= s.total_steps) {
    throw ContractError("lr_at: step " + std::to_string(step) +
                        " outside [0, total_steps)");
  }
  if (step < s.stage1_steps) {
    return linear_warmup_decay(step, s.stage1_steps, s.warmup_steps,
                               s.stage1_peak_lr);
  }
  return linear_warmup_decay(step - s.stage1_steps,
                             s.total_steps - s.stage1_steps, s.warmup_steps,
                             s.peak_lr);
}

std::int64_t finetune_warmup_steps(std::int64_t total_steps) {
  // Integer form of ceil(0.06 * total) avoids 0.06 rounding up a boundary.
  return (total_steps * 6 + 99) / 100;
}

double finetune_lr_at(std::int64_t step, std::int64_t total_steps, double peak) {
  return linear_warmup_decay(step, total_steps,
                             finetune_warmup_steps(total_steps), peak);
}

bool decays(std::string_view name) {
  for (std::string_view suffix : {".bias", ".gamma", ".beta"}) {
    if (name.size() >= suffix.size() &&
        name.substr(name.size() - suffix.size()) == suffix) {
      return false;
    }
  }
  return true;
}

void AdamW::step(ParameterStore& params, double lr,
                 const std::function<bool(const std::string&)>& trainable) {
  for (auto& [name, p] : params) {
    if (trainable && !trainable(name)) continue;
    Slot& slot = slots_[name];
    if (slot.m.shape() != p.value.shape()) {
      slot.m = Tensor(p.value.shape(), 0.0);
      slot.v = Tensor(p.value.shape(), 0.0);
      slot.steps = 0;
    }
    ++slot.steps;
    const double b1 = config_.beta1, b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(slot.steps));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(slot.steps));
    const double shrink = decays(name) ? 1.0 - lr * config_.weight_decay : 1.0;
    auto w = p.value.data();
    auto g = p.grad.data();
    auto m = slot.m.data();
    auto v = slot.v.data();
    const bool has_grad = p.grad.size() == p.value.size();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = has_grad ? g[i] : 0.0;
      m[i] = b1 * m[i] + (1.0 - b1) * gi;
      v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] = w[i] * shrink - lr * mhat / (std::sqrt(vhat) + config_.eps);
    }
  }
}

}  // namespace entlm
