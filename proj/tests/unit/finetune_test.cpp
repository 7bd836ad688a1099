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

#include "doctest.h"
#include "entlm/error.h"

namespace entlm {
namespace {

TEST_CASE("defaults per task") {
  CHECK(batch_size_grid(TaskKind::kQa) == std::vector<int>{16, 32});
  CHECK(batch_size_grid(TaskKind::kNer) == std::vector<int>{4, 8, 16});
  const auto qa = FinetuneConfig::defaults(TaskKind::kQa);
  CHECK(qa.epochs == 2);
  CHECK(qa.batch_size == 16);
  CHECK(qa.lr == 2e-5);
  CHECK(FinetuneConfig::defaults(TaskKind::kRe).epochs == 5);
  FinetuneConfig bad;
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("six percent warmup boundary") {
  // ceil(0.06 * total)
  for (std::int64_t total : {1, 10, 17, 100, 101, 1000, 12345}) {
    const auto w = finetune_warmup_steps(total);
    CHECK(w == static_cast<std::int64_t>(std::ceil(0.06 * double(total) - 1e-9)));
  }
  const std::int64_t total = 100;
  const double peak = 2e-5;
  CHECK(finetune_lr_at(0, total, peak) == 0.0);
  CHECK(finetune_lr_at(3, total, peak) == peak * 3.0 / 6.0);
  CHECK(finetune_lr_at(6, total, peak) == peak);
  CHECK(finetune_lr_at(53, total, peak) == peak * 47.0 / 94.0);
  CHECK(finetune_lr_at(5, total, peak) < finetune_lr_at(6, total, peak));
  CHECK(finetune_lr_at(7, total, peak) < finetune_lr_at(6, total, peak));
}

// Least squares on y = 3x fit by a single weight.
struct LineFit {
  ParameterStore params;
  std::vector<double> xs{0.5, -1.0, 2.0, 1.5, -0.25, 0.75, 1.0};

  LineFit() { params.add("w.weight", Tensor(Shape{1, 1}, 0.0)); }

  FinetuneHooks hooks() {
    FinetuneHooks h;
    h.train_size = xs.size();
    h.example_loss = [this](Graph& g, std::size_t i, const ForwardOptions&) {
      Var w = g.param(params.get("w.weight"));
      Var pred = scale(w, xs[i]);
      Var diff = add(pred, g.constant(Tensor(Shape{1, 1}, -3.0 * xs[i])));
      return sum(mul(diff, diff));
    };
    return h;
  }
};

TEST_CASE("finetune reduces the loss and counts steps") {
  LineFit fit;
  FinetuneConfig c;
  c.lr = 0.3;
  c.epochs = 8;
  c.batch_size = 2;
  c.adam.weight_decay = 0.0;
  const auto r = finetune(fit.params, fit.hooks(), c);
  CHECK(r.steps == 8 * 4);
  CHECK(r.best_epoch == -1);
  REQUIRE(r.epoch_losses.size() == 8);
  CHECK(r.epoch_losses.back() < 0.1 * r.epoch_losses.front());
}

TEST_CASE("same seed reproduces bit-identical parameters") {
  LineFit a, b, c;
  FinetuneConfig cfg;
  cfg.lr = 0.1;
  cfg.epochs = 3;
  cfg.batch_size = 3;
  cfg.seed = 5;
  finetune(a.params, a.hooks(), cfg);
  finetune(b.params, b.hooks(), cfg);
  CHECK(a.params.get("w.weight").value.item() == b.params.get("w.weight").value.item());
  cfg.seed = 6;
  finetune(c.params, c.hooks(), cfg);
  // Different shuffles, different trajectory.
  CHECK(a.params.get("w.weight").value.item() != c.params.get("w.weight").value.item());
}

TEST_CASE("parameters from the best dev epoch are restored") {
  LineFit fit;
  FinetuneConfig cfg;
  cfg.lr = 0.2;
  cfg.epochs = 6;
  cfg.batch_size = 7;
  auto hooks = fit.hooks();
  std::vector<double> seen;
  // Prefers the epoch whose weight is closest to 1.0, which training passes.
  hooks.dev_score = [&] {
    const double w = fit.params.get("w.weight").value.item();
    seen.push_back(w);
    return -std::abs(w - 1.0);
  };
  const auto r = finetune(fit.params, hooks, cfg);
  REQUIRE(r.best_epoch >= 0);
  CHECK(r.epoch_scores.size() == 6);
  CHECK(fit.params.get("w.weight").value.item() == seen[r.best_epoch]);
  for (double s : r.epoch_scores) CHECK(s <= r.best_score);
}

TEST_CASE("empty training set is rejected") {
  ParameterStore p;
  FinetuneHooks h;
  CHECK_THROWS_AS(finetune(p, h, FinetuneConfig{}), ValidationError);
}

}  // namespace
}  // namespace entlm
