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

#ifndef ENTLM_PRETRAINER_H_
#define ENTLM_PRETRAINER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "entlm/autograd.h"
#include "entlm/checkpoint.h"
#include "entlm/corpus.h"
#include "entlm/entity_vocab.h"
#include "entlm/masking.h"
#include "entlm/model.h"
#include "entlm/optimizer.h"
#include "entlm/sampling.h"
#include "entlm/word_vocab.h"

namespace entlm {

struct LossTerm {
  Var loss;             // scalar; a constant 0 when skipped
  bool skipped = true;  // no labeled positions
  int count = 0;        // labeled positions
};

// Mean cross-entropy over rows whose label is not kIgnoreLabel.
LossTerm mlm_loss(Graph& g, Var word_vectors, std::span<const int> labels,
                  const MlmHead& head);
LossTerm mep_loss(Graph& g, Var entity_vectors, std::span<const int> labels,
                  const MepHead& head);

std::vector<std::string> default_stage1_trainable();

struct TrainConfig {
  TwoStageSchedule schedule;
  int batch_size = 2048;
  AdamWConfig adam;
  std::uint64_t seed = 0;
  // Name prefixes updated during stage 1; everything else stays frozen.
  std::vector<std::string> stage1_trainable = default_stage1_trainable();
  MaskingConfig masking;
  double sampling_alpha = kDefaultSamplingAlpha;
  // Global gradient-norm clip; 0 disables it.
  double max_grad_norm = 0.0;
  // Steps between checkpoint writes (0 = only at the end) and log lines.
  std::int64_t checkpoint_interval = 0;
  std::int64_t log_interval = 1;

  void validate() const;
};

// Sequences ready for masking, grouped by language for smoothed language sampling.
struct PretrainData {
  std::vector<EncodedSequence> sequences;
  std::vector<int> language_of;  // index into languages
  std::vector<std::string> languages;

  // Splits every document into sequences of at most max_positions - 2 words
  // and encodes them with [CLS]/[SEP].
  static PretrainData from_documents(const std::vector<AnnotatedDocument>& docs,
                                     const WordVocab& words,
                                     const EntityVocab& entities,
                                     int max_positions,
                                     const SequenceOptions& options = {});
  std::vector<double> language_counts() const;
};

struct StepResult {
  std::int64_t step = 0;
  int stage = 0;
  double lr = 0.0;
  double mlm_loss = 0.0;
  double mep_loss = 0.0;
  bool mlm_skipped = false;
  bool mep_skipped = false;
  double total() const { return mlm_loss + mep_loss; }
};

class Pretrainer {
 public:
  Pretrainer(Model& model, const PretrainData& data, TrainConfig config);

  // Resumes from a checkpoint written by checkpoint(); parameters are loaded
  // into the model.
  void restore(const Checkpoint& ckpt);
  Checkpoint checkpoint() const;

  bool done() const { return step_ >= config_.schedule.total_steps; }
  std::int64_t current_step() const { return step_; }
  bool trainable(const std::string& name) const;

  // One optimizer step. Throws NumericError (leaving parameters and
  // optimizer state untouched) if the loss or a gradient is non-finite.
  StepResult step();

  // Loss of one batch at `step` without updating anything.
  StepResult evaluate_batch(std::int64_t step);

 private:
  StepResult run_batch(std::int64_t step, bool update);

  Model& model_;
  const PretrainData& data_;
  TrainConfig config_;
  std::vector<std::vector<int>> by_language_;
  CategoricalSampler language_sampler_;
  AdamW optimizer_;
  Rng master_;
  std::int64_t step_ = 0;
};

struct TrainOptions {
  std::optional<std::filesystem::path> checkpoint_path;
  std::ostream* log = nullptr;
  std::map<std::string, std::string> metadata;
  // Stop after this many total steps even if the schedule is longer.
  std::optional<std::int64_t> stop_after;
  const Checkpoint* resume_from = nullptr;
};

// Runs the schedule to completion and returns the final checkpoint. On a
// non-finite loss the last checkpoint on disk is left in place and the
// NumericError is rethrown.
Checkpoint train(Model& model, const PretrainData& data,
                 const TrainConfig& config, const TrainOptions& options = {});

struct MepAccuracy {
  std::int64_t correct = 0;
  std::int64_t total = 0;
  double accuracy() const { return total == 0 ? 0.0 : double(correct) / double(total); }
};

// Masks each non-special entity of each sequence in turn (words untouched)
// and counts exact top-1 recoveries.
MepAccuracy mep_top1_accuracy(const Model& model,
                              const std::vector<EncodedSequence>& sequences);

}  // namespace entlm

#endif  // ENTLM_PRETRAINER_H_
