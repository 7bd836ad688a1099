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

#ifndef ENTLM_RELATION_H_
#define ENTLM_RELATION_H_

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "entlm/autograd.h"
#include "entlm/encoder.h"
#include "entlm/model.h"
#include "entlm/word_vocab.h"

namespace entlm {

struct REInstance {
  std::vector<std::string> tokens;
  std::pair<int, int> head;  // [start, end)
  std::pair<int, int> tail;
  std::string label;
};

// One example per line: label, tokens (space separated), head span and tail
// span as "start end", tab separated; spans are end-exclusive.
std::vector<REInstance> read_re_file(const std::filesystem::path& path);
void write_re_file(const std::filesystem::path& path,
                   const std::vector<REInstance>& data);

enum class REVariant { kWordMarkers, kEntityMask };

inline constexpr const char* kHeadMarker = "<ent>";
inline constexpr const char* kTailMarker = "<ent2>";

// Sorted distinct labels of `data`.
std::vector<std::string> collect_labels(const std::vector<REInstance>& data);

// Finetune-time setup. Word markers: adds <ent>/<ent2> to the vocabulary
// and grows the embedding table with random rows. Entity mask: copies the
// entity [MASK] embedding row into the [HEAD] and [TAIL] rows.
void prepare_re_model(Model& model, WordVocab& words, REVariant variant,
                      Rng& rng);

class REHead {
 public:
  static void init_parameters(const EncoderConfig& config, int labels,
                              ParameterStore& store, Rng& rng);
  explicit REHead(ParameterStore& store);
  int label_count() const;
  Var logits(Graph& g, Var features) const;

 private:
  Parameter* weight_;
  Parameter* bias_;
};

// 1 x (2 * hidden) feature: head half then tail half. Throws ContractError
// when the spans are empty, out of range, or overlap.
Var re_features(Graph& g, const Encoder& encoder, const WordVocab& words,
                const REInstance& inst, REVariant variant,
                const ForwardOptions& options = {});

Var re_loss(Graph& g, const Encoder& encoder, const REHead& head,
            const WordVocab& words, const REInstance& inst, int label,
            REVariant variant, const ForwardOptions& options);

// Index of the highest-scoring label (lowest index on ties).
int re_classify(const Model& model, const WordVocab& words,
                const REInstance& inst, REVariant variant);

// Mean per-label F1 over labels that occur in gold or predictions.
double macro_f1(const std::vector<int>& gold, const std::vector<int>& predicted);

}  // namespace entlm

#endif  // ENTLM_RELATION_H_
