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

#ifndef ENTLM_MASKING_H_
#define ENTLM_MASKING_H_

#include <cstdint>
#include <vector>

#include "entlm/autograd.h"
#include "entlm/corpus.h"
#include "entlm/encoder.h"
#include "entlm/entity_vocab.h"
#include "entlm/rng.h"
#include "entlm/word_vocab.h"

namespace entlm {

inline constexpr int kDefaultMaxEntitiesPerSequence = 32;

struct SequenceOptions {
  // Wrap words in [CLS] ... [SEP].
  bool add_special_tokens = true;
  int max_entities = kDefaultMaxEntitiesPerSequence;
};

// Word ids from the vocabulary plus one entity token per annotation whose
// target resolves in `entities`. Mentions beyond max_entities are dropped,
// keeping the earliest.
EncodedSequence encode_document(const AnnotatedDocument& doc,
                                const WordVocab& words,
                                const EntityVocab& entities,
                                const SequenceOptions& options = {});

struct MaskingConfig {
  double word_p = 0.15;
  double word_random_p = 0.10;
  double word_keep_p = 0.10;
  double entity_p = 0.15;

  // Word ids below this are never selected ([PAD], [CLS], ...).
  int word_special_count = WordVocab::kSpecialCount;
  int word_mask_id = WordVocab::kMaskId;
  int entity_special_count = EntityVocab::kSpecialCount;
  int entity_mask_id = EntityVocab::kMaskId;

  // Throws ContractError on probabilities outside [0, 1].
  void validate() const;
};

enum class MaskAction : std::uint8_t { kNone, kMask, kRandom, kKeep };

struct MaskedBatch {
  EncodedSequence input;
  std::vector<int> word_labels;    // kIgnoreLabel where not selected
  std::vector<int> entity_labels;  // kIgnoreLabel where not selected
  std::vector<MaskAction> word_actions;
};

// `rng` should be a per-sequence stream so results do not depend on the
// order in which sequences are processed. Random replacements are drawn
// uniformly from the non-special part of the word vocabulary.
MaskedBatch mask_batch(const EncodedSequence& seq, Rng& rng,
                       int word_vocab_size, const MaskingConfig& config = {});

}  // namespace entlm

#endif  // ENTLM_MASKING_H_
