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

#include "entlm/masking.h"

#include <algorithm>

#include "entlm/error.h"

namespace entlm {
namespace {

bool is_real(const std::vector<std::uint8_t>& mask, std::size_t i) {
  return mask.empty() || mask[i] != 0;
}

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ContractError(std::string("masking: ") + name + " must be in [0, 1]");
  }
}

}  // namespace

EncodedSequence encode_document(const AnnotatedDocument& doc,
                                const WordVocab& words,
                                const EntityVocab& entities,
                                const SequenceOptions& options) {
  EncodedSequence seq;
  const int offset = options.add_special_tokens ? 1 : 0;
  if (options.add_special_tokens) seq.word_ids.push_back(WordVocab::kClsId);
  for (const auto& token : doc.tokens) seq.word_ids.push_back(words.id(token));
  if (options.add_special_tokens) seq.word_ids.push_back(WordVocab::kSepId);

  std::vector<const Annotation*> ordered;
  for (const auto& a : doc.annotations) ordered.push_back(&a);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const Annotation* x, const Annotation* y) {
                     return x->start < y->start;
                   });
  for (const Annotation* a : ordered) {
    if (static_cast<int>(seq.entity_ids.size()) >= options.max_entities) break;
    const auto id = entities.resolve(doc.language, a->title);
    if (!id) continue;
    std::vector<int> positions;
    for (int p = a->start; p < a->end; ++p) positions.push_back(p + offset);
    seq.entity_ids.push_back(*id);
    seq.entity_positions.push_back(std::move(positions));
  }
  return seq;
}

void MaskingConfig::validate() const {
  check_probability(word_p, "word_p");
  check_probability(word_random_p, "word_random_p");
  check_probability(word_keep_p, "word_keep_p");
  check_probability(entity_p, "entity_p");
  if (word_random_p + word_keep_p > 1.0) {
    throw ContractError("masking: word_random_p + word_keep_p exceeds 1");
  }
}

MaskedBatch mask_batch(const EncodedSequence& seq, Rng& rng,
                       int word_vocab_size, const MaskingConfig& config) {
  config.validate();
  MaskedBatch out;
  out.input = seq;
  const std::size_t m = seq.word_count();
  const std::size_t n = seq.entity_count();
  out.word_labels.assign(m, kIgnoreLabel);
  out.entity_labels.assign(n, kIgnoreLabel);
  out.word_actions.assign(m, MaskAction::kNone);
  const int random_pool = word_vocab_size - config.word_special_count;

  for (std::size_t i = 0; i < m; ++i) {
    const int id = seq.word_ids[i];
    if (!is_real(seq.word_mask, i) || id < config.word_special_count) continue;
    if (!(rng.uniform() < config.word_p)) continue;
    out.word_labels[i] = id;
    const double u = rng.uniform();
    if (u < config.word_random_p && random_pool > 0) {
      out.word_actions[i] = MaskAction::kRandom;
      out.input.word_ids[i] = config.word_special_count +
                              static_cast<int>(rng.uniform_int(random_pool));
    } else if (u < config.word_random_p + config.word_keep_p) {
      out.word_actions[i] = MaskAction::kKeep;
    } else {
      out.word_actions[i] = MaskAction::kMask;
      out.input.word_ids[i] = config.word_mask_id;
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    const int id = seq.entity_ids[j];
    if (!is_real(seq.entity_mask, j) || id < config.entity_special_count) continue;
    if (!(rng.uniform() < config.entity_p)) continue;
    out.entity_labels[j] = id;
    out.input.entity_ids[j] = config.entity_mask_id;
  }
  return out;
}

}  // namespace entlm
