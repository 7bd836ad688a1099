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

#ifndef ENTLM_TESTS_SUPPORT_TOY_SETUP_H_
#define ENTLM_TESTS_SUPPORT_TOY_SETUP_H_

#include "entlm/entity_vocab.h"
#include "entlm/model.h"
#include "entlm/pretrainer.h"
#include "entlm/toy_corpus.h"
#include "entlm/word_vocab.h"

namespace entlm::testing {

struct ToySetup {
  ToyCorpus corpus;
  WordVocab words;
  EntityVocab entities;
  EncoderConfig config;
  PretrainData train;
  PretrainData heldout;
};

inline ToySetup make_toy_setup(const ToyCorpusOptions& options = {},
                               int hidden = 32, int layers = 2) {
  ToySetup s;
  s.corpus = make_toy_corpus(options);
  s.words = WordVocab::build(s.corpus.train);
  EntityVocabOptions vo;
  vo.min_languages = static_cast<int>(options.languages.size());
  s.entities = build_entity_vocab(s.corpus.train, s.corpus.links, vo);
  s.config.word_vocab_size = s.words.size();
  s.config.entity_vocab_size = s.entities.size();
  s.config.hidden_size = hidden;
  s.config.entity_emb_size = hidden / 2;
  s.config.layers = layers;
  s.config.heads = 2;
  s.config.ffn_size = hidden * 2;
  s.config.max_positions = 32;
  s.config.max_entities = 8;
  s.config.dropout = 0.0;
  s.train = PretrainData::from_documents(s.corpus.train, s.words, s.entities,
                                         s.config.max_positions);
  s.heldout = PretrainData::from_documents(s.corpus.heldout, s.words,
                                           s.entities, s.config.max_positions);
  return s;
}

inline TrainConfig small_train_config(std::int64_t total, std::int64_t stage1,
                                      int batch) {
  TrainConfig c;
  c.schedule.total_steps = total;
  c.schedule.stage1_steps = stage1;
  c.schedule.warmup_steps = std::max<std::int64_t>(1, total / 20);
  c.schedule.stage1_peak_lr = 5e-3;
  c.schedule.peak_lr = 2e-3;
  c.batch_size = batch;
  c.seed = 7;
  return c;
}

}  // namespace entlm::testing

#endif  // ENTLM_TESTS_SUPPORT_TOY_SETUP_H_
