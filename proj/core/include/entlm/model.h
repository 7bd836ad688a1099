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

#ifndef ENTLM_MODEL_H_
#define ENTLM_MODEL_H_

#include <cstdint>

#include "entlm/autograd.h"
#include "entlm/encoder.h"

namespace entlm {

// Encoder configuration plus every parameter tensor (encoder, pretraining
// heads and any task heads added during fine-tuning).
struct Model {
  EncoderConfig config;
  ParameterStore params;

  // Randomly initialized encoder and MLM/MEP heads.
  static Model create(const EncoderConfig& config, std::uint64_t seed);
};

// Word-prediction head: dense + GELU + norm, then a decoder over the word
// vocabulary.
class MlmHead {
 public:
  static void init_parameters(const EncoderConfig& config,
                              ParameterStore& store, Rng& rng);
  explicit MlmHead(ParameterStore& store);
  // hidden: k x hidden_size -> k x word_vocab logits.
  Var logits(Graph& g, Var hidden) const;

 private:
  Parameter* dense_w_;
  Parameter* dense_b_;
  Parameter* gamma_;
  Parameter* beta_;
  Parameter* decoder_w_;
  Parameter* decoder_b_;
};

// Entity-prediction head: dense to the entity embedding size + GELU + norm,
// then a decoder over the entity vocabulary.
class MepHead {
 public:
  static void init_parameters(const EncoderConfig& config,
                              ParameterStore& store, Rng& rng);
  explicit MepHead(ParameterStore& store);
  Var logits(Graph& g, Var hidden) const;

 private:
  Parameter* dense_w_;
  Parameter* dense_b_;
  Parameter* gamma_;
  Parameter* beta_;
  Parameter* decoder_w_;
  Parameter* decoder_b_;
};

// Appends `count` randomly initialized word rows (embedding table and MLM
// decoder) and returns the id of the first new row.
// Encoder and head classes bind mutable parameter pointers because training
// graphs accumulate gradients through them. Inference paths never write, so
// read-only callers may bind a const model through this.
inline ParameterStore& inference_params(const Model& model) {
  return const_cast<ParameterStore&>(model.params);
}

int extend_word_vocab(Model& model, int count, Rng& rng);

}  // namespace entlm

#endif  // ENTLM_MODEL_H_
