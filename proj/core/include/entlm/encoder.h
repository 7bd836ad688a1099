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

#ifndef ENTLM_ENCODER_H_
#define ENTLM_ENCODER_H_

#include <cstdint>
#include <span>
#include <vector>

#include "entlm/autograd.h"
#include "entlm/rng.h"
#include "entlm/tensor.h"

namespace entlm {

enum class EntityPositionMode {
  kSum,   // position term is the sum over mention positions
  kMean,  // averaged instead
};

struct EncoderConfig {
  int word_vocab_size = 0;
  int entity_vocab_size = 0;
  int hidden_size = 768;
  int entity_emb_size = 256;
  int layers = 12;
  int heads = 12;
  int ffn_size = 3072;
  int max_positions = 512;
  int type_count = 2;
  double dropout = 0.1;
  // Upper bound on entity tokens per sequence.
  int max_entities = 256;
  EntityPositionMode entity_position_mode = EntityPositionMode::kSum;
  double init_std = 0.02;

  // Throws ValidationError on inconsistent settings.
  void validate() const;
};

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr int kWordTypeId = 0;
inline constexpr int kEntityTypeId = 1;

// Joint input of word tokens and the entities mentioned in them. Word
// positions are implicit (0..m-1); each entity is tied to the word positions
// of its mention.
struct EncodedSequence {
  std::vector<int> word_ids;
  std::vector<int> entity_ids;
  std::vector<std::vector<int>> entity_positions;
  // Empty means every token carries the default type.
  std::vector<int> word_type_ids;
  std::vector<int> entity_type_ids;
  // Attention masks (1 = real token, 0 = padding); empty means all real.
  std::vector<std::uint8_t> word_mask;
  std::vector<std::uint8_t> entity_mask;

  std::size_t word_count() const { return word_ids.size(); }
  std::size_t entity_count() const { return entity_ids.size(); }
  void validate(const EncoderConfig& config) const;
};

struct ContextualOutput {
  Tensor word_vectors;    // m x hidden
  Tensor entity_vectors;  // n x hidden
};

struct EncoderVars {
  Var word_vectors;
  Var entity_vectors;  // a 0-row matrix when the sequence has no entities
};

struct ForwardOptions {
  bool training = false;
  // Required when training with dropout > 0.
  Rng* dropout_rng = nullptr;
};

// Bidirectional post-norm transformer over the concatenation of word and
// entity tokens. Both token kinds attend to each other without any
// entity-specific attention weights.
class Encoder {
 public:
  // Adds freshly initialized encoder parameters to `store`.
  static void init_parameters(const EncoderConfig& config,
                              ParameterStore& store, Rng& rng);

  Encoder(EncoderConfig config, ParameterStore& store);

  const EncoderConfig& config() const { return config_; }

  // Token + type + position embedding of words (before normalization).
  Var embed_words(Graph& g, std::span<const int> ids,
                  std::span<const int> positions,
                  std::span<const int> type_ids) const;
  // Projected entity embedding + type embedding + the position embeddings of
  // the mention positions (summed, or averaged in kMean mode).
  Var embed_entities(Graph& g, std::span<const int> ids,
                     const std::vector<std::vector<int>>& positions,
                     std::span<const int> type_ids) const;

  EncoderVars forward(Graph& g, const EncodedSequence& seq,
                      const ForwardOptions& options = {}) const;
  // Inference without dropout or gradient tracking.
  ContextualOutput encode(const EncodedSequence& seq) const;

 private:
  struct Layer {
    Parameter* query_w;
    Parameter* query_b;
    Parameter* key_w;
    Parameter* value_w;
    Parameter* value_b;
    Parameter* output_w;
    Parameter* output_b;
    Parameter* attn_gamma;
    Parameter* attn_beta;
    Parameter* ffn_in_w;
    Parameter* ffn_in_b;
    Parameter* ffn_out_w;
    Parameter* ffn_out_b;
    Parameter* ffn_gamma;
    Parameter* ffn_beta;
  };

  Var layer_forward(Graph& g, const Layer& layer, Var x, const Var* mask,
                    const ForwardOptions& options) const;
  Var maybe_dropout(Var x, const ForwardOptions& options) const;

  EncoderConfig config_;
  Parameter* word_emb_;
  Parameter* position_emb_;
  Parameter* word_type_emb_;
  Parameter* word_gamma_;
  Parameter* word_beta_;
  Parameter* entity_emb_;
  Parameter* entity_proj_;
  Parameter* entity_type_emb_;
  Parameter* entity_gamma_;
  Parameter* entity_beta_;
  std::vector<Layer> layers_;
};

// x * W (+ b).
Var linear(Graph& g, Var x, Parameter& weight, Parameter* bias);

// Tensor with i.i.d. N(0, stddev^2) entries.
Tensor normal_tensor(Shape shape, double stddev, Rng& rng);

// Rows of `x` selected by index (no gradient); convenience for features.
Tensor take_rows(const Tensor& x, std::span<const int> rows);

}  // namespace entlm

#endif  // ENTLM_ENCODER_H_
