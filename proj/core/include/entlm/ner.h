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

#ifndef ENTLM_NER_H_
#define ENTLM_NER_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "entlm/autograd.h"
#include "entlm/encoder.h"
#include "entlm/model.h"
#include "entlm/word_vocab.h"

namespace entlm {

struct TypedSpan {
  int start = 0;  // [start, end)
  int end = 0;
  std::string type;

  friend bool operator==(const TypedSpan&, const TypedSpan&) = default;
  friend auto operator<=>(const TypedSpan&, const TypedSpan&) = default;
};

struct NERInstance {
  std::vector<std::string> tokens;
  std::vector<TypedSpan> spans;
};

// CoNLL-style: one token per line, tag in the last whitespace-separated
// column (BIO or IOB1), blank lines between sentences, -DOCSTART- skipped.
std::vector<NERInstance> read_conll(const std::filesystem::path& path);
std::vector<TypedSpan> bio_to_spans(const std::vector<std::string>& tags);

inline constexpr int kDefaultMaxSpanLength = 16;

// All spans of at most max_len tokens, ordered by start then length.
std::vector<std::pair<int, int>> enumerate_spans(int n, int max_len = kDefaultMaxSpanLength);
// sum_{l=1..min(max_len, n)} (n - l + 1)
std::int64_t candidate_count(int n, int max_len = kDefaultMaxSpanLength);

enum class NERVariant { kWordEndpoints, kEntityMask };

// Index 0 is the non-entity class; types follow in the given order.
class NERHead {
 public:
  static void init_parameters(const EncoderConfig& config, NERVariant variant,
                              int types, ParameterStore& store, Rng& rng);
  explicit NERHead(ParameterStore& store);
  int class_count() const;
  Var logits(Graph& g, Var features) const;

 private:
  Parameter* weight_;
  Parameter* bias_;
};

// One feature row per span: first and last word vectors concatenated, or the
// contextual vector of an entity [MASK] placed over the span. Entity-mask
// spans beyond the encoder's entity capacity run in further chunks over the
// same words.
Var ner_features(Graph& g, const Encoder& encoder, const WordVocab& words,
                 const std::vector<std::string>& tokens,
                 const std::vector<std::pair<int, int>>& spans,
                 NERVariant variant, const ForwardOptions& options = {});

// Cross-entropy over every candidate span, gold type or non-entity.
Var ner_loss(Graph& g, const Encoder& encoder, const NERHead& head,
             const WordVocab& words, const NERInstance& inst,
             const std::vector<std::string>& types, NERVariant variant,
             int max_span_len, const ForwardOptions& options);

// Drops spans whose best class is non-entity, then keeps the remaining spans
// greedily by descending log-probability (ties: earlier start, then shorter),
// skipping any that overlap a kept span. Output is sorted by start.
std::vector<TypedSpan> decode_spans(const std::vector<std::pair<int, int>>& spans,
                                    const Tensor& log_probs,
                                    const std::vector<std::string>& types);

std::vector<TypedSpan> ner_predict(const Model& model, const WordVocab& words,
                                   const std::vector<std::string>& tokens,
                                   const std::vector<std::string>& types,
                                   NERVariant variant,
                                   int max_span_len = kDefaultMaxSpanLength);

struct SpanF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};
// Micro-averaged exact-span scoring.
SpanF1 span_f1(const std::vector<std::vector<TypedSpan>>& gold,
               const std::vector<std::vector<TypedSpan>>& predicted);

std::vector<std::string> collect_types(const std::vector<NERInstance>& data);

}  // namespace entlm

#endif  // ENTLM_NER_H_
