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

#ifndef ENTLM_QA_H_
#define ENTLM_QA_H_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "entlm/autograd.h"
#include "entlm/encoder.h"
#include "entlm/entity_linker.h"
#include "entlm/model.h"
#include "entlm/word_vocab.h"

namespace entlm {

struct QAInstance {
  std::string id;
  std::vector<std::string> question;
  std::vector<std::string> context;
  // Gold spans over context tokens, [start, end).
  std::vector<std::pair<int, int>> answers;
  std::vector<std::string> answer_texts;
  std::vector<EntityMention> question_entities;
  std::vector<EntityMention> context_entities;
  std::string question_lang;
  std::string context_lang;
};

// SQuAD-shaped JSON: data[].paragraphs[].{context, qas[].{id, question,
// answers[].{text, answer_start}}}. Language tags come from question_lang /
// context_lang (or lang) on the question, paragraph, or top level. Optional
// question_entities / context_entities hold [start, end, entity_id] triples
// over whitespace tokens.
std::vector<QAInstance> read_qa_file(const std::filesystem::path& path);
std::vector<QAInstance> parse_qa_json(const std::string& text);

struct QAOptions {
  int max_answer_len = 30;
  int doc_stride = 128;
  int max_query_tokens = 64;
  bool use_entities = false;
};

// One encoder input covering a slice of the context.
struct QAWindow {
  EncodedSequence seq;
  int context_begin = 0;   // first context token in the window
  int context_length = 0;  // context tokens in the window
  int first_position = 0;  // sequence position of the first context token
};

std::vector<QAWindow> make_qa_windows(const QAInstance& inst,
                                      const WordVocab& words,
                                      const EncoderConfig& config,
                                      const QAOptions& options);

class QAHead {
 public:
  static void init_parameters(const EncoderConfig& config,
                              ParameterStore& store, Rng& rng);
  explicit QAHead(ParameterStore& store);
  // m x 2: start and end logits per word position.
  Var logits(Graph& g, Var word_vectors) const;

 private:
  Parameter* weight_;
  Parameter* bias_;
};

struct QAPrediction {
  int start = 0;  // context token indices, [start, end)
  int end = 0;
  double score = 0.0;
  std::string text;
};

// Best span over all windows: highest start + end logit with length capped
// at max_answer_len; ties go to the earliest start, then the shortest span.
QAPrediction qa_predict(const Model& model, const WordVocab& words,
                        const QAInstance& inst, const QAOptions& options = {});

// Mean of start and end cross-entropy for one window; the targets point at
// [CLS] when the first gold answer is not inside the window.
Var qa_window_loss(Graph& g, const Encoder& encoder, const QAHead& head,
                   const QAWindow& window, const QAInstance& inst,
                   const ForwardOptions& options);

// Token-level answer comparison after lowercasing, stripping ASCII
// punctuation and dropping English articles.
std::vector<std::string> normalize_answer(const std::string& text);
double answer_f1(const std::string& prediction, const std::string& gold);
double answer_exact_match(const std::string& prediction, const std::string& gold);

struct QAReport {
  struct Cell {
    double f1 = 0.0;
    double em = 0.0;
    int count = 0;
  };
  // Keyed by (question language, context language).
  std::map<std::pair<std::string, std::string>, Cell> cells;
  double f1 = 0.0;
  double em = 0.0;
  // Mean over cells whose two languages differ; absent if there are none.
  std::optional<double> gxlt_f1;
  std::optional<double> gxlt_em;

  std::string to_json() const;
};

// Throws ValidationError if an instance has no gold answer text.
QAReport qa_metrics(const std::vector<std::string>& predictions,
                    const std::vector<QAInstance>& golds);

}  // namespace entlm

#endif  // ENTLM_QA_H_
