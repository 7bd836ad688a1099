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

#ifndef ENTLM_CLOZE_H_
#define ENTLM_CLOZE_H_

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "entlm/entity_vocab.h"
#include "entlm/model.h"
#include "entlm/word_vocab.h"

namespace entlm {

struct ClozeCandidate {
  std::string surface;
  // Canonical entity key; when absent the surface is matched against titles.
  std::optional<std::string> entity;
};

struct TypedQuery {
  std::string lang;
  std::string template_text;  // one [X] and one [Y]
  std::string sub_surface;
  std::optional<std::string> sub_entity;
  std::vector<ClozeCandidate> candidates;
  int gold_index = 0;

  // Throws ContractError on a malformed template or candidate set.
  void validate() const;
};

inline constexpr const char* kSubjectSlot = "[X]";
inline constexpr const char* kObjectSlot = "[Y]";

// JSON lines: {lang, template, sub_surface, sub_entity?,
// candidates: [{surface, entity?}], gold_index}.
std::vector<TypedQuery> read_cloze_queries(const std::filesystem::path& path);
TypedQuery parse_cloze_query(const std::string& line);

// Mean of log_probs(i, ids[i]) over the rows; log_probs is k x V.
double mean_token_log_prob(const Tensor& log_probs, std::span<const int> ids);

// Entity id for a candidate or subject: explicit key first, otherwise exact
// title match in the query language, then in English. Specials never match.
std::optional<int> match_entity(const EntityVocab& vocab, const std::string& lang,
                                const std::string& surface,
                                const std::optional<std::string>& key);

// Word-side input with [X] filled and k word [MASK]s at [Y].
struct ClozeInput {
  EncodedSequence seq;
  std::vector<int> subject_positions;
  std::vector<int> mask_positions;
};
ClozeInput build_cloze_input(const TypedQuery& query, const WordVocab& words,
                             int k);

double score_candidate_words(const Model& model, const WordVocab& words,
                             const TypedQuery& query,
                             const ClozeCandidate& candidate);

enum class ClozeMode { kWord, kEntityY, kEntityXY };
const char* cloze_mode_name(ClozeMode mode);
ClozeMode parse_cloze_mode(const std::string& name);

struct EntityScore {
  double score = 0.0;
  bool used_entity = false;
};

// MEP log-probability of the candidate at an entity [MASK] laid over the
// [Y] masks; word scoring when the candidate has no entity. In kEntityXY
// mode the subject's entity joins the input if the vocabulary has it.
EntityScore score_candidate_entity(const Model& model, const WordVocab& words,
                                   const EntityVocab& entities,
                                   const TypedQuery& query,
                                   const ClozeCandidate& candidate,
                                   ClozeMode mode = ClozeMode::kEntityY);

// Index of the best score; the lowest index wins ties.
int argmax_candidate(std::span<const double> scores);

struct FalsePositiveStats {
  std::optional<std::string> top;  // absent when there are no false predictions
  int top_count = 0;
  int false_count = 0;
  std::map<std::string, int> counts;

  std::optional<double> ratio() const;
};

// (predicted, gold) surface pairs. The most frequent wrong prediction wins,
// lexicographically smallest on ties.
FalsePositiveStats top1_fp_ratio(
    const std::vector<std::pair<std::string, std::string>>& predictions);

struct ClozeReport {
  struct Accuracy {
    int correct = 0;
    int total = 0;
    double value() const { return total == 0 ? 0.0 : double(correct) / total; }
  };
  std::string mode;
  Accuracy overall;
  std::map<std::string, Accuracy> per_language;
  std::vector<int> predictions;  // candidate index per query
  int entity_scored = 0;         // candidates scored by the MEP head
  int word_fallbacks = 0;        // candidates scored by the MLM head
  // Keyed by (template, language).
  std::map<std::pair<std::string, std::string>, FalsePositiveStats> false_positives;

  std::string to_json() const;
};

// Scores for every candidate of one query.
using ClozeScorer = std::function<std::vector<double>(const TypedQuery&)>;

ClozeReport evaluate_cloze(const std::vector<TypedQuery>& queries,
                           const ClozeScorer& scorer);
ClozeReport evaluate_cloze(const Model& model, const WordVocab& words,
                           const EntityVocab& entities,
                           const std::vector<TypedQuery>& queries, ClozeMode mode);

}  // namespace entlm

#endif  // ENTLM_CLOZE_H_
