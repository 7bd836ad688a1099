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

#ifndef ENTLM_ALIGN_H_
#define ENTLM_ALIGN_H_

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "entlm/corpus.h"
#include "entlm/entity_linker.h"
#include "entlm/entity_vocab.h"
#include "entlm/model.h"
#include "entlm/relation.h"
#include "entlm/word_vocab.h"

namespace entlm {

struct SpanEmbedding {
  std::string id;
  std::string lang;
  std::string text;
  std::vector<double> vector;
};

// Mean of rows [begin, end) of an m x H matrix.
std::vector<double> span_embed(const Tensor& word_vectors, int begin, int end);

// Throws ContractError on a zero-norm or mismatched vector.
double cosine(const std::vector<double>& a, const std::vector<double>& b);

// Mean reciprocal rank of gold[i] within pool for queries[i], ranked by
// descending cosine; ties go to the lower pool index.
double cwr_mrr(const std::vector<SpanEmbedding>& queries,
               const std::vector<SpanEmbedding>& pool,
               const std::vector<int>& gold);

// Pairs queries with the pool item sharing their id and drops queries that
// have none. Returns the kept queries and their gold indices.
std::pair<std::vector<SpanEmbedding>, std::vector<int>> match_by_id(
    const std::vector<SpanEmbedding>& queries, const std::vector<SpanEmbedding>& pool);

// Expected MRR when the gold item's rank is uniform over a pool of size n.
double random_mrr(std::size_t pool_size);

struct KnnGraph {
  std::vector<std::string> labels;
  // Undirected, u < v, no self loops.
  std::set<std::pair<int, int>> edges;
};

// Each node links to its k most cosine-similar others (ties by index); the
// result is the union of both directions.
KnnGraph build_knn_graph(const std::vector<SpanEmbedding>& nodes, int k);

// Newman Q with the node labels as communities. Absent when the graph has
// no edges or fewer than two labels.
std::optional<double> modularity(const KnnGraph& graph);
std::optional<double> modularity(const std::vector<SpanEmbedding>& nodes, int k);

// JSON lines; the first line is a header with the dimension and count.
void write_embeddings(const std::filesystem::path& path,
                      const std::vector<SpanEmbedding>& embeddings);
std::vector<SpanEmbedding> read_embeddings(const std::filesystem::path& path);

// Sentence with one marked span, optionally with linked entities.
struct SpanDatum {
  std::string id;
  std::string lang;
  std::vector<std::string> tokens;
  std::pair<int, int> span;
  std::vector<EntityMention> entities;
};

// JSON lines {id, lang, tokens: [...], span: [s, e], entities?: [[s, e, id]]}.
std::vector<SpanDatum> read_span_data(const std::filesystem::path& path);
void write_span_data(const std::filesystem::path& path, const std::vector<SpanDatum>& data);

// One datum per hyperlink whose target resolves in `vocab`, carrying all of
// the document's resolved links as entities. Ids are "<doc title>#<entity
// key>", so parallel documents sharing a title yield matching ids.
std::vector<SpanDatum> mention_span_data(const std::vector<AnnotatedDocument>& docs,
                                         const EntityVocab& vocab);

enum class FeatureSpec { kSpanMean, kReWord, kReEntity };
FeatureSpec parse_feature_spec(const std::string& name);
const char* feature_spec_name(FeatureSpec spec);

// Mean-pooled contextual word vectors of each datum's span, computed with
// its entities attached when use_entities is set.
std::vector<SpanEmbedding> span_features(const Model& model, const WordVocab& words,
                                         const std::vector<SpanDatum>& data,
                                         bool use_entities);

// Head and tail features concatenated (2H per instance).
std::vector<SpanEmbedding> re_feature_dump(const Model& model, const WordVocab& words,
                                           const std::vector<REInstance>& data,
                                           REVariant variant, const std::string& lang);

}  // namespace entlm

#endif  // ENTLM_ALIGN_H_
