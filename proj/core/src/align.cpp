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

#include "entlm/align.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "entlm/error.h"
#include "json.hpp"

namespace entlm {

using nlohmann::json;

namespace {

constexpr const char* kEmbeddingFormat = "entlm-embeddings";
constexpr int kEmbeddingVersion = 1;

double norm(const std::vector<double>& v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

// Rows of the similarity matrix, computed once.
std::vector<std::vector<double>> unit_vectors(const std::vector<SpanEmbedding>& xs) {
  std::vector<std::vector<double>> out;
  out.reserve(xs.size());
  for (const auto& x : xs) {
    const double n = norm(x.vector);
    if (n == 0.0 || !std::isfinite(n)) {
      throw ContractError("align: zero-norm or non-finite vector for '" + x.id + "'");
    }
    std::vector<double> u(x.vector);
    for (double& v : u) v /= n;
    out.push_back(std::move(u));
  }
  return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ContractError("align: vector sizes differ");
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

std::string join(const std::vector<std::string>& tokens, int begin, int end) {
  std::string s;
  for (int i = begin; i < end; ++i) {
    if (i > begin) s += ' ';
    s += tokens[i];
  }
  return s;
}

}  // namespace

std::vector<double> span_embed(const Tensor& word_vectors, int begin, int end) {
  if (begin >= end) throw ContractError("span_embed: empty span");
  if (begin < 0 || static_cast<std::size_t>(end) > word_vectors.rows()) {
    throw ContractError("span_embed: span out of bounds");
  }
  std::vector<double> mean(word_vectors.cols(), 0.0);
  for (int r = begin; r < end; ++r) {
    const auto row = word_vectors.row(static_cast<std::size_t>(r));
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += row[c];
  }
  for (double& v : mean) v /= double(end - begin);
  return mean;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  const double na = norm(a), nb = norm(b);
  if (na == 0.0 || nb == 0.0) throw ContractError("cosine: zero-norm vector");
  return dot(a, b) / (na * nb);
}

double cwr_mrr(const std::vector<SpanEmbedding>& queries,
               const std::vector<SpanEmbedding>& pool, const std::vector<int>& gold) {
  if (queries.size() != gold.size()) throw ContractError("cwr: one gold index per query");
  if (queries.empty()) throw ContractError("cwr: no queries");
  const auto q = unit_vectors(queries);
  const auto p = unit_vectors(pool);
  double total = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const int g = gold[i];
    if (g < 0 || static_cast<std::size_t>(g) >= p.size()) {
      throw ContractError("cwr: gold index out of range");
    }
    const double target = dot(q[i], p[g]);
    std::size_t rank = 1;
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double s = dot(q[i], p[j]);
      if (s > target || (s == target && j < static_cast<std::size_t>(g))) ++rank;
    }
    total += 1.0 / double(rank);
  }
  return total / double(q.size());
}

std::pair<std::vector<SpanEmbedding>, std::vector<int>> match_by_id(
    const std::vector<SpanEmbedding>& queries, const std::vector<SpanEmbedding>& pool) {
  std::map<std::string, int> index;
  for (std::size_t j = 0; j < pool.size(); ++j) {
    if (!index.emplace(pool[j].id, static_cast<int>(j)).second) {
      throw ValidationError("cwr: duplicate pool id '" + pool[j].id + "'");
    }
  }
  std::pair<std::vector<SpanEmbedding>, std::vector<int>> out;
  for (const auto& q : queries) {
    auto it = index.find(q.id);
    if (it == index.end()) continue;
    out.first.push_back(q);
    out.second.push_back(it->second);
  }
  return out;
}

double random_mrr(std::size_t pool_size) {
  if (pool_size == 0) throw ContractError("random_mrr: empty pool");
  double h = 0.0;
  for (std::size_t r = 1; r <= pool_size; ++r) h += 1.0 / double(r);
  return h / double(pool_size);
}

KnnGraph build_knn_graph(const std::vector<SpanEmbedding>& nodes, int k) {
  if (k < 1) throw ContractError("knn: k must be at least 1");
  const auto u = unit_vectors(nodes);
  KnnGraph g;
  for (const auto& n : nodes) g.labels.push_back(n.lang);
  const int n = static_cast<int>(nodes.size());
  std::vector<std::pair<double, int>> sims;
  for (int i = 0; i < n; ++i) {
    sims.clear();
    for (int j = 0; j < n; ++j) {
      if (j != i) sims.emplace_back(-dot(u[i], u[j]), j);
    }
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), sims.size());
    std::partial_sort(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(take),
                      sims.end());
    for (std::size_t t = 0; t < take; ++t) {
      const int j = sims[t].second;
      g.edges.emplace(std::min(i, j), std::max(i, j));
    }
  }
  return g;
}

std::optional<double> modularity(const KnnGraph& graph) {
  const std::set<std::string> langs(graph.labels.begin(), graph.labels.end());
  if (langs.size() < 2 || graph.edges.empty()) return std::nullopt;
  std::map<std::string, double> inside, degree;
  for (const auto& [a, b] : graph.edges) {
    const auto& la = graph.labels.at(static_cast<std::size_t>(a));
    const auto& lb = graph.labels.at(static_cast<std::size_t>(b));
    if (a == b) throw ContractError("modularity: self loop");
    degree[la] += 1.0;
    degree[lb] += 1.0;
    if (la == lb) inside[la] += 1.0;
  }
  const double m = double(graph.edges.size());
  double q = 0.0;
  for (const auto& lang : langs) {
    const double a = degree[lang] / (2.0 * m);
    q += inside[lang] / m - a * a;
  }
  return q;
}

std::optional<double> modularity(const std::vector<SpanEmbedding>& nodes, int k) {
  return modularity(build_knn_graph(nodes, k));
}

void write_embeddings(const std::filesystem::path& path,
                      const std::vector<SpanEmbedding>& embeddings) {
  const std::size_t dim = embeddings.empty() ? 0 : embeddings.front().vector.size();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("embeddings: cannot write " + path.string());
  out << json{{"format", kEmbeddingFormat}, {"version", kEmbeddingVersion},
              {"dim", dim}, {"count", embeddings.size()}}.dump()
      << '\n';
  for (const auto& e : embeddings) {
    if (e.vector.size() != dim) throw ContractError("embeddings: mixed dimensions");
    // nlohmann prints doubles with round-trip precision.
    out << json{{"id", e.id}, {"lang", e.lang}, {"text", e.text}, {"vector", e.vector}}.dump()
        << '\n';
  }
  if (!out) throw FormatError("embeddings: write failed for " + path.string());
}

std::vector<SpanEmbedding> read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("embeddings: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("embeddings: empty file");
  std::vector<SpanEmbedding> out;
  try {
    const auto header = json::parse(line);
    if (header.value("format", "") != kEmbeddingFormat ||
        header.value("version", 0) != kEmbeddingVersion) {
      throw FormatError("embeddings: unsupported header in " + path.string());
    }
    const auto dim = header.at("dim").get<std::size_t>();
    const auto count = header.at("count").get<std::size_t>();
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto j = json::parse(line);
      SpanEmbedding e{j.at("id").get<std::string>(), j.at("lang").get<std::string>(),
                      j.value("text", ""), j.at("vector").get<std::vector<double>>()};
      if (e.vector.size() != dim) throw FormatError("embeddings: bad vector length");
      out.push_back(std::move(e));
    }
    if (out.size() != count) throw FormatError("embeddings: record count mismatch");
  } catch (const json::exception& e) {
    throw FormatError(std::string("embeddings: ") + e.what());
  }
  return out;
}

std::vector<SpanDatum> read_span_data(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("span data: cannot open " + path.string());
  std::vector<SpanDatum> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      SpanDatum d;
      d.id = j.at("id").get<std::string>();
      d.lang = j.at("lang").get<std::string>();
      d.tokens = j.at("tokens").get<std::vector<std::string>>();
      const auto s = j.at("span").get<std::vector<int>>();
      if (s.size() != 2) throw FormatError("span must be [start, end]");
      d.span = {s[0], s[1]};
      if (j.contains("entities")) {
        for (const auto& t : j["entities"]) {
          d.entities.push_back({t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<int>()});
        }
      }
      out.push_back(std::move(d));
    } catch (const std::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_span_data(const std::filesystem::path& path, const std::vector<SpanDatum>& data) {
  std::ofstream out(path);
  if (!out) throw FormatError("span data: cannot write " + path.string());
  for (const auto& d : data) {
    json ents = json::array();
    for (const auto& m : d.entities) ents.push_back({m.start, m.end, m.entity_id});
    out << json{{"id", d.id}, {"lang", d.lang}, {"tokens", d.tokens},
                {"span", {d.span.first, d.span.second}}, {"entities", ents}}.dump()
        << '\n';
  }
}

std::vector<SpanDatum> mention_span_data(const std::vector<AnnotatedDocument>& docs,
                                         const EntityVocab& vocab) {
  std::vector<SpanDatum> out;
  for (const auto& doc : docs) {
    std::vector<EntityMention> mentions;
    std::vector<std::string> keys;
    for (const auto& a : doc.annotations) {
      if (auto id = vocab.resolve(doc.language, a.title)) {
        mentions.push_back({a.start, a.end, *id});
        keys.push_back(vocab.entry(*id).key);
      }
    }
    for (std::size_t i = 0; i < mentions.size(); ++i) {
      out.push_back({doc.title + "#" + keys[i], doc.language, doc.tokens,
                     {mentions[i].start, mentions[i].end}, mentions});
    }
  }
  return out;
}

FeatureSpec parse_feature_spec(const std::string& name) {
  for (auto s : {FeatureSpec::kSpanMean, FeatureSpec::kReWord, FeatureSpec::kReEntity}) {
    if (name == feature_spec_name(s)) return s;
  }
  throw ValidationError("unknown feature spec '" + name + "' (span-mean, re-word, re-entity)");
}

const char* feature_spec_name(FeatureSpec spec) {
  switch (spec) {
    case FeatureSpec::kSpanMean: return "span-mean";
    case FeatureSpec::kReWord: return "re-word";
    case FeatureSpec::kReEntity: return "re-entity";
  }
  return "?";
}

std::vector<SpanEmbedding> span_features(const Model& model, const WordVocab& words,
                                         const std::vector<SpanDatum>& data,
                                         bool use_entities) {
  auto& params = inference_params(model);
  Encoder encoder(model.config, params);
  std::vector<SpanEmbedding> out;
  out.reserve(data.size());
  for (const auto& d : data) {
    const int n = static_cast<int>(d.tokens.size());
    if (d.span.first < 0 || d.span.first >= d.span.second || d.span.second > n) {
      throw ContractError("span features: bad span for '" + d.id + "'");
    }
    EncodedSequence seq;
    seq.word_ids.push_back(WordVocab::kClsId);
    for (const auto& t : d.tokens) seq.word_ids.push_back(words.id(t));
    seq.word_ids.push_back(WordVocab::kSepId);
    if (use_entities) {
      for (const auto& m : d.entities) {
        if (static_cast<int>(seq.entity_ids.size()) >= model.config.max_entities) break;
        if (m.start < 0 || m.start >= m.end || m.end > n) {
          throw ContractError("span features: bad entity span for '" + d.id + "'");
        }
        std::vector<int> pos;
        for (int p = m.start; p < m.end; ++p) pos.push_back(p + 1);
        seq.entity_ids.push_back(m.entity_id);
        seq.entity_positions.push_back(std::move(pos));
      }
    }
    const auto ctx = encoder.encode(seq);
    out.push_back({d.id, d.lang, join(d.tokens, d.span.first, d.span.second),
                   span_embed(ctx.word_vectors, d.span.first + 1, d.span.second + 1)});
  }
  return out;
}

std::vector<SpanEmbedding> re_feature_dump(const Model& model, const WordVocab& words,
                                           const std::vector<REInstance>& data,
                                           REVariant variant, const std::string& lang) {
  // Features come from the model before any fine-tuning; the marker variant
  // still needs its marker rows, drawn from a fixed stream.
  Model prepared = model;
  WordVocab vocab = words;
  Rng rng = Rng::substream(0, "init", 1);
  prepare_re_model(prepared, vocab, variant, rng);
  Encoder encoder(prepared.config, prepared.params);
  std::vector<SpanEmbedding> out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    Graph g(false);
    const Tensor f = re_features(g, encoder, vocab, data[i], variant).value();
    const auto& d = data[i];
    out.push_back({std::to_string(i), lang,
                   join(d.tokens, d.head.first, d.head.second) + " | " +
                       join(d.tokens, d.tail.first, d.tail.second),
                   std::vector<double>(f.data().begin(), f.data().end())});
  }
  return out;
}

}  // namespace entlm
