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
#include <numeric>
#include <filesystem>

#include "doctest.h"
#include "entlm/error.h"
#include "support/tiny_model.h"

namespace entlm {
namespace {

SpanEmbedding emb(std::string id, std::string lang, std::vector<double> v) {
  return {std::move(id), std::move(lang), "", std::move(v)};
}

std::vector<SpanEmbedding> random_embeddings(int n, int dim, Rng& rng,
                                             const std::vector<std::string>& langs) {
  std::vector<SpanEmbedding> out;
  for (int i = 0; i < n; ++i) {
    std::vector<double> v(static_cast<std::size_t>(dim));
    for (double& x : v) x = rng.normal();
    out.push_back(emb(std::to_string(i), langs[static_cast<std::size_t>(i) % langs.size()], v));
  }
  return out;
}

TEST_CASE("span mean pooling") {
  const Tensor t({3, 2}, std::vector<double>{1, 0, 0, 1, 4, 4});
  CHECK(span_embed(t, 0, 2) == std::vector<double>{0.5, 0.5});
  CHECK(span_embed(t, 2, 3) == std::vector<double>{4, 4});
  const Tensor same({2, 2}, std::vector<double>{0.25, -3, 0.25, -3});
  CHECK(span_embed(same, 0, 2) == std::vector<double>{0.25, -3});
  CHECK_THROWS_AS(span_embed(t, 1, 1), ContractError);
  CHECK_THROWS_AS(span_embed(t, 2, 4), ContractError);
}

TEST_CASE("MRR basics") {
  const std::vector<SpanEmbedding> q{emb("a", "en", {1, 0, 0}), emb("b", "en", {0, 1, 0})};
  const std::vector<SpanEmbedding> pool{emb("a", "de", {1, 0, 0}), emb("b", "de", {0, 1, 0}),
                                        emb("c", "de", {0, 0, 1})};
  CHECK(cwr_mrr(q, pool, {0, 1}) == 1.0);
  // Gold always second: the exact match sits ahead of it.
  const std::vector<SpanEmbedding> pool2{emb("x", "de", {1, 0, 0}), emb("y", "de", {0, 1, 0}),
                                         emb("g1", "de", {0.9, 0.1, 0}),
                                         emb("g2", "de", {0.1, 0.9, 0})};
  CHECK(cwr_mrr(q, pool2, {2, 3}) == 0.5);
  // Exact ties fall to the lower pool index.
  const std::vector<SpanEmbedding> tied{emb("t0", "de", {2, 0, 0}), emb("t1", "de", {1, 0, 0})};
  CHECK(cwr_mrr({q[0]}, tied, {1}) == 0.5);
  CHECK(cwr_mrr({q[0]}, tied, {0}) == 1.0);
  CHECK_THROWS_AS(cwr_mrr({emb("z", "en", {0, 0, 0})}, pool, {0}), ContractError);
}

TEST_CASE("match by id drops queries without a parallel item") {
  const std::vector<SpanEmbedding> q{emb("a", "en", {1}), emb("zz", "en", {1}), emb("b", "en", {1})};
  const std::vector<SpanEmbedding> pool{emb("b", "de", {1}), emb("a", "de", {1})};
  const auto [kept, gold] = match_by_id(q, pool);
  REQUIRE(kept.size() == 2);
  CHECK(gold == std::vector<int>{1, 0});
}

TEST_CASE("random baseline MRR is H_n / n") {
  CHECK(random_mrr(1) == 1.0);
  CHECK(std::abs(random_mrr(4) - (1 + 0.5 + 1.0 / 3 + 0.25) / 4) < 1e-15);
}

TEST_CASE("MRR is invariant under a common rotation") {
  Rng rng(5);
  auto q = random_embeddings(20, 3, rng, {"en"});
  auto p = random_embeddings(20, 3, rng, {"de"});
  for (int i = 0; i < 20; ++i) {
    for (int d = 0; d < 3; ++d) p[i].vector[d] += 0.8 * q[i].vector[d];
  }
  std::vector<int> gold(20);
  std::iota(gold.begin(), gold.end(), 0);
  const double before = cwr_mrr(q, p, gold);
  const double c = std::cos(0.7), s = std::sin(0.7);
  auto rotate = [&](std::vector<SpanEmbedding>& xs) {
    for (auto& x : xs) {
      const double a = x.vector[0], b = x.vector[1];
      x.vector[0] = c * a - s * b;
      x.vector[1] = s * a + c * b;
    }
  };
  rotate(q);
  rotate(p);
  CHECK(std::abs(cwr_mrr(q, p, gold) - before) < 1e-12);
}

TEST_CASE("hand-built modularity values") {
  KnnGraph within{{"en", "en", "de", "de"}, {{0, 1}, {2, 3}}};
  CHECK(std::abs(*modularity(within) - 0.5) < 1e-12);
  KnnGraph bipartite{{"en", "en", "de", "de"}, {{0, 2}, {0, 3}, {1, 2}, {1, 3}}};
  CHECK(std::abs(*modularity(bipartite) + 0.5) < 1e-12);
  KnnGraph mono{{"en", "en"}, {{0, 1}}};
  CHECK_FALSE(modularity(mono).has_value());
}

TEST_CASE("k-NN graph is symmetric, loop free, and grows with k") {
  Rng rng(8);
  const auto nodes = random_embeddings(40, 4, rng, {"en", "de"});
  std::set<std::pair<int, int>> prev;
  for (int k = 1; k <= 6; ++k) {
    const auto g = build_knn_graph(nodes, k);
    for (const auto& [a, b] : g.edges) CHECK(a < b);
    CHECK(std::includes(g.edges.begin(), g.edges.end(), prev.begin(), prev.end()));
    CHECK(g.edges.size() >= static_cast<std::size_t>(40 * k / 2));
    const auto q = modularity(g);
    REQUIRE(q.has_value());
    CHECK(*q >= -1.0);
    CHECK(*q < 1.0);
    prev = g.edges;
  }
  // Edge (u, v) exists iff one is among the other's k nearest.
  const auto g = build_knn_graph(nodes, 2);
  for (int i = 0; i < 40; ++i) {
    std::vector<std::pair<double, int>> sims;
    for (int j = 0; j < 40; ++j) {
      if (j != i) sims.emplace_back(-cosine(nodes[i].vector, nodes[j].vector), j);
    }
    std::sort(sims.begin(), sims.end());
    for (int t = 0; t < 2; ++t) {
      const int j = sims[t].second;
      CHECK(g.edges.count({std::min(i, j), std::max(i, j)}) == 1);
    }
  }
}

TEST_CASE("shuffled labels give near-zero modularity") {
  Rng rng(21);
  auto nodes = random_embeddings(300, 8, rng, {"en"});
  auto g = build_knn_graph(nodes, 3);
  for (int trial = 0; trial < 100; ++trial) {
    for (auto& label : g.labels) label = rng.uniform_int(2) == 0 ? "en" : "de";
    const auto q = modularity(g);
    REQUIRE(q.has_value());
    CHECK(std::abs(*q) < 0.1);
  }
}

TEST_CASE("embedding files reload bit-identically") {
  Rng rng(3);
  auto xs = random_embeddings(10, 5, rng, {"en", "ja"});
  xs[3].text = "東京 \"quoted\"";
  xs[4].vector[0] = 1e-300;
  xs[4].vector[1] = -0.1;
  const auto path = std::filesystem::temp_directory_path() / "entlm_emb.jsonl";
  write_embeddings(path, xs);
  const auto back = read_embeddings(path);
  std::filesystem::remove(path);
  REQUIRE(back.size() == xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    CHECK(back[i].id == xs[i].id);
    CHECK(back[i].lang == xs[i].lang);
    CHECK(back[i].text == xs[i].text);
    CHECK(back[i].vector == xs[i].vector);
  }
}

TEST_CASE("feature dumps") {
  WordVocab words = testing::tiny_words({"a", "b", "c", "d"});
  Model m = Model::create(testing::tiny_config(words.size(), 6), 4);
  const std::vector<REInstance> re{{{"a", "b", "c", "d"}, {0, 1}, {2, 4}, "r"}};
  for (auto v : {REVariant::kEntityMask, REVariant::kWordMarkers}) {
    const auto f = re_feature_dump(m, words, re, v, "en");
    REQUIRE(f.size() == 1);
    CHECK(f[0].vector.size() == 2 * static_cast<std::size_t>(m.config.hidden_size));
  }
  CHECK(words.size() == 9);  // the caller's vocabulary is untouched

  const std::vector<SpanDatum> spans{{"s0", "en", {"a", "b", "c"}, {1, 3}, {{1, 3, 5}}}};
  const auto plain = span_features(m, words, spans, false);
  const auto with = span_features(m, words, spans, true);
  CHECK(plain[0].text == "b c");
  CHECK(plain[0].vector.size() == static_cast<std::size_t>(m.config.hidden_size));
  CHECK(plain[0].vector != with[0].vector);
  // Oracle: mean of encoder rows 2 and 3.
  EncodedSequence seq;
  seq.word_ids = {WordVocab::kClsId, words.id("a"), words.id("b"), words.id("c"),
                  WordVocab::kSepId};
  const auto out = Encoder(m.config, m.params).encode(seq);
  for (std::size_t c = 0; c < plain[0].vector.size(); ++c) {
    CHECK(plain[0].vector[c] == (out.word_vectors.at(2, c) + out.word_vectors.at(3, c)) / 2.0);
  }
  CHECK_THROWS_AS(parse_feature_spec("cls"), ValidationError);
  CHECK(parse_feature_spec("re-entity") == FeatureSpec::kReEntity);
}

}  // namespace
}  // namespace entlm
