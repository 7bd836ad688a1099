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

#include "entlm/encoder.h"

#include <cmath>
#include <numeric>

#include "doctest.h"
#include "entlm/error.h"
#include "entlm/model.h"
#include "support/random_inputs.h"
#include "support/reference_encoder.h"

namespace entlm {
namespace {

EncoderConfig tiny_config() {
  EncoderConfig c;
  c.word_vocab_size = 20;
  c.entity_vocab_size = 8;
  c.hidden_size = 8;
  c.entity_emb_size = 4;
  c.layers = 2;
  c.heads = 2;
  c.ffn_size = 12;
  c.max_positions = 10;
  c.max_entities = 4;
  c.dropout = 0.0;
  c.init_std = 0.3;
  return c;
}

TEST_CASE("config validation") {
  EncoderConfig c = tiny_config();
  CHECK_NOTHROW(c.validate());
  c.heads = 3;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = tiny_config();
  c.entity_emb_size = 9;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = tiny_config();
  c.max_positions = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = tiny_config();
  c.type_count = 1;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("embed_words sums token, type and position embeddings") {
  const EncoderConfig c = tiny_config();
  Model model = Model::create(c, 1);
  Encoder enc(c, model.params);
  const int ids[] = {3, 3, 5};
  const int pos[] = {0, 1, 2};
  const int types[] = {0, 0, 0};
  Graph g;
  const Tensor out = enc.embed_words(g, ids, pos, types).value();
  CHECK(out.shape() == Shape{3, 8});
  const Tensor& w = model.params.get("embeddings.word").value;
  const Tensor& p = model.params.get("embeddings.position").value;
  const Tensor& t = model.params.get("embeddings.token_type").value;
  for (std::size_t j = 0; j < 8; ++j) {
    CHECK(out.at(0, j) == doctest::Approx(w.at(3, j) + t.at(0, j) + p.at(0, j)));
  }
  // Same id at two positions differs exactly by the position difference.
  bool differs = false;
  for (std::size_t j = 0; j < 8; ++j) {
    if (out.at(0, j) != out.at(1, j)) differs = true;
  }
  CHECK(differs);

  // Equal position rows make equal outputs for the same id.
  Tensor same_pos = p;
  for (std::size_t j = 0; j < 8; ++j) same_pos.at(1, j) = same_pos.at(0, j);
  model.params.reset("embeddings.position", same_pos);
  Graph g2;
  const Tensor out2 = enc.embed_words(g2, ids, pos, types).value();
  for (std::size_t j = 0; j < 8; ++j) CHECK(out2.at(0, j) == out2.at(1, j));
}

TEST_CASE("embed_words with zero tables is zero") {
  const EncoderConfig c = tiny_config();
  Model model = Model::create(c, 1);
  for (const char* name :
       {"embeddings.word", "embeddings.position", "embeddings.token_type"}) {
    Parameter& p = model.params.get(name);
    p.value.fill(0.0);
  }
  Encoder enc(c, model.params);
  const int ids[] = {1, 2, 3, 4};
  const int pos[] = {0, 1, 2, 3};
  const int types[] = {0, 0, 0, 0};
  Graph g;
  const Tensor out = enc.embed_words(g, ids, pos, types).value();
  CHECK(out.shape() == Shape{4, 8});
  for (double v : out.data()) CHECK(v == 0.0);
  const int bad[] = {1, 2, 3, 20};
  CHECK_THROWS_AS(enc.embed_words(g, bad, pos, types), VocabularyError);
}

TEST_CASE("entity position term sums mention positions") {
  const EncoderConfig c = tiny_config();
  Model model = Model::create(c, 2);
  model.params.get("entity_embeddings.projection").value.fill(0.0);
  Encoder enc(c, model.params);
  const Tensor& P = model.params.get("embeddings.position").value;
  const Tensor& T = model.params.get("entity_embeddings.token_type").value;
  const int ids[] = {4, 5};
  const int types[] = {1, 1};
  const std::vector<std::vector<int>> positions = {{3, 4, 5}, {7}};
  Graph g;
  const Tensor out = enc.embed_entities(g, ids, positions, types).value();
  for (std::size_t j = 0; j < 8; ++j) {
    CHECK(out.at(0, j) ==
          doctest::Approx(T.at(1, j) + P.at(3, j) + P.at(4, j) + P.at(5, j)));
    CHECK(out.at(1, j) == doctest::Approx(T.at(1, j) + P.at(7, j)));
  }
  const std::vector<std::vector<int>> empty = {{}, {1}};
  CHECK_THROWS_AS(enc.embed_entities(g, ids, empty, types), ContractError);
}

TEST_CASE("mean position mode averages mention positions") {
  EncoderConfig c = tiny_config();
  c.entity_position_mode = EntityPositionMode::kMean;
  Model model = Model::create(c, 2);
  model.params.get("entity_embeddings.projection").value.fill(0.0);
  Encoder enc(c, model.params);
  const Tensor& P = model.params.get("embeddings.position").value;
  const Tensor& T = model.params.get("entity_embeddings.token_type").value;
  const int ids[] = {4};
  const int types[] = {1};
  const std::vector<std::vector<int>> positions = {{2, 6}};
  Graph g;
  const Tensor out = enc.embed_entities(g, ids, positions, types).value();
  for (std::size_t j = 0; j < 8; ++j) {
    CHECK(out.at(0, j) ==
          doctest::Approx(T.at(1, j) + 0.5 * (P.at(2, j) + P.at(6, j))));
  }
}

TEST_CASE("projected entity embedding enters additively") {
  const EncoderConfig c = tiny_config();
  Model model = Model::create(c, 2);
  Encoder enc(c, model.params);
  const Tensor& E = model.params.get("entity_embeddings.entity").value;
  const Tensor& W = model.params.get("entity_embeddings.projection").value;
  const Tensor& P = model.params.get("embeddings.position").value;
  const Tensor& T = model.params.get("entity_embeddings.token_type").value;
  const int ids[] = {6};
  const int types[] = {1};
  const std::vector<std::vector<int>> positions = {{1}};
  Graph g;
  const Tensor out = enc.embed_entities(g, ids, positions, types).value();
  for (std::size_t j = 0; j < 8; ++j) {
    double proj = 0.0;
    for (std::size_t k = 0; k < 4; ++k) proj += E.at(6, k) * W.at(k, j);
    CHECK(out.at(0, j) == doctest::Approx(proj + T.at(1, j) + P.at(1, j)));
  }
}

TEST_CASE("word-only encoding matches the reference transformer") {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const EncoderConfig c = testing::random_config(rng);
    Model model = Model::create(c, trial);
    Encoder enc(c, model.params);
    EncodedSequence seq = testing::random_sequence(c, rng);
    seq.entity_ids.clear();
    seq.entity_positions.clear();
    const ContextualOutput out = enc.encode(seq);
    const auto ref =
        testing::reference_word_encoder(c, model.params, seq.word_ids);
    CHECK(out.entity_vectors.rows() == 0);
    double worst = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
      for (std::size_t j = 0; j < ref[i].size(); ++j) {
        worst = std::max(worst, std::abs(out.word_vectors.at(i, j) - ref[i][j]));
      }
    }
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("entity order carries no information") {
  Rng rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    const EncoderConfig c = testing::random_config(rng);
    Model model = Model::create(c, 100 + trial);
    Encoder enc(c, model.params);
    const EncodedSequence seq = testing::random_sequence(c, rng, 2);
    const std::size_t n = seq.entity_count();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n; i > 1; --i) {
      std::swap(perm[i - 1], perm[rng.uniform_int(i)]);
    }
    EncodedSequence shuffled = seq;
    for (std::size_t i = 0; i < n; ++i) {
      shuffled.entity_ids[i] = seq.entity_ids[perm[i]];
      shuffled.entity_positions[i] = seq.entity_positions[perm[i]];
    }
    const ContextualOutput a = enc.encode(seq);
    const ContextualOutput b = enc.encode(shuffled);
    CHECK(max_abs_diff(a.word_vectors, b.word_vectors) < 1e-10);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < a.entity_vectors.cols(); ++j) {
        worst = std::max(worst, std::abs(b.entity_vectors.at(i, j) -
                                         a.entity_vectors.at(perm[i], j)));
      }
    }
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("encoding is deterministic without dropout") {
  const EncoderConfig c = tiny_config();
  Model model = Model::create(c, 7);
  Encoder enc(c, model.params);
  EncodedSequence seq;
  seq.word_ids = {1, 2, 3, 4, 5};
  seq.entity_ids = {5, 6};
  seq.entity_positions = {{0, 1}, {3}};
  const ContextualOutput a = enc.encode(seq);
  const ContextualOutput b = enc.encode(seq);
  CHECK(bit_identical(a.word_vectors, b.word_vectors));
  CHECK(bit_identical(a.entity_vectors, b.entity_vectors));
  CHECK(a.word_vectors.shape() == Shape{5, 8});
  CHECK(a.entity_vectors.shape() == Shape{2, 8});
  CHECK(a.word_vectors.all_finite());
}

TEST_CASE("seeded dropout is reproducible") {
  EncoderConfig c = tiny_config();
  c.dropout = 0.2;
  Model model = Model::create(c, 7);
  Encoder enc(c, model.params);
  EncodedSequence seq;
  seq.word_ids = {1, 2, 3, 4, 5};
  seq.entity_ids = {5};
  seq.entity_positions = {{2}};
  auto run = [&](std::uint64_t seed) {
    Rng rng(seed);
    Graph g;
    return enc.forward(g, seq, {.training = true, .dropout_rng = &rng})
        .word_vectors.value();
  };
  CHECK(bit_identical(run(4), run(4)));
  CHECK_FALSE(bit_identical(run(4), run(5)));
  Graph g;
  CHECK_THROWS_AS(enc.forward(g, seq, {.training = true}), ContractError);
}

TEST_CASE("capacity and vocabulary limits") {
  const EncoderConfig c = tiny_config();
  Model model = Model::create(c, 7);
  Encoder enc(c, model.params);
  EncodedSequence seq;
  seq.word_ids.assign(11, 1);
  CHECK_THROWS_AS(enc.encode(seq), CapacityError);
  seq.word_ids.assign(3, 1);
  seq.entity_ids = {1, 1, 1, 1, 1};
  seq.entity_positions.assign(5, {0});
  CHECK_THROWS_AS(enc.encode(seq), CapacityError);
  seq.entity_ids = {8};
  seq.entity_positions = {{0}};
  CHECK_THROWS_AS(enc.encode(seq), VocabularyError);
  seq.entity_ids = {1};
  seq.entity_positions = {{3}};
  CHECK_THROWS_AS(enc.encode(seq), ContractError);
}

TEST_CASE("padded tokens do not influence real tokens") {
  const EncoderConfig c = tiny_config();
  Model model = Model::create(c, 9);
  Encoder enc(c, model.params);
  EncodedSequence seq;
  seq.word_ids = {1, 2, 3};
  seq.entity_ids = {4};
  seq.entity_positions = {{1}};
  EncodedSequence padded = seq;
  padded.word_ids.push_back(0);
  padded.word_mask = {1, 1, 1, 0};
  padded.entity_ids.push_back(0);
  padded.entity_positions.push_back({3});
  padded.entity_mask = {1, 0};
  const ContextualOutput a = enc.encode(seq);
  const ContextualOutput b = enc.encode(padded);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 8; ++j) {
      CHECK(std::abs(a.word_vectors.at(i, j) - b.word_vectors.at(i, j)) < 1e-12);
    }
  }
  for (std::size_t j = 0; j < 8; ++j) {
    CHECK(std::abs(a.entity_vectors.at(0, j) - b.entity_vectors.at(0, j)) <
          1e-12);
  }
}

TEST_CASE("gradient check through the encoder") {
  const EncoderConfig c = tiny_config();
  Model model = Model::create(c, 13);
  Encoder enc(c, model.params);
  EncodedSequence seq;
  seq.word_ids = {1, 7, 3, 9, 2};
  seq.entity_ids = {3, 5};
  seq.entity_positions = {{1, 2}, {4}};
  Rng proj_rng(77);
  const Tensor pw = normal_tensor({5, 8}, 1.0, proj_rng);
  const Tensor pe = normal_tensor({2, 8}, 1.0, proj_rng);
  auto build = [&](Graph& g) {
    EncoderVars out = enc.forward(g, seq);
    return add(sum(mul(out.word_vectors, g.constant(pw))),
               sum(mul(out.entity_vectors, g.constant(pe))));
  };
  std::vector<Parameter*> params;
  for (auto& [name, p] : model.params) {
    if (name.rfind("mlm.", 0) == 0 || name.rfind("mep.", 0) == 0) continue;
    params.push_back(&p);
  }
  const auto result =
      grad_check(build, params, {.eps = 1e-5, .coords_per_param = 6});
  CAPTURE(result.worst_param);
  CAPTURE(result.analytic);
  CAPTURE(result.numeric);
  CHECK(result.max_rel_error < 1e-4);
}

}  // namespace
}  // namespace entlm
