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
#include <string>

#include "entlm/error.h"

namespace entlm {
namespace {

std::string layer_prefix(int i) {
  return "encoder.layer." + std::to_string(i) + ".";
}

Tensor ones(std::size_t n) { return Tensor(Shape{n}, 1.0); }
Tensor zeros(std::size_t n) { return Tensor(Shape{n}, 0.0); }

void check_ids(const char* what, std::span<const int> ids, int limit) {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= limit) {
      throw VocabularyError(std::string(what) + " id " +
                            std::to_string(ids[i]) + " at index " +
                            std::to_string(i) + " outside [0, " +
                            std::to_string(limit) + ")");
    }
  }
}

}  // namespace

void EncoderConfig::validate() const {
  auto fail = [](const std::string& msg) {
    throw ValidationError("EncoderConfig: " + msg);
  };
  if (word_vocab_size < 1) fail("word_vocab_size must be >= 1");
  if (entity_vocab_size < 1) fail("entity_vocab_size must be >= 1");
  if (hidden_size < 1 || entity_emb_size < 1) fail("sizes must be >= 1");
  if (heads < 1 || hidden_size % heads != 0) {
    fail("hidden_size must be divisible by heads");
  }
  if (entity_emb_size > hidden_size) {
    fail("entity_emb_size must not exceed hidden_size");
  }
  if (layers < 0) fail("layers must be >= 0");
  if (ffn_size < 1) fail("ffn_size must be >= 1");
  if (max_positions < 1) fail("max_positions must be >= 1");
  if (type_count < 2) fail("type_count must be >= 2");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
  if (max_entities < 0) fail("max_entities must be >= 0");
  if (!(init_std >= 0.0)) fail("init_std must be >= 0");
}

void EncodedSequence::validate(const EncoderConfig& config) const {
  const std::size_t m = word_ids.size();
  const std::size_t n = entity_ids.size();
  if (m > static_cast<std::size_t>(config.max_positions)) {
    throw CapacityError("sequence has " + std::to_string(m) +
                        " words; max_positions is " +
                        std::to_string(config.max_positions));
  }
  if (n > static_cast<std::size_t>(config.max_entities)) {
    throw CapacityError("sequence has " + std::to_string(n) +
                        " entities; max_entities is " +
                        std::to_string(config.max_entities));
  }
  if (entity_positions.size() != n) {
    throw ContractError("entity_positions has " +
                        std::to_string(entity_positions.size()) +
                        " sets for " + std::to_string(n) + " entities");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (entity_positions[i].empty()) {
      throw ContractError("entity " + std::to_string(i) +
                          " has an empty mention position set");
    }
    for (int p : entity_positions[i]) {
      if (p < 0 || static_cast<std::size_t>(p) >= m) {
        throw ContractError("entity " + std::to_string(i) + " position " +
                            std::to_string(p) + " outside [0, " +
                            std::to_string(m) + ")");
      }
    }
  }
  if (!word_type_ids.empty() && word_type_ids.size() != m) {
    throw ContractError("word_type_ids length differs from word_ids");
  }
  if (!entity_type_ids.empty() && entity_type_ids.size() != n) {
    throw ContractError("entity_type_ids length differs from entity_ids");
  }
  if (!word_mask.empty() && word_mask.size() != m) {
    throw ContractError("word_mask length differs from word_ids");
  }
  if (!entity_mask.empty() && entity_mask.size() != n) {
    throw ContractError("entity_mask length differs from entity_ids");
  }
  check_ids("word", word_ids, config.word_vocab_size);
  check_ids("entity", entity_ids, config.entity_vocab_size);
  check_ids("word type", word_type_ids, config.type_count);
  check_ids("entity type", entity_type_ids, config.type_count);
}

Tensor normal_tensor(Shape shape, double stddev, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.normal(0.0, stddev);
  return t;
}

Var linear(Graph& g, Var x, Parameter& weight, Parameter* bias) {
  Var y = matmul(x, g.param(weight));
  if (bias != nullptr) y = add(y, g.param(*bias));
  return y;
}

Tensor take_rows(const Tensor& x, std::span<const int> rows) {
  const std::size_t cols = x.cols();
  Tensor out({rows.size(), cols});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || static_cast<std::size_t>(rows[i]) >= x.rows()) {
      throw DimensionError("take_rows: row " + std::to_string(rows[i]) +
                           " outside axis 0 (" + std::to_string(x.rows()) +
                           ")");
    }
    auto src = x.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

void Encoder::init_parameters(const EncoderConfig& config,
                              ParameterStore& store, Rng& rng) {
  config.validate();
  const auto H = static_cast<std::size_t>(config.hidden_size);
  const auto E = static_cast<std::size_t>(config.entity_emb_size);
  const auto F = static_cast<std::size_t>(config.ffn_size);
  const auto T = static_cast<std::size_t>(config.type_count);
  const double sd = config.init_std;
  store.add("embeddings.word",
            normal_tensor({static_cast<std::size_t>(config.word_vocab_size), H},
                          sd, rng));
  store.add("embeddings.position",
            normal_tensor({static_cast<std::size_t>(config.max_positions), H},
                          sd, rng));
  store.add("embeddings.token_type", normal_tensor({T, H}, sd, rng));
  store.add("embeddings.norm.gamma", ones(H));
  store.add("embeddings.norm.beta", zeros(H));
  store.add(
      "entity_embeddings.entity",
      normal_tensor({static_cast<std::size_t>(config.entity_vocab_size), E},
                    sd, rng));
  store.add("entity_embeddings.projection", normal_tensor({E, H}, sd, rng));
  store.add("entity_embeddings.token_type", normal_tensor({T, H}, sd, rng));
  store.add("entity_embeddings.norm.gamma", ones(H));
  store.add("entity_embeddings.norm.beta", zeros(H));
  for (int i = 0; i < config.layers; ++i) {
    const std::string p = layer_prefix(i);
    store.add(p + "attention.query.weight", normal_tensor({H, H}, sd, rng));
    store.add(p + "attention.query.bias", zeros(H));
    // No key bias: it shifts every score in a row equally and cancels in
    // the softmax.
    store.add(p + "attention.key.weight", normal_tensor({H, H}, sd, rng));
    store.add(p + "attention.value.weight", normal_tensor({H, H}, sd, rng));
    store.add(p + "attention.value.bias", zeros(H));
    store.add(p + "attention.output.weight", normal_tensor({H, H}, sd, rng));
    store.add(p + "attention.output.bias", zeros(H));
    store.add(p + "attention.norm.gamma", ones(H));
    store.add(p + "attention.norm.beta", zeros(H));
    store.add(p + "ffn.intermediate.weight", normal_tensor({H, F}, sd, rng));
    store.add(p + "ffn.intermediate.bias", zeros(F));
    store.add(p + "ffn.output.weight", normal_tensor({F, H}, sd, rng));
    store.add(p + "ffn.output.bias", zeros(H));
    store.add(p + "ffn.norm.gamma", ones(H));
    store.add(p + "ffn.norm.beta", zeros(H));
  }
}

Encoder::Encoder(EncoderConfig config, ParameterStore& store)
    : config_(std::move(config)) {
  config_.validate();
  word_emb_ = &store.get("embeddings.word");
  position_emb_ = &store.get("embeddings.position");
  word_type_emb_ = &store.get("embeddings.token_type");
  word_gamma_ = &store.get("embeddings.norm.gamma");
  word_beta_ = &store.get("embeddings.norm.beta");
  entity_emb_ = &store.get("entity_embeddings.entity");
  entity_proj_ = &store.get("entity_embeddings.projection");
  entity_type_emb_ = &store.get("entity_embeddings.token_type");
  entity_gamma_ = &store.get("entity_embeddings.norm.gamma");
  entity_beta_ = &store.get("entity_embeddings.norm.beta");
  for (int i = 0; i < config_.layers; ++i) {
    const std::string p = layer_prefix(i);
    layers_.push_back(Layer{
        &store.get(p + "attention.query.weight"),
        &store.get(p + "attention.query.bias"),
        &store.get(p + "attention.key.weight"),
        &store.get(p + "attention.value.weight"),
        &store.get(p + "attention.value.bias"),
        &store.get(p + "attention.output.weight"),
        &store.get(p + "attention.output.bias"),
        &store.get(p + "attention.norm.gamma"),
        &store.get(p + "attention.norm.beta"),
        &store.get(p + "ffn.intermediate.weight"),
        &store.get(p + "ffn.intermediate.bias"),
        &store.get(p + "ffn.output.weight"),
        &store.get(p + "ffn.output.bias"),
        &store.get(p + "ffn.norm.gamma"),
        &store.get(p + "ffn.norm.beta"),
    });
  }
  if (word_emb_->value.rows() !=
      static_cast<std::size_t>(config_.word_vocab_size)) {
    throw ContractError("Encoder: word embedding rows do not match config");
  }
  if (entity_emb_->value.rows() !=
      static_cast<std::size_t>(config_.entity_vocab_size)) {
    throw ContractError("Encoder: entity embedding rows do not match config");
  }
}

Var Encoder::embed_words(Graph& g, std::span<const int> ids,
                         std::span<const int> positions,
                         std::span<const int> type_ids) const {
  if (positions.size() != ids.size() || type_ids.size() != ids.size()) {
    throw ContractError("embed_words: ids, positions and type ids differ in "
                        "length");
  }
  check_ids("word", ids, config_.word_vocab_size);
  check_ids("position", positions, config_.max_positions);
  check_ids("word type", type_ids, config_.type_count);
  Var tokens = gather_rows(g.param(*word_emb_), ids);
  Var pos = gather_rows(g.param(*position_emb_), positions);
  Var types = gather_rows(g.param(*word_type_emb_), type_ids);
  return add(add(tokens, types), pos);
}

Var Encoder::embed_entities(Graph& g, std::span<const int> ids,
                            const std::vector<std::vector<int>>& positions,
                            std::span<const int> type_ids) const {
  if (positions.size() != ids.size() || type_ids.size() != ids.size()) {
    throw ContractError("embed_entities: ids, positions and type ids differ "
                        "in length");
  }
  check_ids("entity", ids, config_.entity_vocab_size);
  check_ids("entity type", type_ids, config_.type_count);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (positions[i].empty()) {
      throw ContractError("embed_entities: entity " + std::to_string(i) +
                          " has an empty mention position set");
    }
    check_ids("entity position", positions[i], config_.max_positions);
  }
  Var tokens = gather_rows(g.param(*entity_emb_), ids);
  Var projected = matmul(tokens, g.param(*entity_proj_));
  Var types = gather_rows(g.param(*entity_type_emb_), type_ids);
  Var pos = bag_rows(g.param(*position_emb_), positions,
                     config_.entity_position_mode == EntityPositionMode::kMean);
  return add(add(projected, types), pos);
}

Var Encoder::maybe_dropout(Var x, const ForwardOptions& options) const {
  if (!options.training || config_.dropout == 0.0) return x;
  if (options.dropout_rng == nullptr) {
    throw ContractError("Encoder: training with dropout needs an RNG");
  }
  return dropout(x, config_.dropout, *options.dropout_rng);
}

Var Encoder::layer_forward(Graph& g, const Layer& layer, Var x,
                           const Var* mask,
                           const ForwardOptions& options) const {
  const auto H = static_cast<std::size_t>(config_.hidden_size);
  const auto heads = static_cast<std::size_t>(config_.heads);
  const std::size_t head_dim = H / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));

  Var q = linear(g, x, *layer.query_w, layer.query_b);
  Var k = linear(g, x, *layer.key_w, nullptr);
  Var v = linear(g, x, *layer.value_w, layer.value_b);
  std::vector<Var> contexts;
  contexts.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    Var qh = slice_cols(q, h * head_dim, head_dim);
    Var kh = slice_cols(k, h * head_dim, head_dim);
    Var vh = slice_cols(v, h * head_dim, head_dim);
    Var scores = scale(matmul(qh, transpose(kh)), inv_sqrt);
    if (mask != nullptr) scores = add(scores, *mask);
    Var probs = maybe_dropout(softmax_rows(scores), options);
    contexts.push_back(matmul(probs, vh));
  }
  Var context = heads == 1 ? contexts[0] : concat_cols(contexts);
  Var attn = maybe_dropout(
      linear(g, context, *layer.output_w, layer.output_b), options);
  x = layer_norm(add(x, attn), g.param(*layer.attn_gamma),
                 g.param(*layer.attn_beta), kLayerNormEps);
  Var ffn = gelu(linear(g, x, *layer.ffn_in_w, layer.ffn_in_b));
  ffn = maybe_dropout(linear(g, ffn, *layer.ffn_out_w, layer.ffn_out_b),
                      options);
  return layer_norm(add(x, ffn), g.param(*layer.ffn_gamma),
                    g.param(*layer.ffn_beta), kLayerNormEps);
}

EncoderVars Encoder::forward(Graph& g, const EncodedSequence& seq,
                             const ForwardOptions& options) const {
  seq.validate(config_);
  const std::size_t m = seq.word_count();
  const std::size_t n = seq.entity_count();
  const auto H = static_cast<std::size_t>(config_.hidden_size);

  std::vector<int> positions(m);
  for (std::size_t i = 0; i < m; ++i) positions[i] = static_cast<int>(i);
  std::vector<int> word_types = seq.word_type_ids;
  if (word_types.empty()) word_types.assign(m, kWordTypeId);
  Var words = embed_words(g, seq.word_ids, positions, word_types);
  words = maybe_dropout(layer_norm(words, g.param(*word_gamma_),
                                   g.param(*word_beta_), kLayerNormEps),
                        options);
  Var x = words;
  if (n > 0) {
    std::vector<int> entity_types = seq.entity_type_ids;
    if (entity_types.empty()) entity_types.assign(n, kEntityTypeId);
    Var ents =
        embed_entities(g, seq.entity_ids, seq.entity_positions, entity_types);
    ents = maybe_dropout(layer_norm(ents, g.param(*entity_gamma_),
                                    g.param(*entity_beta_), kLayerNormEps),
                         options);
    const Var parts[] = {words, ents};
    x = concat_rows(parts);
  }

  const bool masked = !seq.word_mask.empty() || !seq.entity_mask.empty();
  Var mask;
  if (masked) {
    // Large negative additive scores zero out padded keys after exp().
    Tensor bias(Shape{m + n}, 0.0);
    for (std::size_t i = 0; i < seq.word_mask.size(); ++i) {
      if (seq.word_mask[i] == 0) bias[i] = -1e30;
    }
    for (std::size_t i = 0; i < seq.entity_mask.size(); ++i) {
      if (seq.entity_mask[i] == 0) bias[m + i] = -1e30;
    }
    mask = g.constant(std::move(bias));
  }
  for (const Layer& layer : layers_) {
    x = layer_forward(g, layer, x, masked ? &mask : nullptr, options);
  }
  if (n == 0) {
    return {x, g.constant(Tensor({0, H}))};
  }
  return {slice_rows(x, 0, m), slice_rows(x, m, n)};
}

ContextualOutput Encoder::encode(const EncodedSequence& seq) const {
  Graph g(false);
  EncoderVars out = forward(g, seq);
  return {out.word_vectors.value(), out.entity_vectors.value()};
}

}  // namespace entlm
