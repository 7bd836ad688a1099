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

#include "entlm/model.h"

#include "entlm/error.h"

namespace entlm {

Model Model::create(const EncoderConfig& config, std::uint64_t seed) {
  Model model;
  model.config = config;
  Rng rng = Rng::substream(seed, "init");
  Encoder::init_parameters(config, model.params, rng);
  MlmHead::init_parameters(config, model.params, rng);
  MepHead::init_parameters(config, model.params, rng);
  return model;
}

void MlmHead::init_parameters(const EncoderConfig& config,
                              ParameterStore& store, Rng& rng) {
  const auto H = static_cast<std::size_t>(config.hidden_size);
  const auto V = static_cast<std::size_t>(config.word_vocab_size);
  store.add("mlm.dense.weight", normal_tensor({H, H}, config.init_std, rng));
  store.add("mlm.dense.bias", Tensor(Shape{H}, 0.0));
  store.add("mlm.norm.gamma", Tensor(Shape{H}, 1.0));
  store.add("mlm.norm.beta", Tensor(Shape{H}, 0.0));
  store.add("mlm.decoder.weight", normal_tensor({H, V}, config.init_std, rng));
  store.add("mlm.decoder.bias", Tensor(Shape{V}, 0.0));
}

MlmHead::MlmHead(ParameterStore& store)
    : dense_w_(&store.get("mlm.dense.weight")),
      dense_b_(&store.get("mlm.dense.bias")),
      gamma_(&store.get("mlm.norm.gamma")),
      beta_(&store.get("mlm.norm.beta")),
      decoder_w_(&store.get("mlm.decoder.weight")),
      decoder_b_(&store.get("mlm.decoder.bias")) {}

Var MlmHead::logits(Graph& g, Var hidden) const {
  Var h = gelu(linear(g, hidden, *dense_w_, dense_b_));
  h = layer_norm(h, g.param(*gamma_), g.param(*beta_), kLayerNormEps);
  return linear(g, h, *decoder_w_, decoder_b_);
}

void MepHead::init_parameters(const EncoderConfig& config,
                              ParameterStore& store, Rng& rng) {
  const auto H = static_cast<std::size_t>(config.hidden_size);
  const auto E = static_cast<std::size_t>(config.entity_emb_size);
  const auto V = static_cast<std::size_t>(config.entity_vocab_size);
  store.add("mep.dense.weight", normal_tensor({H, E}, config.init_std, rng));
  store.add("mep.dense.bias", Tensor(Shape{E}, 0.0));
  store.add("mep.norm.gamma", Tensor(Shape{E}, 1.0));
  store.add("mep.norm.beta", Tensor(Shape{E}, 0.0));
  store.add("mep.decoder.weight", normal_tensor({E, V}, config.init_std, rng));
  store.add("mep.decoder.bias", Tensor(Shape{V}, 0.0));
}

MepHead::MepHead(ParameterStore& store)
    : dense_w_(&store.get("mep.dense.weight")),
      dense_b_(&store.get("mep.dense.bias")),
      gamma_(&store.get("mep.norm.gamma")),
      beta_(&store.get("mep.norm.beta")),
      decoder_w_(&store.get("mep.decoder.weight")),
      decoder_b_(&store.get("mep.decoder.bias")) {}

Var MepHead::logits(Graph& g, Var hidden) const {
  Var h = gelu(linear(g, hidden, *dense_w_, dense_b_));
  h = layer_norm(h, g.param(*gamma_), g.param(*beta_), kLayerNormEps);
  return linear(g, h, *decoder_w_, decoder_b_);
}

int extend_word_vocab(Model& model, int count, Rng& rng) {
  if (count < 0) throw ContractError("extend_word_vocab: negative count");
  const int first = model.config.word_vocab_size;
  if (count == 0) return first;
  const auto H = static_cast<std::size_t>(model.config.hidden_size);
  const auto old_v = static_cast<std::size_t>(first);
  const auto new_v = old_v + static_cast<std::size_t>(count);

  const Tensor& emb = model.params.get("embeddings.word").value;
  Tensor grown({new_v, H});
  std::copy(emb.data().begin(), emb.data().end(), grown.data().begin());
  for (std::size_t i = old_v * H; i < new_v * H; ++i) {
    grown[i] = rng.normal(0.0, model.config.init_std);
  }
  model.params.reset("embeddings.word", std::move(grown));

  if (Parameter* dec = model.params.find("mlm.decoder.weight")) {
    Tensor w({H, new_v});
    for (std::size_t r = 0; r < H; ++r) {
      for (std::size_t c = 0; c < new_v; ++c) {
        w.at(r, c) = c < old_v ? dec->value.at(r, c)
                               : rng.normal(0.0, model.config.init_std);
      }
    }
    model.params.reset("mlm.decoder.weight", std::move(w));
    const Tensor& b = model.params.get("mlm.decoder.bias").value;
    Tensor nb(Shape{new_v}, 0.0);
    std::copy(b.data().begin(), b.data().end(), nb.data().begin());
    model.params.reset("mlm.decoder.bias", std::move(nb));
  }
  model.config.word_vocab_size = static_cast<int>(new_v);
  return first;
}

}  // namespace entlm
