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

#include "entlm/ner.h"

#include <algorithm>
#include <fstream>
#include <set>

#include "entlm/entity_vocab.h"
#include "entlm/error.h"

namespace entlm {

std::vector<TypedSpan> bio_to_spans(const std::vector<std::string>& tags) {
  std::vector<TypedSpan> spans;
  int start = -1;
  std::string type;
  auto close = [&](int end) {
    if (start >= 0) spans.push_back({start, end, type});
    start = -1;
  };
  for (int i = 0; i < static_cast<int>(tags.size()); ++i) {
    const std::string& tag = tags[i];
    if (tag == "O" || tag.size() < 2 || tag[1] != '-') {
      close(i);
      continue;
    }
    const char prefix = tag[0];
    const std::string t = tag.substr(2);
    if (prefix == 'B' || prefix == 'S' || start < 0 || t != type) {
      close(i);
      start = i;
      type = t;
    }
    if (prefix == 'E' || prefix == 'S') close(i + 1);
  }
  close(static_cast<int>(tags.size()));
  return spans;
}

std::vector<NERInstance> read_conll(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("ner: cannot open " + path.string());
  std::vector<NERInstance> out;
  std::vector<std::string> tokens, tags;
  auto flush = [&] {
    if (!tokens.empty()) out.push_back({tokens, bio_to_spans(tags)});
    tokens.clear();
    tags.clear();
  };
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto cols = whitespace_tokenize(line);
    if (cols.empty()) {
      flush();
      continue;
    }
    if (cols[0] == "-DOCSTART-") continue;
    if (cols.size() < 2) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected token and tag");
    }
    tokens.push_back(cols.front());
    tags.push_back(cols.back());
  }
  flush();
  return out;
}

std::vector<std::pair<int, int>> enumerate_spans(int n, int max_len) {
  std::vector<std::pair<int, int>> spans;
  for (int s = 0; s < n; ++s) {
    for (int l = 1; l <= max_len && s + l <= n; ++l) spans.emplace_back(s, s + l);
  }
  return spans;
}

std::int64_t candidate_count(int n, int max_len) {
  std::int64_t total = 0;
  for (int l = 1; l <= std::min(max_len, n); ++l) total += n - l + 1;
  return total;
}

void NERHead::init_parameters(const EncoderConfig& config, NERVariant variant,
                              int types, ParameterStore& store, Rng& rng) {
  if (types < 1) throw ValidationError("ner: need at least one entity type");
  const auto F = static_cast<std::size_t>(
      variant == NERVariant::kWordEndpoints ? 2 * config.hidden_size
                                            : config.hidden_size);
  const auto C = static_cast<std::size_t>(types + 1);
  store.add("ner.weight", normal_tensor({F, C}, config.init_std, rng));
  store.add("ner.bias", Tensor(Shape{C}, 0.0));
}

NERHead::NERHead(ParameterStore& store)
    : weight_(&store.get("ner.weight")), bias_(&store.get("ner.bias")) {}

int NERHead::class_count() const { return static_cast<int>(bias_->value.size()); }

Var NERHead::logits(Graph& g, Var features) const {
  return linear(g, features, *weight_, bias_);
}

Var ner_features(Graph& g, const Encoder& encoder, const WordVocab& words,
                 const std::vector<std::string>& tokens,
                 const std::vector<std::pair<int, int>>& spans,
                 NERVariant variant, const ForwardOptions& options) {
  EncodedSequence seq;
  seq.word_ids.push_back(WordVocab::kClsId);
  for (const auto& t : tokens) seq.word_ids.push_back(words.id(t));
  seq.word_ids.push_back(WordVocab::kSepId);
  const int n = static_cast<int>(tokens.size());
  for (const auto& [s, e] : spans) {
    if (s < 0 || s >= e || e > n) throw ContractError("ner: span out of range");
  }
  if (spans.empty()) throw ContractError("ner: no candidate spans");

  if (variant == NERVariant::kWordEndpoints) {
    Var h = encoder.forward(g, seq, options).word_vectors;
    std::vector<int> firsts, lasts;
    for (const auto& [s, e] : spans) {
      firsts.push_back(s + 1);
      lasts.push_back(e);
    }
    const Var parts[] = {gather_rows(h, firsts), gather_rows(h, lasts)};
    return concat_cols(parts);
  }
  const std::size_t chunk =
      static_cast<std::size_t>(std::max(1, encoder.config().max_entities));
  std::vector<Var> pieces;
  for (std::size_t begin = 0; begin < spans.size(); begin += chunk) {
    const std::size_t end = std::min(spans.size(), begin + chunk);
    EncodedSequence part = seq;
    for (std::size_t k = begin; k < end; ++k) {
      part.entity_ids.push_back(EntityVocab::kMaskId);
      std::vector<int> pos;
      for (int p = spans[k].first; p < spans[k].second; ++p) pos.push_back(p + 1);
      part.entity_positions.push_back(std::move(pos));
    }
    pieces.push_back(encoder.forward(g, part, options).entity_vectors);
  }
  return pieces.size() == 1 ? pieces.front() : concat_rows(pieces);
}

Var ner_loss(Graph& g, const Encoder& encoder, const NERHead& head,
             const WordVocab& words, const NERInstance& inst,
             const std::vector<std::string>& types, NERVariant variant,
             int max_span_len, const ForwardOptions& options) {
  const auto spans = enumerate_spans(static_cast<int>(inst.tokens.size()), max_span_len);
  std::vector<int> labels(spans.size(), 0);
  for (const auto& gold : inst.spans) {
    auto it = std::find(spans.begin(), spans.end(), std::make_pair(gold.start, gold.end));
    if (it == spans.end()) continue;  // longer than max_span_len
    auto t = std::find(types.begin(), types.end(), gold.type);
    if (t == types.end()) throw ValidationError("ner: unknown type " + gold.type);
    labels[it - spans.begin()] = static_cast<int>(t - types.begin()) + 1;
  }
  Var features = ner_features(g, encoder, words, inst.tokens, spans, variant, options);
  return cross_entropy(head.logits(g, features), labels);
}

std::vector<TypedSpan> decode_spans(const std::vector<std::pair<int, int>>& spans,
                                    const Tensor& log_probs,
                                    const std::vector<std::string>& types) {
  if (log_probs.rows() != spans.size() ||
      log_probs.cols() != types.size() + 1) {
    throw DimensionError("decode_spans: expected " + std::to_string(spans.size()) +
                         " x " + std::to_string(types.size() + 1) + " scores");
  }
  struct Candidate {
    int start, end, type;
    double score;
  };
  std::vector<Candidate> cands;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const auto row = log_probs.row(i);
    const int best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    if (best == 0) continue;
    cands.push_back({spans[i].first, spans[i].second, best, row[best]});
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.start != b.start) return a.start < b.start;
    return a.end < b.end;
  });
  std::vector<TypedSpan> kept;
  for (const auto& c : cands) {
    const bool overlaps = std::any_of(kept.begin(), kept.end(), [&](const TypedSpan& k) {
      return c.start < k.end && k.start < c.end;
    });
    if (!overlaps) kept.push_back({c.start, c.end, types[c.type - 1]});
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

std::vector<TypedSpan> ner_predict(const Model& model, const WordVocab& words,
                                   const std::vector<std::string>& tokens,
                                   const std::vector<std::string>& types,
                                   NERVariant variant, int max_span_len) {
  if (tokens.empty()) return {};
  auto& params = inference_params(model);
  Encoder encoder(model.config, params);
  NERHead head(params);
  const auto spans = enumerate_spans(static_cast<int>(tokens.size()), max_span_len);
  Graph g(false);
  Var logits = head.logits(g, ner_features(g, encoder, words, tokens, spans, variant));
  return decode_spans(spans, log_softmax_rows(logits.value()), types);
}

SpanF1 span_f1(const std::vector<std::vector<TypedSpan>>& gold,
               const std::vector<std::vector<TypedSpan>>& predicted) {
  if (gold.size() != predicted.size()) {
    throw DimensionError("span_f1: gold and predictions differ in length");
  }
  std::int64_t tp = 0, n_gold = 0, n_pred = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const std::set<TypedSpan> g(gold[i].begin(), gold[i].end());
    n_gold += static_cast<std::int64_t>(g.size());
    n_pred += static_cast<std::int64_t>(predicted[i].size());
    for (const auto& p : predicted[i]) tp += g.count(p);
  }
  SpanF1 r;
  r.precision = n_pred == 0 ? 0.0 : double(tp) / double(n_pred);
  r.recall = n_gold == 0 ? 0.0 : double(tp) / double(n_gold);
  r.f1 = tp == 0 ? 0.0 : 2 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

std::vector<std::string> collect_types(const std::vector<NERInstance>& data) {
  std::set<std::string> types;
  for (const auto& inst : data) {
    for (const auto& s : inst.spans) types.insert(s.type);
  }
  return {types.begin(), types.end()};
}

}  // namespace entlm
