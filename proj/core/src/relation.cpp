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

#include "entlm/relation.h"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "entlm/entity_vocab.h"
#include "entlm/error.h"

namespace entlm {
namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream in(line);
  std::string part;
  while (std::getline(in, part, '\t')) out.push_back(part);
  return out;
}

std::pair<int, int> parse_span(const std::string& s) {
  std::istringstream in(s);
  int a = 0, b = 0;
  if (!(in >> a >> b)) throw FormatError("re: bad span '" + s + "'");
  return {a, b};
}

void check_spans(const REInstance& inst) {
  const int n = static_cast<int>(inst.tokens.size());
  for (const auto& [s, e] : {inst.head, inst.tail}) {
    if (s < 0 || s >= e || e > n) {
      throw ContractError("re: span [" + std::to_string(s) + ", " +
                          std::to_string(e) + ") invalid for " +
                          std::to_string(n) + " tokens");
    }
  }
  if (inst.head.first < inst.tail.second && inst.tail.first < inst.head.second) {
    throw ContractError("re: head and tail spans overlap");
  }
}

std::vector<int> range(int from, int to) {
  std::vector<int> r;
  for (int i = from; i < to; ++i) r.push_back(i);
  return r;
}

}  // namespace

std::vector<REInstance> read_re_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("re: cannot open " + path.string());
  std::vector<REInstance> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cols = split_tabs(line);
    if (cols.size() != 4) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected label, tokens, head, tail");
    }
    REInstance inst;
    inst.label = cols[0];
    inst.tokens = whitespace_tokenize(cols[1]);
    inst.head = parse_span(cols[2]);
    inst.tail = parse_span(cols[3]);
    try {
      check_spans(inst);
    } catch (const ContractError& e) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " +
                        e.what());
    }
    out.push_back(std::move(inst));
  }
  return out;
}

void write_re_file(const std::filesystem::path& path,
                   const std::vector<REInstance>& data) {
  std::ofstream out(path);
  if (!out) throw FormatError("re: cannot write " + path.string());
  for (const auto& inst : data) {
    out << inst.label << '\t' << join_tokens(inst.tokens, 0, int(inst.tokens.size()))
        << '\t' << inst.head.first << ' ' << inst.head.second << '\t'
        << inst.tail.first << ' ' << inst.tail.second << '\n';
  }
}

std::vector<std::string> collect_labels(const std::vector<REInstance>& data) {
  std::set<std::string> labels;
  for (const auto& inst : data) labels.insert(inst.label);
  return {labels.begin(), labels.end()};
}

void prepare_re_model(Model& model, WordVocab& words, REVariant variant,
                      Rng& rng) {
  if (variant == REVariant::kWordMarkers) {
    int missing = 0;
    for (const char* marker : {kHeadMarker, kTailMarker}) {
      if (!words.find(marker)) ++missing;
    }
    if (words.size() != model.config.word_vocab_size) {
      throw ValidationError("re: word vocabulary does not match the model");
    }
    words.add(kHeadMarker);
    words.add(kTailMarker);
    extend_word_vocab(model, missing, rng);
    return;
  }
  Tensor& table = model.params.get("entity_embeddings.entity").value;
  const auto mask_row = table.row(EntityVocab::kMaskId);
  const std::vector<double> copy(mask_row.begin(), mask_row.end());
  for (int id : {EntityVocab::kHeadId, EntityVocab::kTailId}) {
    std::copy(copy.begin(), copy.end(), table.row(id).begin());
  }
}

void REHead::init_parameters(const EncoderConfig& config, int labels,
                             ParameterStore& store, Rng& rng) {
  if (labels < 1) throw ValidationError("re: need at least one label");
  const auto F = static_cast<std::size_t>(2 * config.hidden_size);
  store.add("re.weight",
            normal_tensor({F, static_cast<std::size_t>(labels)}, config.init_std, rng));
  store.add("re.bias", Tensor(Shape{static_cast<std::size_t>(labels)}, 0.0));
}

REHead::REHead(ParameterStore& store)
    : weight_(&store.get("re.weight")), bias_(&store.get("re.bias")) {}

int REHead::label_count() const { return static_cast<int>(bias_->value.size()); }

Var REHead::logits(Graph& g, Var features) const {
  return linear(g, features, *weight_, bias_);
}

Var re_features(Graph& g, const Encoder& encoder, const WordVocab& words,
                const REInstance& inst, REVariant variant,
                const ForwardOptions& options) {
  check_spans(inst);
  EncodedSequence seq;
  seq.word_ids.push_back(WordVocab::kClsId);
  if (variant == REVariant::kWordMarkers) {
    const auto head_marker = words.find(kHeadMarker);
    const auto tail_marker = words.find(kTailMarker);
    if (!head_marker || !tail_marker) {
      throw ValidationError("re: marker tokens missing; run prepare_re_model");
    }
    int head_pos = -1, tail_pos = -1;
    const int n = static_cast<int>(inst.tokens.size());
    for (int i = 0; i <= n; ++i) {
      // Closing markers go before opening ones at a shared boundary.
      if (i == inst.head.second) seq.word_ids.push_back(*head_marker);
      if (i == inst.tail.second) seq.word_ids.push_back(*tail_marker);
      if (i == inst.head.first) {
        head_pos = static_cast<int>(seq.word_ids.size());
        seq.word_ids.push_back(*head_marker);
      }
      if (i == inst.tail.first) {
        tail_pos = static_cast<int>(seq.word_ids.size());
        seq.word_ids.push_back(*tail_marker);
      }
      if (i < n) seq.word_ids.push_back(words.id(inst.tokens[i]));
    }
    seq.word_ids.push_back(WordVocab::kSepId);
    Var words_out = encoder.forward(g, seq, options).word_vectors;
    const int rows[] = {head_pos, tail_pos};
    Var picked = gather_rows(words_out, rows);
    const Var halves[] = {slice_rows(picked, 0, 1), slice_rows(picked, 1, 1)};
    return concat_cols(halves);
  }
  for (const auto& t : inst.tokens) seq.word_ids.push_back(words.id(t));
  seq.word_ids.push_back(WordVocab::kSepId);
  // Entity tokens are ordered by mention position, not role, so swapping
  // roles only swaps which row each half reads.
  const bool head_first = inst.head.first < inst.tail.first;
  const auto& first = head_first ? inst.head : inst.tail;
  const auto& second = head_first ? inst.tail : inst.head;
  seq.entity_ids = {head_first ? EntityVocab::kHeadId : EntityVocab::kTailId,
                    head_first ? EntityVocab::kTailId : EntityVocab::kHeadId};
  seq.entity_positions = {range(first.first + 1, first.second + 1),
                          range(second.first + 1, second.second + 1)};
  Var ent = encoder.forward(g, seq, options).entity_vectors;
  const Var halves[] = {slice_rows(ent, head_first ? 0 : 1, 1),
                        slice_rows(ent, head_first ? 1 : 0, 1)};
  return concat_cols(halves);
}

Var re_loss(Graph& g, const Encoder& encoder, const REHead& head,
            const WordVocab& words, const REInstance& inst, int label,
            REVariant variant, const ForwardOptions& options) {
  const int labels[] = {label};
  return cross_entropy(
      head.logits(g, re_features(g, encoder, words, inst, variant, options)),
      labels);
}

int re_classify(const Model& model, const WordVocab& words,
                const REInstance& inst, REVariant variant) {
  auto& params = inference_params(model);
  Encoder encoder(model.config, params);
  REHead head(params);
  Graph g(false);
  const Tensor logits =
      head.logits(g, re_features(g, encoder, words, inst, variant)).value();
  const auto d = logits.data();
  return static_cast<int>(std::max_element(d.begin(), d.end()) - d.begin());
}

double macro_f1(const std::vector<int>& gold, const std::vector<int>& predicted) {
  if (gold.size() != predicted.size()) {
    throw DimensionError("macro_f1: gold and predictions differ in length");
  }
  std::map<int, std::array<int, 3>> counts;  // tp, fp, fn
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] == predicted[i]) {
      ++counts[gold[i]][0];
    } else {
      ++counts[predicted[i]][1];
      ++counts[gold[i]][2];
    }
  }
  if (counts.empty()) return 0.0;
  double total = 0.0;
  for (const auto& [_, c] : counts) {
    const int denom = 2 * c[0] + c[1] + c[2];
    total += denom == 0 ? 0.0 : 2.0 * c[0] / denom;
  }
  return total / double(counts.size());
}

}  // namespace entlm
