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

#include "entlm/qa.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "entlm/error.h"
#include "json.hpp"

namespace entlm {
namespace {

using nlohmann::json;

struct OffsetToken {
  std::string text;
  std::size_t begin;
  std::size_t end;
};

std::vector<OffsetToken> tokenize_with_offsets(const std::string& text) {
  std::vector<OffsetToken> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= text.size()) break;
    const std::size_t b = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    out.push_back({text.substr(b, i - b), b, i});
  }
  return out;
}

std::vector<EntityMention> read_mentions(const json& j, const char* key,
                                         std::size_t limit) {
  std::vector<EntityMention> out;
  if (!j.contains(key)) return out;
  for (const auto& m : j.at(key)) {
    EntityMention e{m.at(0).get<int>(), m.at(1).get<int>(), m.at(2).get<int>()};
    if (e.start < 0 || e.start >= e.end || e.end > static_cast<int>(limit)) {
      throw FormatError(std::string("qa: ") + key + " span out of range");
    }
    out.push_back(e);
  }
  return out;
}

std::string lang_of(const json& q, const json& para, const json& top,
                    const char* key) {
  for (const json* j : {&q, &para, &top}) {
    if (j->contains(key)) return j->at(key).get<std::string>();
  }
  for (const json* j : {&q, &para, &top}) {
    if (j->contains("lang")) return j->at("lang").get<std::string>();
  }
  return "";
}

}  // namespace

std::vector<QAInstance> parse_qa_json(const std::string& text) {
  std::vector<QAInstance> out;
  try {
    const json top = json::parse(text);
    for (const auto& article : top.at("data")) {
      for (const auto& para : article.at("paragraphs")) {
        const auto context_text = para.at("context").get<std::string>();
        const auto ctx = tokenize_with_offsets(context_text);
        std::vector<std::string> context;
        for (const auto& t : ctx) context.push_back(t.text);
        const auto context_entities =
            read_mentions(para, "context_entities", context.size());
        for (const auto& q : para.at("qas")) {
          QAInstance inst;
          inst.id = q.at("id").get<std::string>();
          for (auto& t : tokenize_with_offsets(q.at("question").get<std::string>())) {
            inst.question.push_back(std::move(t.text));
          }
          inst.context = context;
          inst.context_entities = context_entities;
          inst.question_entities =
              read_mentions(q, "question_entities", inst.question.size());
          inst.question_lang = lang_of(q, para, top, "question_lang");
          inst.context_lang = lang_of(q, para, top, "context_lang");
          for (const auto& a : q.value("answers", json::array())) {
            const auto answer = a.at("text").get<std::string>();
            const auto begin = a.at("answer_start").get<std::size_t>();
            const std::size_t end = begin + answer.size();
            inst.answer_texts.push_back(answer);
            int s = -1, e = -1;
            for (std::size_t t = 0; t < ctx.size(); ++t) {
              if (ctx[t].end > begin && ctx[t].begin < end) {
                if (s < 0) s = static_cast<int>(t);
                e = static_cast<int>(t) + 1;
              }
            }
            if (s >= 0) inst.answers.emplace_back(s, e);
          }
          out.push_back(std::move(inst));
        }
      }
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("qa: ") + e.what());
  }
  return out;
}

std::vector<QAInstance> read_qa_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("qa: cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_qa_json(buf.str());
}

// ---------------------------------------------------------------------------

std::vector<QAWindow> make_qa_windows(const QAInstance& inst,
                                      const WordVocab& words,
                                      const EncoderConfig& config,
                                      const QAOptions& options) {
  if (inst.context.empty()) throw ContractError("qa: empty context");
  const int n = static_cast<int>(inst.context.size());
  // At least one context token must fit next to the question.
  const int q_len = std::min<int>({static_cast<int>(inst.question.size()),
                                   options.max_query_tokens,
                                   config.max_positions - 4});
  const int avail = config.max_positions - q_len - 3;
  if (q_len < 0 || avail < 1) {
    throw CapacityError("qa: max_positions too small for any context");
  }
  const int stride = std::max(1, std::min(options.doc_stride, avail));

  std::vector<int> qids;
  for (int i = 0; i < q_len; ++i) qids.push_back(words.id(inst.question[i]));
  const int first = q_len + 2;

  std::vector<QAWindow> windows;
  for (int start = 0;; start += stride) {
    QAWindow w;
    w.context_begin = start;
    w.context_length = std::min(avail, n - start);
    w.first_position = first;
    auto& ids = w.seq.word_ids;
    ids.push_back(WordVocab::kClsId);
    ids.insert(ids.end(), qids.begin(), qids.end());
    ids.push_back(WordVocab::kSepId);
    for (int i = 0; i < w.context_length; ++i) {
      ids.push_back(words.id(inst.context[start + i]));
    }
    ids.push_back(WordVocab::kSepId);

    if (options.use_entities) {
      auto attach = [&](int id, int from, int to) {
        if (static_cast<int>(w.seq.entity_ids.size()) >= config.max_entities) return;
        std::vector<int> pos;
        for (int p = from; p < to; ++p) pos.push_back(p);
        w.seq.entity_ids.push_back(id);
        w.seq.entity_positions.push_back(std::move(pos));
      };
      for (const auto& m : inst.question_entities) {
        if (m.end <= q_len) attach(m.entity_id, m.start + 1, m.end + 1);
      }
      for (const auto& m : inst.context_entities) {
        if (m.start >= start && m.end <= start + w.context_length) {
          attach(m.entity_id, first + m.start - start, first + m.end - start);
        }
      }
    }
    windows.push_back(std::move(w));
    if (start + avail >= n) break;
  }
  return windows;
}

void QAHead::init_parameters(const EncoderConfig& config, ParameterStore& store,
                             Rng& rng) {
  const auto H = static_cast<std::size_t>(config.hidden_size);
  store.add("qa.weight", normal_tensor({H, 2}, config.init_std, rng));
  store.add("qa.bias", Tensor(Shape{2}, 0.0));
}

QAHead::QAHead(ParameterStore& store)
    : weight_(&store.get("qa.weight")), bias_(&store.get("qa.bias")) {}

Var QAHead::logits(Graph& g, Var word_vectors) const {
  return linear(g, word_vectors, *weight_, bias_);
}

QAPrediction qa_predict(const Model& model, const WordVocab& words,
                        const QAInstance& inst, const QAOptions& options) {
  auto& params = inference_params(model);
  Encoder encoder(model.config, params);
  QAHead head(params);
  QAPrediction best;
  bool have = false;
  for (const auto& w : make_qa_windows(inst, words, model.config, options)) {
    Graph g(false);
    const Tensor logits = head.logits(g, encoder.forward(g, w.seq).word_vectors).value();
    for (int s = 0; s < w.context_length; ++s) {
      const int max_e = std::min(w.context_length, s + options.max_answer_len);
      for (int e = s; e < max_e; ++e) {
        const double score = logits.at(w.first_position + s, 0) +
                             logits.at(w.first_position + e, 1);
        const int cs = w.context_begin + s, ce = w.context_begin + e + 1;
        const bool better =
            !have || score > best.score ||
            (score == best.score &&
             (cs < best.start || (cs == best.start && ce < best.end)));
        if (better) {
          best.start = cs;
          best.end = ce;
          best.score = score;
          have = true;
        }
      }
    }
  }
  best.text = join_tokens(inst.context, best.start, best.end);
  return best;
}

Var qa_window_loss(Graph& g, const Encoder& encoder, const QAHead& head,
                   const QAWindow& window, const QAInstance& inst,
                   const ForwardOptions& options) {
  int start_target = 0, end_target = 0;
  if (!inst.answers.empty()) {
    const auto [s, e] = inst.answers.front();
    if (s >= window.context_begin &&
        e <= window.context_begin + window.context_length) {
      start_target = window.first_position + s - window.context_begin;
      end_target = window.first_position + e - 1 - window.context_begin;
    }
  }
  Var logits = head.logits(g, encoder.forward(g, window.seq, options).word_vectors);
  Var start_row = transpose(slice_cols(logits, 0, 1));
  Var end_row = transpose(slice_cols(logits, 1, 1));
  const int st[] = {start_target};
  const int et[] = {end_target};
  return scale(add(cross_entropy(start_row, st), cross_entropy(end_row, et)), 0.5);
}

// ---------------------------------------------------------------------------

std::vector<std::string> normalize_answer(const std::string& text) {
  std::string cleaned;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x80 && std::ispunct(u)) continue;
    cleaned += u < 0x80 ? static_cast<char>(std::tolower(u)) : c;
  }
  std::vector<std::string> out;
  for (auto& t : whitespace_tokenize(cleaned)) {
    if (t == "a" || t == "an" || t == "the") continue;
    out.push_back(std::move(t));
  }
  return out;
}

double answer_f1(const std::string& prediction, const std::string& gold) {
  const auto p = normalize_answer(prediction);
  const auto g = normalize_answer(gold);
  if (p.empty() || g.empty()) return p == g ? 1.0 : 0.0;
  std::map<std::string, int> counts;
  for (const auto& t : g) ++counts[t];
  int common = 0;
  for (const auto& t : p) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  const double precision = double(common) / double(p.size());
  const double recall = double(common) / double(g.size());
  return 2.0 * precision * recall / (precision + recall);
}

double answer_exact_match(const std::string& prediction, const std::string& gold) {
  return normalize_answer(prediction) == normalize_answer(gold) ? 1.0 : 0.0;
}

QAReport qa_metrics(const std::vector<std::string>& predictions,
                    const std::vector<QAInstance>& golds) {
  if (predictions.size() != golds.size()) {
    throw DimensionError("qa_metrics: predictions and golds differ in length");
  }
  if (golds.empty()) throw ValidationError("qa_metrics: empty gold set");
  QAReport report;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const auto& inst = golds[i];
    if (inst.answer_texts.empty()) {
      throw ValidationError("qa_metrics: instance '" + inst.id +
                            "' has no gold answers");
    }
    double f1 = 0.0, em = 0.0;
    for (const auto& gold : inst.answer_texts) {
      f1 = std::max(f1, answer_f1(predictions[i], gold));
      em = std::max(em, answer_exact_match(predictions[i], gold));
    }
    auto& cell = report.cells[{inst.question_lang, inst.context_lang}];
    cell.f1 += f1;
    cell.em += em;
    ++cell.count;
    report.f1 += f1;
    report.em += em;
  }
  report.f1 /= double(golds.size());
  report.em /= double(golds.size());
  double xf1 = 0.0, xem = 0.0;
  int off_diagonal = 0;
  for (auto& [langs, cell] : report.cells) {
    cell.f1 /= cell.count;
    cell.em /= cell.count;
    if (langs.first != langs.second) {
      xf1 += cell.f1;
      xem += cell.em;
      ++off_diagonal;
    }
  }
  if (off_diagonal > 0) {
    report.gxlt_f1 = xf1 / off_diagonal;
    report.gxlt_em = xem / off_diagonal;
  }
  return report;
}

std::string QAReport::to_json() const {
  json j;
  j["f1"] = f1;
  j["em"] = em;
  j["gxlt_f1"] = gxlt_f1 ? json(*gxlt_f1) : json(nullptr);
  j["gxlt_em"] = gxlt_em ? json(*gxlt_em) : json(nullptr);
  json pairs = json::object();
  for (const auto& [langs, cell] : cells) {
    pairs[langs.first + "-" + langs.second] = {
        {"question_lang", langs.first},
        {"context_lang", langs.second},
        {"f1", cell.f1},
        {"em", cell.em},
        {"count", cell.count}};
  }
  j["pairs"] = std::move(pairs);
  return j.dump(2);
}

}  // namespace entlm
