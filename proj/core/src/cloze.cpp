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

#include "entlm/cloze.h"

#include <algorithm>
#include <fstream>

#include "entlm/error.h"
#include "json.hpp"

namespace entlm {

using nlohmann::json;

namespace {

std::size_t count_of(const std::string& s, const std::string& what) {
  std::size_t n = 0;
  for (auto p = s.find(what); p != std::string::npos; p = s.find(what, p + what.size())) ++n;
  return n;
}

std::string pad_slots(std::string text) {
  for (const std::string slot : {kSubjectSlot, kObjectSlot}) {
    const auto p = text.find(slot);
    if (p != std::string::npos) text.replace(p, slot.size(), " " + slot + " ");
  }
  return text;
}

std::optional<std::string> optional_string(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<std::string>();
}

// Encoder output plus the logits of one head at the chosen rows.
Tensor encoder_rows(const Model& model, const EncodedSequence& seq, bool entity_side,
                    std::span<const int> rows) {
  auto& params = inference_params(model);
  Encoder encoder(model.config, params);
  Graph g(false);
  auto out = encoder.forward(g, seq);
  if (entity_side) {
    MepHead head(params);
    return log_softmax_rows(head.logits(g, gather_rows(out.entity_vectors, rows)).value());
  }
  MlmHead head(params);
  return log_softmax_rows(head.logits(g, gather_rows(out.word_vectors, rows)).value());
}

}  // namespace

void TypedQuery::validate() const {
  if (count_of(template_text, kSubjectSlot) != 1 || count_of(template_text, kObjectSlot) != 1) {
    throw ContractError("cloze: template needs exactly one [X] and one [Y]: " +
                        template_text);
  }
  if (candidates.empty()) throw ContractError("cloze: query without candidates");
  if (gold_index < 0 || gold_index >= static_cast<int>(candidates.size())) {
    throw ContractError("cloze: gold index out of range");
  }
}

TypedQuery parse_cloze_query(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw FormatError(std::string("cloze: ") + e.what());
  }
  TypedQuery q;
  try {
    q.lang = j.at("lang").get<std::string>();
    q.template_text = j.at("template").get<std::string>();
    q.sub_surface = j.at("sub_surface").get<std::string>();
    q.sub_entity = optional_string(j, "sub_entity");
    for (const auto& c : j.at("candidates")) {
      q.candidates.push_back({c.at("surface").get<std::string>(), optional_string(c, "entity")});
    }
    q.gold_index = j.at("gold_index").get<int>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("cloze: ") + e.what());
  }
  q.validate();
  return q;
}

std::vector<TypedQuery> read_cloze_queries(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cloze: cannot open " + path.string());
  std::vector<TypedQuery> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_cloze_query(line));
    } catch (const Error& e) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

double mean_token_log_prob(const Tensor& log_probs, std::span<const int> ids) {
  if (ids.empty() || log_probs.rows() != ids.size()) {
    throw ContractError("cloze: need one log-prob row per candidate token");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    total += log_probs.at(i, static_cast<std::size_t>(ids[i]));
  }
  return total / static_cast<double>(ids.size());
}

std::optional<int> match_entity(const EntityVocab& vocab, const std::string& lang,
                                const std::string& surface,
                                const std::optional<std::string>& key) {
  std::optional<int> id;
  if (key) {
    id = vocab.find_key(*key);
  } else {
    id = vocab.resolve(lang, surface);
    if (!id && lang != "en") id = vocab.resolve("en", surface);
  }
  if (id && *id < EntityVocab::kSpecialCount) return std::nullopt;
  return id;
}

ClozeInput build_cloze_input(const TypedQuery& query, const WordVocab& words, int k) {
  query.validate();
  if (k < 1) throw ContractError("cloze: candidate has no tokens");
  ClozeInput in;
  auto& ids = in.seq.word_ids;
  ids.push_back(WordVocab::kClsId);
  for (const auto& tok : whitespace_tokenize(pad_slots(query.template_text))) {
    if (tok == kSubjectSlot) {
      for (const auto& s : whitespace_tokenize(query.sub_surface)) {
        in.subject_positions.push_back(static_cast<int>(ids.size()));
        ids.push_back(words.id(s));
      }
    } else if (tok == kObjectSlot) {
      for (int i = 0; i < k; ++i) {
        in.mask_positions.push_back(static_cast<int>(ids.size()));
        ids.push_back(WordVocab::kMaskId);
      }
    } else {
      ids.push_back(words.id(tok));
    }
  }
  ids.push_back(WordVocab::kSepId);
  return in;
}

double score_candidate_words(const Model& model, const WordVocab& words,
                             const TypedQuery& query, const ClozeCandidate& candidate) {
  const auto toks = whitespace_tokenize(candidate.surface);
  const auto in = build_cloze_input(query, words, static_cast<int>(toks.size()));
  const Tensor lp = encoder_rows(model, in.seq, false, in.mask_positions);
  return mean_token_log_prob(lp, words.encode(toks));
}

const char* cloze_mode_name(ClozeMode mode) {
  switch (mode) {
    case ClozeMode::kWord: return "word";
    case ClozeMode::kEntityY: return "entity-y";
    case ClozeMode::kEntityXY: return "entity-xy";
  }
  return "?";
}

ClozeMode parse_cloze_mode(const std::string& name) {
  for (auto m : {ClozeMode::kWord, ClozeMode::kEntityY, ClozeMode::kEntityXY}) {
    if (name == cloze_mode_name(m)) return m;
  }
  throw ValidationError("cloze: unknown mode '" + name + "' (word, entity-y, entity-xy)");
}

EntityScore score_candidate_entity(const Model& model, const WordVocab& words,
                                   const EntityVocab& entities, const TypedQuery& query,
                                   const ClozeCandidate& candidate, ClozeMode mode) {
  const auto target = match_entity(entities, query.lang, candidate.surface, candidate.entity);
  if (mode == ClozeMode::kWord || !target) {
    return {score_candidate_words(model, words, query, candidate), false};
  }
  const int k = static_cast<int>(whitespace_tokenize(candidate.surface).size());
  auto in = build_cloze_input(query, words, k);
  in.seq.entity_ids.push_back(EntityVocab::kMaskId);
  in.seq.entity_positions.push_back(in.mask_positions);
  if (mode == ClozeMode::kEntityXY && !in.subject_positions.empty()) {
    if (auto sub = match_entity(entities, query.lang, query.sub_surface, query.sub_entity)) {
      in.seq.entity_ids.push_back(*sub);
      in.seq.entity_positions.push_back(in.subject_positions);
    }
  }
  const int row[] = {0};
  const Tensor lp = encoder_rows(model, in.seq, true, row);
  return {lp.at(0, static_cast<std::size_t>(*target)), true};
}

int argmax_candidate(std::span<const double> scores) {
  if (scores.empty()) throw ContractError("cloze: no scores");
  int best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = static_cast<int>(i);
  }
  return best;
}

std::optional<double> FalsePositiveStats::ratio() const {
  if (false_count == 0) return std::nullopt;
  return double(top_count) / double(false_count);
}

FalsePositiveStats top1_fp_ratio(
    const std::vector<std::pair<std::string, std::string>>& predictions) {
  FalsePositiveStats s;
  for (const auto& [pred, gold] : predictions) {
    if (pred == gold) continue;
    ++s.counts[pred];
    ++s.false_count;
  }
  // std::map iterates in byte order, so strict > keeps the smallest on ties.
  for (const auto& [surface, n] : s.counts) {
    if (n > s.top_count) {
      s.top = surface;
      s.top_count = n;
    }
  }
  return s;
}

ClozeReport evaluate_cloze(const std::vector<TypedQuery>& queries, const ClozeScorer& scorer) {
  ClozeReport r;
  std::map<std::pair<std::string, std::string>,
           std::vector<std::pair<std::string, std::string>>> grouped;
  for (const auto& q : queries) {
    q.validate();
    const auto scores = scorer(q);
    if (scores.size() != q.candidates.size()) {
      throw DimensionError("cloze: scorer returned the wrong number of scores");
    }
    const int pred = argmax_candidate(scores);
    r.predictions.push_back(pred);
    const bool ok = pred == q.gold_index;
    r.overall.correct += ok;
    ++r.overall.total;
    auto& lang = r.per_language[q.lang];
    lang.correct += ok;
    ++lang.total;
    grouped[{q.template_text, q.lang}].emplace_back(q.candidates[pred].surface,
                                                   q.candidates[q.gold_index].surface);
  }
  for (const auto& [key, preds] : grouped) r.false_positives[key] = top1_fp_ratio(preds);
  return r;
}

ClozeReport evaluate_cloze(const Model& model, const WordVocab& words,
                           const EntityVocab& entities,
                           const std::vector<TypedQuery>& queries, ClozeMode mode) {
  int entity_scored = 0, fallbacks = 0;
  auto report = evaluate_cloze(queries, [&](const TypedQuery& q) {
    std::vector<double> scores;
    for (const auto& c : q.candidates) {
      const auto s = score_candidate_entity(model, words, entities, q, c, mode);
      (s.used_entity ? entity_scored : fallbacks) += 1;
      scores.push_back(s.score);
    }
    return scores;
  });
  report.mode = cloze_mode_name(mode);
  report.entity_scored = entity_scored;
  report.word_fallbacks = fallbacks;
  return report;
}

std::string ClozeReport::to_json() const {
  json j;
  j["mode"] = mode;
  j["accuracy"] = overall.value();
  j["correct"] = overall.correct;
  j["total"] = overall.total;
  j["entity_scored"] = entity_scored;
  j["word_fallbacks"] = word_fallbacks;
  json langs = json::object();
  for (const auto& [lang, a] : per_language) {
    langs[lang] = {{"accuracy", a.value()}, {"correct", a.correct}, {"total", a.total}};
  }
  j["languages"] = langs;
  j["predictions"] = predictions;
  json fps = json::array();
  for (const auto& [key, s] : false_positives) {
    json f = {{"template", key.first}, {"lang", key.second}, {"false", s.false_count}};
    if (s.top) {
      f["top"] = *s.top;
      f["top_count"] = s.top_count;
      f["ratio"] = *s.ratio();
    } else {
      f["ratio"] = nullptr;  // undefined without false predictions
    }
    fps.push_back(f);
  }
  j["false_positives"] = fps;
  return j.dump(2);
}

}  // namespace entlm
