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

#include <fstream>
#include <set>

#include "commands.h"
#include "entlm/align.h"
#include "entlm/cloze.h"
#include "entlm/error.h"
#include "entlm/relation.h"
#include "json.hpp"

namespace entlm::cli {

using nlohmann::json;

namespace {

void emit(RunContext& ctx, const std::optional<std::filesystem::path>& path, const json& j) {
  const std::string text = j.dump(2);
  if (path) {
    std::ofstream out(*path);
    if (!out) throw FormatError("cannot write " + path->string());
    out << text << '\n';
  }
  ctx.out() << text << '\n';
}

json optional_number(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

void cmd_cloze_eval(RunContext& ctx) {
  auto& cfg = ctx.cfg();
  const auto ckpt_path = ctx.input("input.checkpoint");
  const auto entities_path = ctx.input("input.entities");
  const auto queries_path = ctx.input("input.queries");
  const Checkpoint ckpt = Checkpoint::load(ckpt_path);
  const WordVocab words = words_for(ctx, ckpt);
  const ClozeMode mode = parse_cloze_mode(cfg.get_string("cloze.mode", "entity-xy"));
  const auto report_path = ctx.optional_output("output.report");
  ctx.ready();
  const EntityVocab entities = EntityVocab::load(entities_path);
  if (entities.size() != ckpt.config.entity_vocab_size) {
    throw ValidationError("entity vocabulary does not match the checkpoint");
  }
  const auto queries = read_cloze_queries(queries_path);
  const Model model = ckpt.to_model();
  const auto report = evaluate_cloze(model, words, entities, queries, mode);
  const std::string text = report.to_json();
  if (report_path) std::ofstream(*report_path) << text << '\n';
  json brief = json::parse(text);
  brief.erase("predictions");
  ctx.out() << brief.dump(2) << '\n';
}

void cmd_dump_features(RunContext& ctx) {
  auto& cfg = ctx.cfg();
  const auto ckpt_path = ctx.input("input.checkpoint");
  const Checkpoint ckpt = Checkpoint::load(ckpt_path);
  const WordVocab words = words_for(ctx, ckpt);
  const FeatureSpec spec = parse_feature_spec(cfg.get_string("features.spec", "span-mean"));
  std::optional<std::filesystem::path> spans_path, corpus_path, entities_path, re_path;
  bool use_entities = true;
  std::string lang;
  if (spec == FeatureSpec::kSpanMean) {
    spans_path = ctx.optional_input("input.spans");
    corpus_path = ctx.optional_input("input.corpus");
    if (corpus_path) entities_path = ctx.input("input.entities");
    use_entities = cfg.get_bool("features.use_entities", use_entities);
    if (spans_path.has_value() == corpus_path.has_value()) {
      throw ValidationError("span-mean needs exactly one of input.spans and input.corpus");
    }
  } else {
    re_path = ctx.input("input.re");
    lang = cfg.get_string("features.lang", "en");
  }
  const auto out_path = ctx.output("output.embeddings");
  ctx.ready();

  const Model model = ckpt.to_model();
  std::vector<SpanEmbedding> features;
  if (spec == FeatureSpec::kSpanMean) {
    std::vector<SpanDatum> data;
    if (spans_path) {
      data = read_span_data(*spans_path);
    } else {
      const EntityVocab vocab = EntityVocab::load(*entities_path);
      data = mention_span_data(read_corpus(*corpus_path), vocab);
    }
    features = span_features(model, words, data, use_entities);
  } else {
    const REVariant v = spec == FeatureSpec::kReWord ? REVariant::kWordMarkers
                                                     : REVariant::kEntityMask;
    features = re_feature_dump(model, words, read_re_file(*re_path), v, lang);
  }
  write_embeddings(out_path, features);
  ctx.out() << "wrote " << features.size() << " " << feature_spec_name(spec)
            << " vectors to " << out_path.string() << '\n';
}

void cmd_analyze_cwr(RunContext& ctx) {
  auto& cfg = ctx.cfg();
  const auto emb_path = ctx.input("input.embeddings");
  const std::string query_lang = cfg.get_string("cwr.query_lang", "en");
  const auto report_path = ctx.optional_output("output.report");
  ctx.ready();
  const auto all = read_embeddings(emb_path);
  std::vector<SpanEmbedding> queries;
  std::map<std::string, std::vector<SpanEmbedding>> pools;
  for (const auto& e : all) {
    (e.lang == query_lang ? queries : pools[e.lang]).push_back(e);
  }
  if (queries.empty()) throw ValidationError("no embeddings in query language " + query_lang);
  if (pools.empty()) throw ValidationError("no target-language embeddings");
  json langs = json::object();
  double sum = 0.0;
  int used = 0;
  for (const auto& [lang, pool] : pools) {
    const auto [kept, gold] = match_by_id(queries, pool);
    json r = {{"queries", kept.size()}, {"discarded", queries.size() - kept.size()},
              {"pool", pool.size()}, {"random_mrr", random_mrr(pool.size())}};
    if (!kept.empty()) {
      const double mrr = cwr_mrr(kept, pool, gold);
      r["mrr"] = mrr;
      sum += mrr;
      ++used;
    } else {
      r["mrr"] = nullptr;
    }
    langs[lang] = r;
  }
  emit(ctx, report_path,
       {{"query_lang", query_lang}, {"languages", langs},
        {"mean_mrr", used ? json(sum / used) : json(nullptr)}});
}

void cmd_analyze_modularity(RunContext& ctx) {
  auto& cfg = ctx.cfg();
  const auto emb_path = ctx.input("input.embeddings");
  const int k = static_cast<int>(cfg.get_int("modularity.k", 3));
  const std::string reference = cfg.get_string("modularity.reference_lang", "en");
  const auto report_path = ctx.optional_output("output.report");
  ctx.ready();
  if (k < 1) throw ValidationError("modularity.k must be >= 1");
  const auto all = read_embeddings(emb_path);
  std::set<std::string> langs;
  for (const auto& e : all) langs.insert(e.lang);
  json pairs = json::object();
  for (const auto& lang : langs) {
    if (lang == reference) continue;
    std::vector<SpanEmbedding> pair;
    for (const auto& e : all) {
      if (e.lang == lang || e.lang == reference) pair.push_back(e);
    }
    pairs[reference + "-" + lang] = optional_number(modularity(pair, k));
  }
  emit(ctx, report_path,
       {{"k", k}, {"nodes", all.size()}, {"languages", langs},
        {"modularity", optional_number(modularity(all, k))}, {"pairs", pairs}});
}

void cmd_inspect_checkpoint(RunContext& ctx) {
  const auto ckpt_path = ctx.input("input.checkpoint");
  const auto report_path = ctx.optional_output("output.report");
  ctx.ready();
  const Checkpoint ckpt = Checkpoint::load(ckpt_path);
  std::size_t total = 0;
  json params = json::object();
  for (const auto& [name, t] : ckpt.tensors) {
    params[name] = t.shape();
    total += t.size();
  }
  json meta = json::object();
  for (const auto& [key, value] : ckpt.metadata) {
    meta[key] = value.size() > 80 ? "<" + std::to_string(value.size()) + " bytes>" : value;
  }
  emit(ctx, report_path,
       {{"path", ckpt_path.string()}, {"sha256", sha256_file(ckpt_path)},
        {"step", ckpt.step}, {"config", json::parse(encoder_config_to_json(ckpt.config))},
        {"parameters", total}, {"tensors", params},
        {"optimizer_slots", ckpt.optimizer.size()}, {"metadata", meta}});
}

}  // namespace entlm::cli
