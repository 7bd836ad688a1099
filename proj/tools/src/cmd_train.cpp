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
#include <iostream>
#include <sstream>

#include "commands.h"
#include "entlm/entity_vocab.h"
#include "entlm/error.h"
#include "entlm/finetune.h"
#include "entlm/ner.h"
#include "entlm/qa.h"
#include "entlm/relation.h"
#include "json.hpp"

namespace entlm::cli {

using nlohmann::json;

namespace {

std::string join_lines(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += s + "\n";
  return out;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

TaskKind task_kind(const std::string& task) {
  if (task == "qa") return TaskKind::kQa;
  if (task == "re") return TaskKind::kRe;
  if (task == "ner") return TaskKind::kNer;
  throw ValidationError("unknown task '" + task + "' (qa, re, ner)");
}

REVariant re_variant(const std::string& name) {
  if (name == "entity") return REVariant::kEntityMask;
  if (name == "markers") return REVariant::kWordMarkers;
  throw ValidationError("task.variant for re must be entity or markers");
}

NERVariant ner_variant(const std::string& name) {
  if (name == "entity") return NERVariant::kEntityMask;
  if (name == "words") return NERVariant::kWordEndpoints;
  throw ValidationError("task.variant for ner must be entity or words");
}

const std::string& meta(const Checkpoint& ckpt, const std::string& key) {
  auto it = ckpt.metadata.find(key);
  if (it == ckpt.metadata.end()) {
    throw ValidationError("checkpoint metadata lacks '" + key + "'; was it fine-tuned?");
  }
  return it->second;
}

int label_index(const std::vector<std::string>& labels, const std::string& label) {
  const auto it = std::find(labels.begin(), labels.end(), label);
  return it == labels.end() ? -1 : static_cast<int>(it - labels.begin());
}

struct QATaskOptions {
  QAOptions qa;
  static QATaskOptions read(RunConfig& cfg) {
    QATaskOptions o;
    o.qa.use_entities = cfg.get_bool("task.use_entities", o.qa.use_entities);
    o.qa.max_answer_len = static_cast<int>(cfg.get_int("task.max_answer_len", o.qa.max_answer_len));
    o.qa.doc_stride = static_cast<int>(cfg.get_int("task.doc_stride", o.qa.doc_stride));
    o.qa.max_query_tokens =
        static_cast<int>(cfg.get_int("task.max_query_tokens", o.qa.max_query_tokens));
    return o;
  }
};

QAOptions qa_options_from(const Checkpoint& ckpt) {
  const json j = json::parse(meta(ckpt, "qa_options"));
  QAOptions o;
  o.use_entities = j.at("use_entities").get<bool>();
  o.max_answer_len = j.at("max_answer_len").get<int>();
  o.doc_stride = j.at("doc_stride").get<int>();
  o.max_query_tokens = j.at("max_query_tokens").get<int>();
  return o;
}

std::vector<std::vector<TypedSpan>> ner_predict_all(const Model& model, const WordVocab& words,
                                                    const std::vector<NERInstance>& data,
                                                    const std::vector<std::string>& types,
                                                    NERVariant variant, int max_len) {
  std::vector<std::vector<TypedSpan>> out;
  for (const auto& d : data) out.push_back(ner_predict(model, words, d.tokens, types, variant, max_len));
  return out;
}

}  // namespace

void cmd_pretrain(RunContext& ctx) {
  auto& cfg = ctx.cfg();
  const auto corpus_paths = ctx.input_list("input.corpus");
  const auto words_path = ctx.input("input.words");
  const auto entities_path = ctx.input("input.entities");
  const auto resume_path = ctx.optional_input("input.resume");
  const WordVocab words = WordVocab::load(words_path);
  const EntityVocab entities = EntityVocab::load(entities_path);
  const EncoderConfig model_config = read_model_config(cfg, words.size(), entities.size());
  const TrainConfig train_config = read_train_config(cfg, ctx.seed());
  const auto ckpt_path = ctx.output("output.checkpoint");
  const auto log_path = ctx.optional_output("output.log");
  ctx.ready();

  std::vector<AnnotatedDocument> docs;
  for (const auto& p : corpus_paths) {
    auto part = read_corpus(p);
    docs.insert(docs.end(), part.begin(), part.end());
  }
  SequenceOptions seq;
  seq.max_entities = model_config.max_entities;
  const PretrainData data = PretrainData::from_documents(docs, words, entities,
                                                         model_config.max_positions, seq);
  if (data.sequences.empty()) throw ValidationError("pretrain: corpus has no sequences");

  std::optional<Checkpoint> resume;
  Model model;
  if (resume_path) {
    resume = Checkpoint::load(*resume_path);
    if (encoder_config_to_json(resume->config) != encoder_config_to_json(model_config)) {
      throw ValidationError("pretrain: model.* settings differ from the resumed checkpoint");
    }
    model = resume->to_model();
  } else {
    model = Model::create(model_config, ctx.seed());
  }

  std::ofstream log_file;
  if (log_path) {
    log_file.open(*log_path);
    if (!log_file) throw FormatError("cannot write " + log_path->string());
  }
  TrainOptions opts;
  opts.checkpoint_path = ckpt_path;
  opts.log = log_path ? static_cast<std::ostream*>(&log_file) : nullptr;
  opts.metadata["word_vocab"] = encode_word_vocab(words);
  opts.metadata["entity_vocab_sha256"] = sha256_file(entities_path);
  // Output locations stay out of the checkpoint so reruns to another path
  // produce the same bytes.
  std::string snapshot;
  for (const auto& [key, value] : cfg.values()) {
    if (key.rfind("output.", 0) != 0 && key != "run.manifest") snapshot += key + " = " + value + "\n";
  }
  opts.metadata["run_config"] = snapshot;
  if (resume) opts.resume_from = &*resume;
  const Checkpoint final_ckpt = train(model, data, train_config, opts);
  ctx.out() << "pretrained " << final_ckpt.step << " steps over " << data.sequences.size()
            << " sequences; checkpoint " << ckpt_path.string() << '\n';
}

void cmd_finetune(RunContext& ctx, const std::string& task) {
  auto& cfg = ctx.cfg();
  const TaskKind kind = task_kind(task);
  const auto ckpt_path = ctx.input("input.checkpoint");
  const auto train_path = ctx.input("input.train");
  const auto dev_path = ctx.optional_input("input.dev");
  const Checkpoint base = Checkpoint::load(ckpt_path);
  WordVocab words = words_for(ctx, base);

  FinetuneConfig fc = FinetuneConfig::defaults(kind);
  fc.lr = cfg.get_double("finetune.lr", fc.lr);
  fc.epochs = static_cast<int>(cfg.get_int("finetune.epochs", fc.epochs));
  fc.batch_size = static_cast<int>(cfg.get_int("finetune.batch_size", fc.batch_size));
  fc.adam.weight_decay = cfg.get_double("finetune.weight_decay", fc.adam.weight_decay);
  fc.seed = ctx.seed();
  QATaskOptions qa_opts;
  std::string variant;
  int max_span_len = kDefaultMaxSpanLength;
  if (kind == TaskKind::kQa) qa_opts = QATaskOptions::read(cfg);
  if (kind != TaskKind::kQa) variant = cfg.get_string("task.variant", "entity");
  if (kind == TaskKind::kNer) {
    max_span_len = static_cast<int>(cfg.get_int("task.max_span_len", max_span_len));
  }
  const auto out_path = ctx.output("output.checkpoint");
  ctx.ready();
  fc.validate();
  if (max_span_len < 1) throw ValidationError("task.max_span_len must be >= 1");

  Model model = base.to_model();
  Rng init = Rng::substream(ctx.seed(), "init", 1);
  FinetuneHooks hooks;
  std::map<std::string, std::string> meta_out = base.metadata;
  meta_out["task"] = task;

  // Data and closures live in this scope for the duration of finetune().
  std::vector<QAInstance> qa_train, qa_dev;
  std::vector<std::pair<std::size_t, std::size_t>> qa_windows;  // instance, window
  std::vector<std::vector<QAWindow>> qa_window_sets;
  std::vector<REInstance> re_train, re_dev;
  std::vector<NERInstance> ner_train, ner_dev;
  std::vector<std::string> labels;
  std::unique_ptr<Encoder> encoder;

  if (kind == TaskKind::kQa) {
    qa_train = read_qa_file(train_path);
    if (dev_path) qa_dev = read_qa_file(*dev_path);
    QAHead::init_parameters(model.config, model.params, init);
    for (std::size_t i = 0; i < qa_train.size(); ++i) {
      qa_window_sets.push_back(make_qa_windows(qa_train[i], words, model.config, qa_opts.qa));
      for (std::size_t w = 0; w < qa_window_sets.back().size(); ++w) qa_windows.emplace_back(i, w);
    }
    json o = {{"use_entities", qa_opts.qa.use_entities},
              {"max_answer_len", qa_opts.qa.max_answer_len},
              {"doc_stride", qa_opts.qa.doc_stride},
              {"max_query_tokens", qa_opts.qa.max_query_tokens}};
    meta_out["qa_options"] = o.dump();
  } else if (kind == TaskKind::kRe) {
    re_train = read_re_file(train_path);
    if (dev_path) re_dev = read_re_file(*dev_path);
    labels = collect_labels(re_train);
    prepare_re_model(model, words, re_variant(variant), init);
    REHead::init_parameters(model.config, static_cast<int>(labels.size()), model.params, init);
    meta_out["variant"] = variant;
    meta_out["labels"] = join_lines(labels);
  } else {
    ner_train = read_conll(train_path);
    if (dev_path) ner_dev = read_conll(*dev_path);
    labels = collect_types(ner_train);
    NERHead::init_parameters(model.config, ner_variant(variant),
                             static_cast<int>(labels.size()), model.params, init);
    meta_out["variant"] = variant;
    meta_out["labels"] = join_lines(labels);
    meta_out["max_span_len"] = std::to_string(max_span_len);
  }
  meta_out["word_vocab"] = encode_word_vocab(words);
  encoder = std::make_unique<Encoder>(model.config, model.params);

  if (kind == TaskKind::kQa) {
    QAHead head(model.params);
    hooks.train_size = qa_windows.size();
    hooks.example_loss = [&, head](Graph& g, std::size_t i, const ForwardOptions& fwd) {
      const auto [inst, w] = qa_windows[i];
      return qa_window_loss(g, *encoder, head, qa_window_sets[inst][w], qa_train[inst], fwd);
    };
    if (dev_path) {
      hooks.dev_score = [&] {
        std::vector<std::string> preds;
        for (const auto& q : qa_dev) preds.push_back(qa_predict(model, words, q, qa_opts.qa).text);
        return qa_metrics(preds, qa_dev).f1;
      };
    }
  } else if (kind == TaskKind::kRe) {
    REHead head(model.params);
    const REVariant v = re_variant(variant);
    hooks.train_size = re_train.size();
    hooks.example_loss = [&, head, v](Graph& g, std::size_t i, const ForwardOptions& fwd) {
      return re_loss(g, *encoder, head, words, re_train[i], label_index(labels, re_train[i].label),
                     v, fwd);
    };
    if (dev_path) {
      hooks.dev_score = [&, v] {
        std::vector<int> gold, pred;
        for (const auto& r : re_dev) {
          gold.push_back(label_index(labels, r.label));
          pred.push_back(re_classify(model, words, r, v));
        }
        return macro_f1(gold, pred);
      };
    }
  } else {
    NERHead head(model.params);
    const NERVariant v = ner_variant(variant);
    hooks.train_size = ner_train.size();
    hooks.example_loss = [&, head, v](Graph& g, std::size_t i, const ForwardOptions& fwd) {
      return ner_loss(g, *encoder, head, words, ner_train[i], labels, v, max_span_len, fwd);
    };
    if (dev_path) {
      hooks.dev_score = [&, v] {
        std::vector<std::vector<TypedSpan>> gold;
        for (const auto& d : ner_dev) gold.push_back(d.spans);
        return span_f1(gold, ner_predict_all(model, words, ner_dev, labels, v, max_span_len)).f1;
      };
    }
  }
  if (hooks.train_size == 0) throw ValidationError("finetune: training file has no examples");

  const FinetuneResult result = finetune(model.params, hooks, fc);
  Checkpoint out = Checkpoint::from_model(model);
  out.step = result.steps;
  out.metadata = meta_out;
  json summary = {{"epoch_losses", result.epoch_losses}, {"epoch_scores", result.epoch_scores},
                  {"best_epoch", result.best_epoch}, {"steps", result.steps}};
  out.metadata["finetune_result"] = summary.dump();
  out.save(out_path);
  ctx.out() << "fine-tuned " << task << " for " << result.steps << " steps";
  if (result.best_epoch >= 0) {
    ctx.out() << "; best dev epoch " << result.best_epoch << " score " << result.best_score;
  }
  ctx.out() << "\n";
}

void cmd_eval(RunContext& ctx, const std::string& task) {
  const TaskKind kind = task_kind(task);
  const auto ckpt_path = ctx.input("input.checkpoint");
  const auto test_path = ctx.input("input.test");
  const Checkpoint ckpt = Checkpoint::load(ckpt_path);
  const WordVocab words = words_for(ctx, ckpt);
  const auto report_path = ctx.optional_output("output.report");
  ctx.ready();
  if (meta(ckpt, "task") != task) {
    throw ValidationError("checkpoint was fine-tuned for " + meta(ckpt, "task") + ", not " + task);
  }
  const Model model = ckpt.to_model();
  json report;
  if (kind == TaskKind::kQa) {
    const auto data = read_qa_file(test_path);
    const QAOptions opts = qa_options_from(ckpt);
    std::vector<std::string> preds;
    json predictions = json::object();
    for (const auto& q : data) {
      preds.push_back(qa_predict(model, words, q, opts).text);
      predictions[q.id] = preds.back();
    }
    report = json::parse(qa_metrics(preds, data).to_json());
    report["predictions"] = predictions;
  } else if (kind == TaskKind::kRe) {
    const auto data = read_re_file(test_path);
    const auto labels = split_lines(meta(ckpt, "labels"));
    const REVariant v = re_variant(meta(ckpt, "variant"));
    std::vector<int> gold, pred;
    std::vector<std::string> names;
    int correct = 0;
    for (const auto& r : data) {
      int g = label_index(labels, r.label);
      // Unseen gold labels still count against every prediction.
      if (g < 0) g = static_cast<int>(labels.size()) + 1;
      gold.push_back(g);
      pred.push_back(re_classify(model, words, r, v));
      names.push_back(labels[pred.back()]);
      correct += gold.back() == pred.back();
    }
    report = {{"macro_f1", data.empty() ? 0.0 : macro_f1(gold, pred)},
              {"accuracy", data.empty() ? 0.0 : double(correct) / double(data.size())},
              {"count", data.size()}, {"predictions", names}};
  } else {
    const auto data = read_conll(test_path);
    const auto labels = split_lines(meta(ckpt, "labels"));
    const NERVariant v = ner_variant(meta(ckpt, "variant"));
    const int max_len = std::stoi(meta(ckpt, "max_span_len"));
    std::vector<std::vector<TypedSpan>> gold;
    for (const auto& d : data) gold.push_back(d.spans);
    const auto pred = ner_predict_all(model, words, data, labels, v, max_len);
    const auto f = span_f1(gold, pred);
    json spans = json::array();
    for (const auto& p : pred) {
      json row = json::array();
      for (const auto& s : p) row.push_back({s.start, s.end, s.type});
      spans.push_back(row);
    }
    report = {{"precision", f.precision}, {"recall", f.recall}, {"f1", f.f1},
              {"count", data.size()}, {"predictions", spans}};
  }
  report["task"] = task;
  const std::string text = report.dump(2);
  if (report_path) std::ofstream(*report_path) << text << '\n';
  json brief = report;
  brief.erase("predictions");
  brief.erase("pairs");
  ctx.out() << brief.dump(2) << '\n';
}

}  // namespace entlm::cli
