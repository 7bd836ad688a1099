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

#include <sstream>

#include "commands.h"
#include "entlm/error.h"

namespace entlm::cli {

RunContext::RunContext(std::string command, RunConfig& cfg, std::ostream& out)
    : command_(std::move(command)), cfg_(cfg), out_(out) {
  seed_ = static_cast<std::uint64_t>(cfg_.get_int("run.seed", 0));
  if (auto m = cfg_.get_optional("run.manifest")) manifest_ = *m;
}

std::filesystem::path RunContext::input(const std::string& key) {
  std::filesystem::path p = cfg_.require(key);
  if (!std::filesystem::is_regular_file(p)) {
    throw ValidationError(key + ": no such file '" + p.string() + "'");
  }
  inputs_.emplace_back(key, FileRecord{p.string(), sha256_file(p)});
  return p;
}

std::optional<std::filesystem::path> RunContext::optional_input(const std::string& key) {
  if (!cfg_.get_optional(key)) return std::nullopt;
  return input(key);
}

std::vector<std::filesystem::path> RunContext::input_list(const std::string& key) {
  const auto items = cfg_.get_list(key, {});
  if (items.empty()) throw ValidationError("config key '" + key + "' is required");
  std::vector<std::filesystem::path> out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::filesystem::path p = items[i];
    if (!std::filesystem::is_regular_file(p)) {
      throw ValidationError(key + ": no such file '" + p.string() + "'");
    }
    inputs_.emplace_back(key + "[" + std::to_string(i) + "]",
                         FileRecord{p.string(), sha256_file(p)});
    out.push_back(p);
  }
  return out;
}

std::filesystem::path RunContext::output(const std::string& key) {
  std::filesystem::path p = cfg_.require(key);
  outputs_.emplace_back(key, p);
  return p;
}

std::optional<std::filesystem::path> RunContext::optional_output(const std::string& key) {
  if (!cfg_.get_optional(key)) return std::nullopt;
  return output(key);
}

void RunContext::record_output(const std::string& key, const std::filesystem::path& path) {
  outputs_.emplace_back(key, path);
}

std::optional<std::filesystem::path> RunContext::manifest_path() const {
  if (manifest_) return manifest_;
  if (outputs_.empty()) return std::nullopt;
  const auto& primary = outputs_.front().second;
  if (std::filesystem::is_directory(primary)) return primary / "manifest.json";
  return std::filesystem::path(primary.string() + ".manifest.json");
}

Manifest RunContext::finish() const {
  Manifest m;
  m.command = command_;
  m.config = cfg_.values();
  m.seed = seed_;
  for (const auto& [key, rec] : inputs_) m.inputs[key] = rec;
  for (const auto& [key, path] : outputs_) {
    if (std::filesystem::is_regular_file(path)) {
      m.outputs[key] = {path.string(), sha256_file(path)};
    }
  }
  return m;
}

namespace {

std::vector<FlagAlias> io(std::initializer_list<FlagAlias> flags) { return flags; }

}  // namespace

const std::vector<CommandInfo>& command_table() {
  static const std::vector<CommandInfo> table = [] {
    std::vector<CommandInfo> t;
    t.push_back({"toy-data", "Write a synthetic parallel corpus and its link table",
                 io({{"--out-dir", "output.dir", "directory for train/heldout/links files"},
                     {"--languages", "toy.languages", "comma-separated language codes"},
                     {"--entities", "toy.entities", "number of shared entities"}}),
                 cmd_toy_data});
    t.push_back({"build-vocab", "Build word and entity vocabularies and mention statistics",
                 io({{"--corpus", "input.corpus", "comma-separated corpus JSONL files"},
                     {"--links", "input.links", "inter-language link TSV"},
                     {"--min-languages", "vocab.min_languages",
                      "keep entities linked from at least this many languages"},
                     {"--top-k", "vocab.top_k", "keep at most this many entities"},
                     {"--words-out", "output.words", "word vocabulary file"},
                     {"--entities-out", "output.entities", "entity vocabulary file"},
                     {"--stats-out", "output.mention_stats", "mention statistics TSV"}}),
                 cmd_build_vocab});
    t.push_back({"link-entities", "Detect entity mentions with anchor-text dictionaries",
                 io({{"--corpus", "input.corpus", "pages whose anchors define the dictionaries"},
                     {"--entities", "input.entities", "entity vocabulary"},
                     {"--stats", "input.mention_stats", "mention statistics TSV"},
                     {"--targets", "input.targets", "parallel target-language pages"},
                     {"--links", "input.links", "inter-language link TSV"},
                     {"--min-link-prob", "link.min_link_prob", "link probability threshold"},
                     {"--out", "output.mentions", "mentions JSONL"}}),
                 cmd_link_entities});
    t.push_back({"pretrain", "Two-stage masked word and entity pretraining",
                 io({{"--corpus", "input.corpus", "comma-separated corpus JSONL files"},
                     {"--words", "input.words", "word vocabulary"},
                     {"--entities", "input.entities", "entity vocabulary"},
                     {"--resume", "input.resume", "checkpoint to resume from"},
                     {"--out", "output.checkpoint", "checkpoint path"},
                     {"--log", "output.log", "training log TSV"}}),
                 cmd_pretrain});
    for (const std::string task : {"qa", "re", "ner"}) {
      t.push_back({"finetune " + task, "Fine-tune a pretrained checkpoint on " + task,
                   io({{"--checkpoint", "input.checkpoint", "pretrained checkpoint"},
                       {"--words", "input.words", "word vocabulary (if not in checkpoint)"},
                       {"--train", "input.train", "training data"},
                       {"--dev", "input.dev", "development data for model selection"},
                       {"--out", "output.checkpoint", "fine-tuned checkpoint"}}),
                   [task](RunContext& c) { cmd_finetune(c, task); }});
      t.push_back({"eval " + task, "Evaluate a fine-tuned " + task + " checkpoint",
                   io({{"--checkpoint", "input.checkpoint", "fine-tuned checkpoint"},
                       {"--words", "input.words", "word vocabulary (if not in checkpoint)"},
                       {"--test", "input.test", "evaluation data"},
                       {"--report", "output.report", "JSON report"}}),
                   [task](RunContext& c) { cmd_eval(c, task); }});
    }
    t.push_back({"cloze-eval", "Typed cloze-prompt evaluation",
                 io({{"--checkpoint", "input.checkpoint", "pretrained checkpoint"},
                     {"--words", "input.words", "word vocabulary (if not in checkpoint)"},
                     {"--entities", "input.entities", "entity vocabulary"},
                     {"--queries", "input.queries", "query JSONL"},
                     {"--mode", "cloze.mode", "word, entity-y or entity-xy"},
                     {"--report", "output.report", "JSON report"}}),
                 cmd_cloze_eval});
    t.push_back({"dump-features", "Write contextual features for alignment analysis",
                 io({{"--checkpoint", "input.checkpoint", "checkpoint"},
                     {"--words", "input.words", "word vocabulary (if not in checkpoint)"},
                     {"--entities", "input.entities", "entity vocabulary (corpus input)"},
                     {"--spans", "input.spans", "span JSONL"},
                     {"--corpus", "input.corpus", "corpus JSONL; one span per linked mention"},
                     {"--re-data", "input.re", "relation TSV (re-* specs)"},
                     {"--spec", "features.spec", "span-mean, re-word or re-entity"},
                     {"--out", "output.embeddings", "embedding JSONL"}}),
                 cmd_dump_features});
    t.push_back({"analyze cwr", "Cross-lingual span retrieval MRR",
                 io({{"--embeddings", "input.embeddings", "embedding JSONL"},
                     {"--query-lang", "cwr.query_lang", "query language"},
                     {"--report", "output.report", "JSON report"}}),
                 cmd_analyze_cwr});
    t.push_back({"analyze modularity", "Language modularity of the k-NN graph",
                 io({{"--embeddings", "input.embeddings", "embedding JSONL"},
                     {"--k", "modularity.k", "neighbors per node"},
                     {"--report", "output.report", "JSON report"}}),
                 cmd_analyze_modularity});
    t.push_back({"inspect-checkpoint", "Summarize a checkpoint",
                 io({{"--checkpoint", "input.checkpoint", "checkpoint"},
                     {"--report", "output.report", "JSON report"}}),
                 cmd_inspect_checkpoint});
    return t;
  }();
  return table;
}

const CommandInfo* find_command(const std::string& name) {
  for (const auto& c : command_table()) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

Manifest run_command(const std::string& name, RunConfig cfg, std::ostream& out) {
  const CommandInfo* info = find_command(name);
  if (!info) throw ValidationError("unknown command '" + name + "'");
  RunContext ctx(name, cfg, out);
  info->run(ctx);
  Manifest m = ctx.finish();
  if (auto path = ctx.manifest_path()) {
    m.save(*path);
    out << "manifest: " << path->string() << '\n';
  }
  return m;
}

bool rerun_manifest(const std::filesystem::path& manifest_path,
                    const std::vector<std::string>& overrides, bool verify,
                    std::ostream& out) {
  const Manifest recorded = Manifest::load(manifest_path);
  for (const auto& [key, rec] : recorded.inputs) {
    if (!std::filesystem::is_regular_file(rec.path)) {
      throw ValidationError("rerun: input " + key + " is missing: " + rec.path);
    }
    if (sha256_file(rec.path) != rec.sha256) {
      throw ValidationError("rerun: input " + key + " changed since the run: " + rec.path);
    }
  }
  RunConfig cfg;
  for (const auto& [key, value] : recorded.config) cfg.set(key, value);
  for (const auto& o : overrides) cfg.set_assignment(o);
  const Manifest now = run_command(recorded.command, cfg, out);
  if (!verify) return true;
  bool same = true;
  for (const auto& [key, rec] : recorded.outputs) {
    auto it = now.outputs.find(key);
    const bool match = it != now.outputs.end() && it->second.sha256 == rec.sha256;
    out << (match ? "reproduced " : "DIFFERS ") << key << '\n';
    same = same && match;
  }
  return same;
}

EncoderConfig read_model_config(RunConfig& cfg, int word_vocab_size, int entity_vocab_size) {
  EncoderConfig c;
  c.word_vocab_size = word_vocab_size;
  c.entity_vocab_size = entity_vocab_size;
  c.hidden_size = static_cast<int>(cfg.get_int("model.hidden_size", c.hidden_size));
  c.entity_emb_size = static_cast<int>(cfg.get_int("model.entity_emb_size", c.entity_emb_size));
  c.layers = static_cast<int>(cfg.get_int("model.layers", c.layers));
  c.heads = static_cast<int>(cfg.get_int("model.heads", c.heads));
  c.ffn_size = static_cast<int>(cfg.get_int("model.ffn_size", c.ffn_size));
  c.max_positions = static_cast<int>(cfg.get_int("model.max_positions", c.max_positions));
  c.max_entities = static_cast<int>(cfg.get_int("model.max_entities", c.max_entities));
  c.dropout = cfg.get_double("model.dropout", c.dropout);
  c.init_std = cfg.get_double("model.init_std", c.init_std);
  const auto mode = cfg.get_string("model.entity_position_mode", "sum");
  if (mode == "sum") {
    c.entity_position_mode = EntityPositionMode::kSum;
  } else if (mode == "mean") {
    c.entity_position_mode = EntityPositionMode::kMean;
  } else {
    throw ValidationError("model.entity_position_mode must be sum or mean");
  }
  c.validate();
  return c;
}

TrainConfig read_train_config(RunConfig& cfg, std::uint64_t seed) {
  TrainConfig t;
  t.seed = seed;
  auto& s = t.schedule;
  s.total_steps = cfg.get_int("train.total_steps", s.total_steps);
  s.stage1_steps = cfg.get_int("train.stage1_steps", s.stage1_steps);
  s.warmup_steps = cfg.get_int("train.warmup_steps", s.warmup_steps);
  s.stage1_peak_lr = cfg.get_double("train.stage1_peak_lr", s.stage1_peak_lr);
  s.peak_lr = cfg.get_double("train.peak_lr", s.peak_lr);
  t.batch_size = static_cast<int>(cfg.get_int("train.batch_size", t.batch_size));
  t.adam.beta1 = cfg.get_double("train.beta1", t.adam.beta1);
  t.adam.beta2 = cfg.get_double("train.beta2", t.adam.beta2);
  t.adam.eps = cfg.get_double("train.eps", t.adam.eps);
  t.adam.weight_decay = cfg.get_double("train.weight_decay", t.adam.weight_decay);
  t.sampling_alpha = cfg.get_double("train.sampling_alpha", t.sampling_alpha);
  t.max_grad_norm = cfg.get_double("train.max_grad_norm", t.max_grad_norm);
  t.checkpoint_interval = cfg.get_int("train.checkpoint_interval", t.checkpoint_interval);
  t.log_interval = cfg.get_int("train.log_interval", t.log_interval);
  t.stage1_trainable = cfg.get_list("train.stage1_trainable", t.stage1_trainable);
  t.masking.word_p = cfg.get_double("masking.word_p", t.masking.word_p);
  t.masking.word_random_p = cfg.get_double("masking.word_random_p", t.masking.word_random_p);
  t.masking.word_keep_p = cfg.get_double("masking.word_keep_p", t.masking.word_keep_p);
  t.masking.entity_p = cfg.get_double("masking.entity_p", t.masking.entity_p);
  t.validate();
  try {
    t.masking.validate();
  } catch (const ContractError& e) {
    throw ValidationError(e.what());
  }
  return t;
}

std::string encode_word_vocab(const WordVocab& words) {
  std::string out;
  for (const auto& t : words.tokens()) out += t + "\n";
  return out;
}

WordVocab decode_word_vocab(const std::string& text) {
  std::vector<std::string> tokens;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) tokens.push_back(line);
  return WordVocab::from_tokens(std::move(tokens));
}

WordVocab words_for(RunContext& ctx, const Checkpoint& ckpt) {
  if (auto p = ctx.optional_input("input.words")) return WordVocab::load(*p);
  auto it = ckpt.metadata.find("word_vocab");
  if (it == ckpt.metadata.end()) {
    throw ValidationError("checkpoint has no word vocabulary; set input.words");
  }
  return decode_word_vocab(it->second);
}

}  // namespace entlm::cli
