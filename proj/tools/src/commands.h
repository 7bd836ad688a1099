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

#ifndef ENTLM_TOOLS_COMMANDS_H_
#define ENTLM_TOOLS_COMMANDS_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "entlm/checkpoint.h"
#include "entlm/encoder.h"
#include "entlm/pretrainer.h"
#include "entlm/word_vocab.h"
#include "manifest.h"
#include "run_config.h"

namespace entlm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitValidation = 3;

// State of one command invocation. Files are registered under the config
// key that named them so that reruns can match outputs by role.
class RunContext {
 public:
  RunContext(std::string command, RunConfig& cfg, std::ostream& out);

  RunConfig& cfg() { return cfg_; }
  std::ostream& out() { return out_; }
  const std::string& command() const { return command_; }
  std::uint64_t seed() const { return seed_; }

  std::filesystem::path input(const std::string& key);
  std::optional<std::filesystem::path> optional_input(const std::string& key);
  std::vector<std::filesystem::path> input_list(const std::string& key);
  std::filesystem::path output(const std::string& key);
  std::optional<std::filesystem::path> optional_output(const std::string& key);
  // For outputs whose path is derived rather than configured.
  void record_output(const std::string& key, const std::filesystem::path& path);

  // Call after all config reads, before the real work.
  void ready() { cfg_.reject_unknown(); }

  Manifest finish() const;
  std::optional<std::filesystem::path> manifest_path() const;

 private:
  std::string command_;
  RunConfig& cfg_;
  std::ostream& out_;
  std::uint64_t seed_ = 0;
  std::optional<std::filesystem::path> manifest_;
  std::vector<std::pair<std::string, FileRecord>> inputs_;
  std::vector<std::pair<std::string, std::filesystem::path>> outputs_;
};

// Maps a command-line flag onto a config key.
struct FlagAlias {
  std::string flag;
  std::string key;
  std::string help;
};

struct CommandInfo {
  std::string name;  // "pretrain", "finetune qa", ...
  std::string help;
  std::vector<FlagAlias> flags;
  std::function<void(RunContext&)> run;
};

const std::vector<CommandInfo>& command_table();
const CommandInfo* find_command(const std::string& name);

// Runs a command and writes its manifest. Returns the manifest.
Manifest run_command(const std::string& name, RunConfig cfg, std::ostream& out);

// Re-executes a manifest. Inputs must still match their digests. With
// verify set, every output is compared to the recorded digest; the result
// is false on any mismatch.
bool rerun_manifest(const std::filesystem::path& manifest_path,
                    const std::vector<std::string>& overrides, bool verify,
                    std::ostream& out);

// Shared helpers for command implementations.
EncoderConfig read_model_config(RunConfig& cfg, int word_vocab_size, int entity_vocab_size);
TrainConfig read_train_config(RunConfig& cfg, std::uint64_t seed);
std::string encode_word_vocab(const WordVocab& words);
WordVocab decode_word_vocab(const std::string& text);
// The vocabulary stored in a checkpoint, or input.words if configured.
WordVocab words_for(RunContext& ctx, const Checkpoint& ckpt);

void cmd_toy_data(RunContext& ctx);
void cmd_build_vocab(RunContext& ctx);
void cmd_link_entities(RunContext& ctx);
void cmd_pretrain(RunContext& ctx);
void cmd_finetune(RunContext& ctx, const std::string& task);
void cmd_eval(RunContext& ctx, const std::string& task);
void cmd_cloze_eval(RunContext& ctx);
void cmd_dump_features(RunContext& ctx);
void cmd_analyze_cwr(RunContext& ctx);
void cmd_analyze_modularity(RunContext& ctx);
void cmd_inspect_checkpoint(RunContext& ctx);

}  // namespace entlm::cli

#endif  // ENTLM_TOOLS_COMMANDS_H_
