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

#ifndef ENTLM_WORD_VOCAB_H_
#define ENTLM_WORD_VOCAB_H_

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "entlm/corpus.h"

namespace entlm {

// Splits text into tokens. Fixtures use whitespace tokens; a subword model
// can be plugged in behind the same signature.
using Tokenizer = std::function<std::vector<std::string>(std::string_view)>;

std::vector<std::string> whitespace_tokenize(std::string_view text);

// Word-token vocabulary with a fixed block of special tokens at the lowest
// ids.
class WordVocab {
 public:
  static constexpr int kPadId = 0;
  static constexpr int kUnkId = 1;
  static constexpr int kClsId = 2;
  static constexpr int kSepId = 3;
  static constexpr int kMaskId = 4;
  static constexpr int kSpecialCount = 5;

  WordVocab();
  // Tokens must begin with the special block.
  static WordVocab from_tokens(std::vector<std::string> tokens);
  // Tokens seen at least min_count times, most frequent first (ties by
  // byte order), truncated to max_size entries including specials.
  static WordVocab build(const std::vector<AnnotatedDocument>& docs,
                         int min_count = 1, int max_size = 0);

  int size() const { return static_cast<int>(tokens_.size()); }
  std::optional<int> find(std::string_view token) const;
  // Unknown tokens map to kUnkId.
  int id(std::string_view token) const;
  const std::string& token(int id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::vector<int> encode(const std::vector<std::string>& tokens) const;
  // Appends a token if absent; returns its id.
  int add(const std::string& token);

  // One token per line.
  void save(const std::filesystem::path& path) const;
  static WordVocab load(const std::filesystem::path& path);

 private:
  void assign(std::vector<std::string> tokens);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace entlm

#endif  // ENTLM_WORD_VOCAB_H_
