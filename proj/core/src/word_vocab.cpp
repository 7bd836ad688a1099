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

#include "entlm/word_vocab.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include "entlm/error.h"

namespace entlm {
namespace {

const std::vector<std::string>& special_tokens() {
  static const std::vector<std::string> kSpecials = {"[PAD]", "[UNK]", "[CLS]",
                                                     "[SEP]", "[MASK]"};
  return kSpecials;
}

}  // namespace

std::vector<std::string> whitespace_tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

WordVocab::WordVocab() { assign(special_tokens()); }

void WordVocab::assign(std::vector<std::string> tokens) {
  tokens_ = std::move(tokens);
  index_.clear();
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw FormatError("word vocab: duplicate token '" + tokens_[i] + "'");
    }
  }
}

WordVocab WordVocab::from_tokens(std::vector<std::string> tokens) {
  const auto& specials = special_tokens();
  if (tokens.size() < specials.size() ||
      !std::equal(specials.begin(), specials.end(), tokens.begin())) {
    throw FormatError("word vocab: must begin with [PAD] [UNK] [CLS] [SEP] "
                      "[MASK]");
  }
  WordVocab v;
  v.assign(std::move(tokens));
  return v;
}

WordVocab WordVocab::build(const std::vector<AnnotatedDocument>& docs,
                           int min_count, int max_size) {
  std::map<std::string, long long> counts;
  for (const auto& doc : docs) {
    for (const auto& t : doc.tokens) ++counts[t];
  }
  std::vector<std::pair<std::string, long long>> ranked;
  for (auto& [tok, c] : counts) {
    if (c >= min_count) ranked.emplace_back(tok, c);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens = special_tokens();
  for (auto& [tok, _] : ranked) {
    if (max_size > 0 && static_cast<int>(tokens.size()) >= max_size) break;
    if (std::find(tokens.begin(), tokens.begin() + kSpecialCount, tok) !=
        tokens.begin() + kSpecialCount) {
      continue;
    }
    tokens.push_back(tok);
  }
  return from_tokens(std::move(tokens));
}

std::optional<int> WordVocab::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int WordVocab::id(std::string_view token) const {
  return find(token).value_or(kUnkId);
}

const std::string& WordVocab::token(int id) const {
  if (id < 0 || id >= size()) {
    throw VocabularyError("word vocab: id " + std::to_string(id) +
                          " out of range");
  }
  return tokens_[id];
}

std::vector<int> WordVocab::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

int WordVocab::add(const std::string& token) {
  if (auto existing = find(token)) return *existing;
  tokens_.push_back(token);
  index_.emplace(token, size() - 1);
  return size() - 1;
}

void WordVocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw FormatError("word vocab: cannot write " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

WordVocab WordVocab::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("word vocab: cannot open " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return from_tokens(std::move(tokens));
}

}  // namespace entlm
