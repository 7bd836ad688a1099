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

#ifndef ENTLM_CORPUS_H_
#define ENTLM_CORPUS_H_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace entlm {

// Hyperlink span [start, end) over document tokens and its target page.
struct Annotation {
  int start = 0;
  int end = 0;
  std::string title;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

// Word-tokenized page text with hyperlink annotations.
struct AnnotatedDocument {
  std::string language;
  std::string title;
  std::vector<std::string> tokens;
  // Token indices at which a new sentence begins. Absent when the source
  // carries no sentence markers; the terminal-punctuation rule then applies.
  std::optional<std::vector<int>> sentence_breaks;
  std::vector<Annotation> annotations;

  // Throws FormatError on out-of-range or overlapping annotations.
  void validate() const;

  friend bool operator==(const AnnotatedDocument&,
                         const AnnotatedDocument&) = default;
};

// One JSON object per line:
//   {"lang": ..., "title": ..., "tokens": [...], "sentence_breaks": [...],
//    "annotations": [[start, end, title], ...]}
AnnotatedDocument parse_document(std::string_view json_line);
std::string serialize_document(const AnnotatedDocument& doc);
std::vector<AnnotatedDocument> read_corpus(const std::filesystem::path& path);
void write_corpus(const std::filesystem::path& path,
                  const std::vector<AnnotatedDocument>& docs);

inline constexpr int kDefaultMaxWords = 512;

// Sentence spans [begin, end) of a document, from explicit breaks or the
// terminal-punctuation fallback.
std::vector<std::pair<int, int>> sentence_spans(const AnnotatedDocument& doc);

// Greedily packs whole sentences into sequences of at most max_words tokens.
// A sentence longer than max_words is hard-split. Annotations that cross a
// sequence boundary are dropped; the rest are re-indexed.
std::vector<AnnotatedDocument> split_sequences(const AnnotatedDocument& doc,
                                               int max_words = kDefaultMaxWords);

// Tokens joined with single spaces.
std::string join_tokens(const std::vector<std::string>& tokens, int begin,
                        int end);

}  // namespace entlm

#endif  // ENTLM_CORPUS_H_
