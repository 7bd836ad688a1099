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

#include "entlm/corpus.h"

#include <algorithm>
#include <fstream>

#include "entlm/error.h"
#include "json.hpp"

namespace entlm {
namespace {

using nlohmann::json;

bool is_terminal_punctuation(std::string_view token) {
  static constexpr std::string_view kTerminals[] = {
      ".", "!", "?", "\xe3\x80\x82" /* 。 */, "\xef\xbc\x81" /* ！ */,
      "\xef\xbc\x9f" /* ？ */};
  return std::find(std::begin(kTerminals), std::end(kTerminals), token) !=
         std::end(kTerminals);
}

}  // namespace

void AnnotatedDocument::validate() const {
  const int n = static_cast<int>(tokens.size());
  std::vector<Annotation> sorted = annotations;
  std::sort(sorted.begin(), sorted.end(),
            [](const Annotation& a, const Annotation& b) {
              return a.start < b.start;
            });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const Annotation& a = sorted[i];
    if (a.start < 0 || a.start >= a.end || a.end > n) {
      throw FormatError("document '" + title + "': annotation [" +
                        std::to_string(a.start) + ", " +
                        std::to_string(a.end) + ") outside 0.." +
                        std::to_string(n));
    }
    if (i > 0 && a.start < sorted[i - 1].end) {
      throw FormatError("document '" + title + "': overlapping annotations at " +
                        std::to_string(a.start));
    }
  }
  if (sentence_breaks) {
    int prev = 0;
    for (int b : *sentence_breaks) {
      if (b < prev || b > n) {
        throw FormatError("document '" + title +
                          "': sentence breaks must be ascending within 0.." +
                          std::to_string(n));
      }
      prev = b;
    }
  }
}

AnnotatedDocument parse_document(std::string_view json_line) {
  json j;
  try {
    j = json::parse(json_line);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("corpus: invalid JSON: ") + e.what());
  }
  AnnotatedDocument doc;
  try {
    doc.language = j.at("lang").get<std::string>();
    doc.title = j.value("title", std::string());
    doc.tokens = j.at("tokens").get<std::vector<std::string>>();
    if (j.contains("sentence_breaks")) {
      doc.sentence_breaks = j.at("sentence_breaks").get<std::vector<int>>();
    }
    if (j.contains("annotations")) {
      for (const json& a : j.at("annotations")) {
        if (!a.is_array() || a.size() != 3) {
          throw FormatError("corpus: annotation must be [start, end, title]");
        }
        doc.annotations.push_back(
            {a[0].get<int>(), a[1].get<int>(), a[2].get<std::string>()});
      }
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("corpus: ") + e.what());
  }
  doc.validate();
  return doc;
}

std::string serialize_document(const AnnotatedDocument& doc) {
  json j;
  j["lang"] = doc.language;
  j["title"] = doc.title;
  j["tokens"] = doc.tokens;
  if (doc.sentence_breaks) j["sentence_breaks"] = *doc.sentence_breaks;
  json anns = json::array();
  for (const Annotation& a : doc.annotations) {
    anns.push_back(json::array({a.start, a.end, a.title}));
  }
  j["annotations"] = std::move(anns);
  return j.dump();
}

std::vector<AnnotatedDocument> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("corpus: cannot open " + path.string());
  std::vector<AnnotatedDocument> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      docs.push_back(parse_document(line));
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " +
                        e.what());
    }
  }
  return docs;
}

void write_corpus(const std::filesystem::path& path,
                  const std::vector<AnnotatedDocument>& docs) {
  std::ofstream out(path);
  if (!out) throw FormatError("corpus: cannot write " + path.string());
  for (const auto& doc : docs) out << serialize_document(doc) << '\n';
}

std::vector<std::pair<int, int>> sentence_spans(const AnnotatedDocument& doc) {
  const int n = static_cast<int>(doc.tokens.size());
  std::vector<std::pair<int, int>> spans;
  if (n == 0) return spans;
  std::vector<int> starts;
  if (doc.sentence_breaks) {
    for (int b : *doc.sentence_breaks) {
      if (b > 0 && b < n && (starts.empty() || b > starts.back())) {
        starts.push_back(b);
      }
    }
  } else {
    for (int i = 0; i + 1 < n; ++i) {
      if (is_terminal_punctuation(doc.tokens[i])) starts.push_back(i + 1);
    }
  }
  int begin = 0;
  for (int s : starts) {
    spans.emplace_back(begin, s);
    begin = s;
  }
  spans.emplace_back(begin, n);
  return spans;
}

namespace {

AnnotatedDocument make_sequence(const AnnotatedDocument& doc, int begin,
                                int end,
                                const std::vector<int>& sentence_starts) {
  if (begin == 0 && end == static_cast<int>(doc.tokens.size())) return doc;
  AnnotatedDocument seq;
  seq.language = doc.language;
  seq.title = doc.title;
  seq.tokens.assign(doc.tokens.begin() + begin, doc.tokens.begin() + end);
  std::vector<int> breaks;
  for (int s : sentence_starts) {
    if (s > begin && s < end) breaks.push_back(s - begin);
  }
  seq.sentence_breaks = std::move(breaks);
  for (const Annotation& a : doc.annotations) {
    if (a.start >= begin && a.end <= end) {
      seq.annotations.push_back({a.start - begin, a.end - begin, a.title});
    }
  }
  std::sort(seq.annotations.begin(), seq.annotations.end(),
            [](const Annotation& x, const Annotation& y) {
              return x.start < y.start;
            });
  return seq;
}

}  // namespace

std::vector<AnnotatedDocument> split_sequences(const AnnotatedDocument& doc,
                                               int max_words) {
  if (max_words < 1) throw ContractError("split_sequences: max_words < 1");
  const auto sentences = sentence_spans(doc);
  std::vector<int> starts;
  for (const auto& [b, _] : sentences) starts.push_back(b);

  std::vector<AnnotatedDocument> out;
  int cur_begin = -1, cur_end = -1;
  auto flush = [&] {
    if (cur_begin >= 0) out.push_back(make_sequence(doc, cur_begin, cur_end, starts));
    cur_begin = cur_end = -1;
  };
  for (const auto& [b, e] : sentences) {
    const int len = e - b;
    if (len > max_words) {
      flush();
      for (int s = b; s < e; s += max_words) {
        out.push_back(make_sequence(doc, s, std::min(e, s + max_words), starts));
      }
      continue;
    }
    if (cur_begin >= 0 && (e - cur_begin) > max_words) flush();
    if (cur_begin < 0) cur_begin = b;
    cur_end = e;
  }
  flush();
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens, int begin,
                        int end) {
  std::string s;
  for (int i = begin; i < end; ++i) {
    if (i > begin) s += ' ';
    s += tokens[i];
  }
  return s;
}

}  // namespace entlm
