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

#include "entlm/toy_corpus.h"

#include "entlm/error.h"
#include "entlm/rng.h"

namespace entlm {
namespace {

// A template is a token list where "@0" and "@1" are entity slots. Entity
// pairs are tied to the template through a fixed relation so that context
// carries information about the hidden entity.
struct Template {
  std::vector<std::vector<std::string>> per_language;  // same order as langs
  int offset;  // second entity = (first + offset) % entities
};

std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

// Phrase tables for up to four languages; others reuse a suffixed copy.
std::vector<std::string> phrase(int which, const std::string& lang) {
  static const char* kEn[] = {"@0 is near @1 .", "@0 was founded by @1 .",
                              "people from @0 often visit @1 .",
                              "@0 and @1 signed a treaty ."};
  static const char* kDe[] = {"@0 liegt nahe @1 .", "@0 wurde von @1 gegruendet .",
                              "leute aus @0 besuchen oft @1 .",
                              "@0 und @1 unterzeichneten einen vertrag ."};
  static const char* kFr[] = {"@0 est pres de @1 .", "@0 a ete fonde par @1 .",
                              "les gens de @0 visitent souvent @1 .",
                              "@0 et @1 ont signe un traite ."};
  static const char* kJa[] = {"@0 は @1 の 近く に ある 。", "@0 は @1 に よって 設立 された 。",
                              "@0 の 人々 は よく @1 を 訪れる 。",
                              "@0 と @1 は 条約 に 署名 した 。"};
  if (lang == "en") return words(kEn[which]);
  if (lang == "de") return words(kDe[which]);
  if (lang == "fr") return words(kFr[which]);
  if (lang == "ja") return words(kJa[which]);
  auto toks = words(kEn[which]);
  for (auto& t : toks) {
    if (t[0] != '@' && t != ".") t += "_" + lang;
  }
  return toks;
}

constexpr int kTemplates = 4;
constexpr int kOffsets[kTemplates] = {1, 7, 11, 13};

AnnotatedDocument render(const std::string& lang, int templ, int a, int b,
                         const std::string& title) {
  AnnotatedDocument doc;
  doc.language = lang;
  doc.title = title;
  doc.sentence_breaks = std::vector<int>{};
  for (const auto& tok : phrase(templ, lang)) {
    if (tok == "@0" || tok == "@1") {
      const int k = tok == "@0" ? a : b;
      const auto surface = toy_entity_surface(lang, k);
      const int start = static_cast<int>(doc.tokens.size());
      doc.tokens.insert(doc.tokens.end(), surface.begin(), surface.end());
      doc.annotations.push_back({start, static_cast<int>(doc.tokens.size()),
                                 toy_entity_title(lang, k)});
    } else {
      doc.tokens.push_back(tok);
    }
  }
  return doc;
}

}  // namespace

std::vector<std::string> toy_entity_surface(const std::string& language,
                                            int k) {
  std::vector<std::string> s{language + "_name" + std::to_string(k)};
  // Every third entity has a two-token mention.
  if (k % 3 == 2) s.push_back(language + "_place");
  return s;
}

std::string toy_entity_title(const std::string& language, int k) {
  return language + "/Entity_" + std::to_string(k);
}

ToyCorpus make_toy_corpus(const ToyCorpusOptions& options) {
  if (options.languages.empty() || options.entities < 2) {
    throw ContractError("toy corpus: need languages and >= 2 entities");
  }
  ToyCorpus corpus;
  for (const auto& lang : options.languages) {
    for (int k = 0; k < options.entities; ++k) {
      corpus.links.add(lang, toy_entity_title(lang, k), "Q" + std::to_string(k));
    }
  }
  Rng rng = Rng::substream(options.seed, "toy-corpus");
  const int groups = options.train_groups + options.heldout_groups;
  for (int gidx = 0; gidx < groups; ++gidx) {
    const int templ = static_cast<int>(rng.uniform_int(kTemplates));
    const int a = static_cast<int>(rng.uniform_int(options.entities));
    const int b = (a + kOffsets[templ]) % options.entities;
    const bool heldout = gidx >= options.train_groups;
    for (const auto& lang : options.languages) {
      auto doc = render(lang, templ, a, b, "group" + std::to_string(gidx));
      if (heldout) {
        corpus.heldout.push_back(std::move(doc));
        corpus.heldout_group.push_back(gidx - options.train_groups);
      } else {
        corpus.train.push_back(std::move(doc));
      }
    }
  }
  return corpus;
}

}  // namespace entlm
