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

#ifndef ENTLM_TOY_CORPUS_H_
#define ENTLM_TOY_CORPUS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "entlm/corpus.h"
#include "entlm/entity_vocab.h"

namespace entlm {

// Synthetic parallel corpus: every sentence is produced from one template in
// all languages at once, with the same entities filling the slots. Entity k
// has canonical key "Q<k>" and per-language surface forms that share no
// tokens across languages.
struct ToyCorpusOptions {
  std::vector<std::string> languages = {"en", "de"};
  int entities = 30;
  // Parallel sentence groups; each yields one single-sentence document per
  // language.
  int train_groups = 250;
  int heldout_groups = 50;
  std::uint64_t seed = 1;
};

struct ToyCorpus {
  std::vector<AnnotatedDocument> train;
  std::vector<AnnotatedDocument> heldout;
  InterLanguageLinks links;
  // heldout[i] belongs to parallel group heldout_group[i].
  std::vector<int> heldout_group;
};

ToyCorpus make_toy_corpus(const ToyCorpusOptions& options = {});

// Surface tokens and page title of toy entity k in `language`.
std::vector<std::string> toy_entity_surface(const std::string& language, int k);
std::string toy_entity_title(const std::string& language, int k);

}  // namespace entlm

#endif  // ENTLM_TOY_CORPUS_H_
