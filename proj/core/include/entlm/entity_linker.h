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

#ifndef ENTLM_ENTITY_LINKER_H_
#define ENTLM_ENTITY_LINKER_H_

#include <map>
#include <set>
#include <string>
#include <vector>

#include "entlm/corpus.h"
#include "entlm/entity_vocab.h"

namespace entlm {

// Surface string (tokens joined by single spaces) -> entity id for one page.
// Surfaces that referred to more than one entity are recorded as ambiguous
// and never returned.
class MentionMap {
 public:
  // Records a candidate; a second, different id makes the surface ambiguous.
  void add(const std::string& surface, int entity_id);

  const int* find(const std::string& surface) const;
  bool ambiguous(const std::string& surface) const {
    return ambiguous_.count(surface) != 0;
  }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::map<std::string, int>& entries() const { return entries_; }
  // Longest surface in tokens.
  int max_tokens() const { return max_tokens_; }

 private:
  std::map<std::string, int> entries_;
  std::set<std::string> ambiguous_;
  int max_tokens_ = 0;
};

// Anchor texts of the page's hyperlinks whose targets resolve in `vocab`.
MentionMap build_mention_map(const AnnotatedDocument& page,
                             const EntityVocab& vocab);

struct EntityMention {
  int start = 0;
  int end = 0;
  int entity_id = 0;

  friend bool operator==(const EntityMention&, const EntityMention&) = default;
};

// Left-to-right scan taking the longest surface in `map` at each position.
// A match whose link probability is below min_link_prob is discarded without
// trying shorter surfaces at the same start, so raising the threshold can
// only remove mentions. Surfaces unseen in `stats` count as probability 0.
std::vector<EntityMention> detect_entities(
    const std::vector<std::string>& tokens, const MentionMap& map,
    const MentionStats& stats, const std::string& language,
    double min_link_prob = kDefaultMinLinkProbability);

// (language, page title) -> anchor strings that link to that page.
using AnchorIndex = std::map<LanguageTitle, std::set<std::string>>;
AnchorIndex build_anchor_index(const std::vector<AnnotatedDocument>& corpus);

// For every entity of `source`, finds its target-language article through
// the inter-language links and emits that article's anchor strings.
MentionMap translate_mention_map(const MentionMap& source,
                                 const EntityVocab& vocab,
                                 const InterLanguageLinks& links,
                                 const std::string& target_language,
                                 const AnchorIndex& anchors);

// JSON array of [start, end, entity_id].
std::string mentions_to_json(const std::vector<EntityMention>& mentions);

}  // namespace entlm

#endif  // ENTLM_ENTITY_LINKER_H_
