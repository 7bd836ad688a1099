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

#include "entlm/entity_linker.h"

#include <algorithm>

#include "json.hpp"

namespace entlm {
namespace {

int token_count(const std::string& surface) {
  return 1 + static_cast<int>(std::count(surface.begin(), surface.end(), ' '));
}

}  // namespace

void MentionMap::add(const std::string& surface, int entity_id) {
  if (surface.empty() || ambiguous_.count(surface) != 0) return;
  auto [it, inserted] = entries_.emplace(surface, entity_id);
  if (!inserted && it->second != entity_id) {
    entries_.erase(it);
    ambiguous_.insert(surface);
    return;
  }
  max_tokens_ = std::max(max_tokens_, token_count(surface));
}

const int* MentionMap::find(const std::string& surface) const {
  auto it = entries_.find(surface);
  return it == entries_.end() ? nullptr : &it->second;
}

MentionMap build_mention_map(const AnnotatedDocument& page,
                             const EntityVocab& vocab) {
  MentionMap map;
  for (const auto& a : page.annotations) {
    const auto id = vocab.resolve(page.language, a.title);
    if (!id) continue;
    map.add(join_tokens(page.tokens, a.start, a.end), *id);
  }
  return map;
}

std::vector<EntityMention> detect_entities(
    const std::vector<std::string>& tokens, const MentionMap& map,
    const MentionStats& stats, const std::string& language,
    double min_link_prob) {
  std::vector<EntityMention> out;
  const int n = static_cast<int>(tokens.size());
  int i = 0;
  while (i < n) {
    bool matched = false;
    for (int len = std::min(map.max_tokens(), n - i); len >= 1; --len) {
      const std::string surface = join_tokens(tokens, i, i + len);
      const int* id = map.find(surface);
      if (id == nullptr) continue;
      matched = true;
      const double p = stats.link_probability(language, surface).value_or(0.0);
      if (p >= min_link_prob) out.push_back({i, i + len, *id});
      i += len;
      break;
    }
    if (!matched) ++i;
  }
  return out;
}

AnchorIndex build_anchor_index(const std::vector<AnnotatedDocument>& corpus) {
  AnchorIndex index;
  for (const auto& doc : corpus) {
    for (const auto& a : doc.annotations) {
      index[{doc.language, a.title}].insert(join_tokens(doc.tokens, a.start, a.end));
    }
  }
  return index;
}

MentionMap translate_mention_map(const MentionMap& source,
                                 const EntityVocab& vocab,
                                 const InterLanguageLinks& links,
                                 const std::string& target_language,
                                 const AnchorIndex& anchors) {
  std::set<int> entity_ids;
  for (const auto& [_, id] : source.entries()) entity_ids.insert(id);
  MentionMap out;
  for (int id : entity_ids) {
    const std::string& key = vocab.entry(id).key;
    for (const auto& [lang, title] : links.titles(key)) {
      if (lang != target_language) continue;
      auto it = anchors.find({lang, title});
      if (it == anchors.end()) continue;
      for (const auto& surface : it->second) out.add(surface, id);
    }
  }
  return out;
}

std::string mentions_to_json(const std::vector<EntityMention>& mentions) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& m : mentions) {
    arr.push_back(nlohmann::json::array({m.start, m.end, m.entity_id}));
  }
  return arr.dump();
}

}  // namespace entlm
