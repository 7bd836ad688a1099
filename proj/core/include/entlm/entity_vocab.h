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

#ifndef ENTLM_ENTITY_VOCAB_H_
#define ENTLM_ENTITY_VOCAB_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "entlm/corpus.h"

namespace entlm {

// (language, title) pair naming one page in one language edition.
using LanguageTitle = std::pair<std::string, std::string>;

// Maps per-language page titles onto a shared canonical key, so that aligned
// pages across editions denote one entity.
class InterLanguageLinks {
 public:
  // Throws FormatError if (language, title) is already mapped elsewhere.
  void add(const std::string& language, const std::string& title,
           const std::string& key);
  const std::string* find(const std::string& language,
                          const std::string& title) const;
  // All (language, title) pairs aligned to key, ordered by language.
  std::vector<LanguageTitle> titles(const std::string& key) const;
  std::size_t size() const { return to_key_.size(); }

  // UTF-8 TSV with columns: language, title, canonical_key.
  static InterLanguageLinks read_tsv(const std::filesystem::path& path);
  void write_tsv(const std::filesystem::path& path) const;

 private:
  std::map<LanguageTitle, std::string> to_key_;
  std::map<std::string, std::set<LanguageTitle>> by_key_;
};

// Canonical key of a page: the link table's key, or "language:title" for
// pages absent from the table.
std::string canonical_key(const InterLanguageLinks& links,
                          const std::string& language,
                          const std::string& title);

struct EntityEntry {
  std::string key;
  std::int64_t link_count = 0;
  // Languages in which the entity is the target of at least one hyperlink.
  std::set<std::string> languages;
  // One or more titles per language, ordered.
  std::set<LanguageTitle> titles;

  friend bool operator==(const EntityEntry&, const EntityEntry&) = default;
};

struct EntityVocabOptions {
  int min_languages = 3;
  std::int64_t top_k = 1'200'000;
};

class EntityVocab {
 public:
  static constexpr int kPadId = 0;
  static constexpr int kMaskId = 1;
  static constexpr int kHeadId = 2;
  static constexpr int kTailId = 3;
  static constexpr int kSpecialCount = 4;

  // Specials only.
  EntityVocab();
  // Specials followed by `entries` in the given order.
  explicit EntityVocab(std::vector<EntityEntry> entries);

  int size() const { return static_cast<int>(entries_.size()); }
  const EntityEntry& entry(int id) const;
  const std::vector<EntityEntry>& entries() const { return entries_; }
  bool is_special(int id) const { return id >= 0 && id < kSpecialCount; }

  std::optional<int> resolve(const std::string& language,
                             const std::string& title) const;
  std::optional<int> find_key(const std::string& key) const;

  // Header line "entlm-entity-vocab\t1", then one entry per line:
  // id, key, language count, hyperlink count, "lang:title;lang:title".
  void save(const std::filesystem::path& path) const;
  static EntityVocab load(const std::filesystem::path& path);

  friend bool operator==(const EntityVocab& a, const EntityVocab& b) {
    return a.entries_ == b.entries_;
  }

 private:
  void index();

  std::vector<EntityEntry> entries_;
  std::map<LanguageTitle, int> by_title_;
  std::map<std::string, int> by_key_;
};

// Merges hyperlink targets across languages via `links`, drops entities
// linked in fewer than min_languages languages, ranks by hyperlink count
// (ties by key) and keeps the top_k.
EntityVocab build_entity_vocab(const std::vector<AnnotatedDocument>& corpus,
                               const InterLanguageLinks& links,
                               const EntityVocabOptions& options = {});

// Per-(language, surface) hyperlink and total occurrence counts.
class MentionStats {
 public:
  struct Counts {
    std::int64_t links = 0;
    std::int64_t total = 0;
    friend bool operator==(const Counts&, const Counts&) = default;
  };

  void add(const std::string& language, const std::string& surface,
           std::int64_t links, std::int64_t total);
  const Counts* find(const std::string& language,
                     const std::string& surface) const;
  // links / total; nullopt for surfaces never observed.
  std::optional<double> link_probability(const std::string& language,
                                         const std::string& surface) const;
  void merge(const MentionStats& other);
  std::size_t size() const { return counts_.size(); }
  const std::map<LanguageTitle, Counts>& counts() const { return counts_; }

  // TSV: language, surface, hyperlink count, total count.
  void save(const std::filesystem::path& path) const;
  static MentionStats load(const std::filesystem::path& path);

  friend bool operator==(const MentionStats&, const MentionStats&) = default;

 private:
  std::map<LanguageTitle, Counts> counts_;
};

inline constexpr double kDefaultMinLinkProbability = 0.01;

// Hyperlink surfaces are counted from annotations; total counts are exact
// token-sequence matches of those surfaces anywhere in same-language text.
MentionStats collect_mention_stats(const std::vector<AnnotatedDocument>& corpus);

}  // namespace entlm

#endif  // ENTLM_ENTITY_VOCAB_H_
