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

#include "entlm/entity_vocab.h"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "entlm/error.h"

namespace entlm {
namespace {

constexpr const char* kVocabHeader = "entlm-entity-vocab\t1";

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

// Backslash escapes for the characters the vocab line format reserves.
std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case ';': out += "\\;"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      default: out += c;
    }
  }
  return out;
}

// Splits on unescaped `sep` and unescapes each part.
std::vector<std::string> split_escaped(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '\\' && i + 1 < s.size()) {
      const char n = s[++i];
      cur += n == 't' ? '\t' : n == 'n' ? '\n' : n;
    } else if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

// ---------------------------------------------------------------------------

void InterLanguageLinks::add(const std::string& language,
                             const std::string& title, const std::string& key) {
  LanguageTitle lt{language, title};
  auto it = to_key_.find(lt);
  if (it != to_key_.end()) {
    if (it->second == key) return;
    throw FormatError("links: (" + language + ", " + title +
                      ") maps to both '" + it->second + "' and '" + key + "'");
  }
  to_key_.emplace(lt, key);
  by_key_[key].insert(std::move(lt));
}

const std::string* InterLanguageLinks::find(const std::string& language,
                                            const std::string& title) const {
  auto it = to_key_.find({language, title});
  return it == to_key_.end() ? nullptr : &it->second;
}

std::vector<LanguageTitle> InterLanguageLinks::titles(
    const std::string& key) const {
  auto it = by_key_.find(key);
  if (it == by_key_.end()) return {};
  return {it->second.begin(), it->second.end()};
}

InterLanguageLinks InterLanguageLinks::read_tsv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("links: cannot open " + path.string());
  InterLanguageLinks links;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    auto cols = split(line, '\t');
    if (cols.size() != 3) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected 3 tab-separated columns");
    }
    links.add(cols[0], cols[1], cols[2]);
  }
  return links;
}

void InterLanguageLinks::write_tsv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw FormatError("links: cannot write " + path.string());
  for (const auto& [lt, key] : to_key_) {
    out << lt.first << '\t' << lt.second << '\t' << key << '\n';
  }
}

std::string canonical_key(const InterLanguageLinks& links,
                          const std::string& language,
                          const std::string& title) {
  if (const std::string* key = links.find(language, title)) return *key;
  return language + ":" + title;
}

// ---------------------------------------------------------------------------

EntityVocab::EntityVocab() : EntityVocab(std::vector<EntityEntry>{}) {}

EntityVocab::EntityVocab(std::vector<EntityEntry> entries) {
  for (const char* special : {"[PAD]", "[MASK]", "[HEAD]", "[TAIL]"}) {
    EntityEntry e;
    e.key = special;
    entries_.push_back(std::move(e));
  }
  for (auto& e : entries) entries_.push_back(std::move(e));
  index();
}

void EntityVocab::index() {
  by_title_.clear();
  by_key_.clear();
  for (int id = 0; id < size(); ++id) {
    const EntityEntry& e = entries_[id];
    if (!by_key_.emplace(e.key, id).second) {
      throw FormatError("entity vocab: duplicate key '" + e.key + "'");
    }
    if (is_special(id)) continue;
    for (const auto& lt : e.titles) by_title_.emplace(lt, id);
  }
}

const EntityEntry& EntityVocab::entry(int id) const {
  if (id < 0 || id >= size()) {
    throw VocabularyError("entity vocab: id " + std::to_string(id) +
                          " out of range");
  }
  return entries_[id];
}

std::optional<int> EntityVocab::resolve(const std::string& language,
                                        const std::string& title) const {
  auto it = by_title_.find({language, title});
  if (it == by_title_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> EntityVocab::find_key(const std::string& key) const {
  auto it = by_key_.find(key);
  if (it == by_key_.end()) return std::nullopt;
  return it->second;
}

void EntityVocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw FormatError("entity vocab: cannot write " + path.string());
  out << kVocabHeader << '\n';
  for (int id = 0; id < size(); ++id) {
    const EntityEntry& e = entries_[id];
    out << id << '\t' << escape(e.key) << '\t' << e.languages.size() << '\t'
        << e.link_count << '\t';
    bool first = true;
    for (const auto& [lang, title] : e.titles) {
      if (!first) out << ';';
      first = false;
      out << escape(lang) << ':' << escape(title);
    }
    // Languages with hyperlinks are not recoverable from titles alone.
    out << '\t';
    first = true;
    for (const auto& lang : e.languages) {
      if (!first) out << ';';
      first = false;
      out << escape(lang);
    }
    out << '\n';
  }
}

EntityVocab EntityVocab::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("entity vocab: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != kVocabHeader) {
    throw FormatError(path.string() + ": missing entity vocab header");
  }
  std::vector<EntityEntry> entries;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto cols = split(line, '\t');
    if (cols.size() != 5 && cols.size() != 6) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected 5 or 6 columns");
    }
    const int id = std::stoi(cols[0]);
    if (id != static_cast<int>(entries.size())) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": ids must be dense and ordered");
    }
    EntityEntry e;
    e.key = split_escaped(cols[1], '\x01')[0];
    e.link_count = std::stoll(cols[3]);
    if (!cols[4].empty()) {
      for (const auto& pair : split_escaped(cols[4], ';')) {
        const auto colon = pair.find(':');
        if (colon == std::string::npos) {
          throw FormatError(path.string() + ":" + std::to_string(line_no) +
                            ": title entry without language");
        }
        e.titles.emplace(pair.substr(0, colon), pair.substr(colon + 1));
      }
    }
    if (cols.size() == 6) {
      if (!cols[5].empty()) {
        for (auto& lang : split_escaped(cols[5], ';')) e.languages.insert(lang);
      }
    } else {
      // Five-column files: approximate by the languages of the titles.
      for (const auto& lt : e.titles) e.languages.insert(lt.first);
    }
    if (cols.size() == 6 &&
        static_cast<int>(e.languages.size()) != std::stoi(cols[2])) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": language count mismatch");
    }
    entries.push_back(std::move(e));
  }
  if (entries.size() < kSpecialCount) {
    throw FormatError(path.string() + ": missing special entries");
  }
  EntityVocab vocab;
  vocab.entries_ = std::move(entries);
  vocab.index();
  return vocab;
}

// ---------------------------------------------------------------------------

EntityVocab build_entity_vocab(const std::vector<AnnotatedDocument>& corpus,
                               const InterLanguageLinks& links,
                               const EntityVocabOptions& options) {
  if (options.min_languages < 1) {
    throw ContractError("build_entity_vocab: min_languages must be >= 1");
  }
  if (options.top_k < 1) {
    throw ContractError("build_entity_vocab: top_k must be >= 1");
  }
  std::map<std::string, EntityEntry> merged;
  for (const auto& doc : corpus) {
    for (const auto& a : doc.annotations) {
      const std::string key = canonical_key(links, doc.language, a.title);
      EntityEntry& e = merged[key];
      e.key = key;
      ++e.link_count;
      e.languages.insert(doc.language);
      e.titles.emplace(doc.language, a.title);
    }
  }
  std::vector<EntityEntry> kept;
  for (auto& [key, e] : merged) {
    if (static_cast<int>(e.languages.size()) < options.min_languages) continue;
    for (auto& lt : links.titles(key)) e.titles.insert(lt);
    kept.push_back(std::move(e));
  }
  std::sort(kept.begin(), kept.end(),
            [](const EntityEntry& a, const EntityEntry& b) {
              if (a.link_count != b.link_count) return a.link_count > b.link_count;
              return a.key < b.key;
            });
  if (static_cast<std::int64_t>(kept.size()) > options.top_k) {
    kept.resize(static_cast<std::size_t>(options.top_k));
  }
  return EntityVocab(std::move(kept));
}

// ---------------------------------------------------------------------------

void MentionStats::add(const std::string& language, const std::string& surface,
                       std::int64_t links, std::int64_t total) {
  Counts& c = counts_[{language, surface}];
  c.links += links;
  c.total += total;
}

const MentionStats::Counts* MentionStats::find(
    const std::string& language, const std::string& surface) const {
  auto it = counts_.find({language, surface});
  return it == counts_.end() ? nullptr : &it->second;
}

std::optional<double> MentionStats::link_probability(
    const std::string& language, const std::string& surface) const {
  const Counts* c = find(language, surface);
  if (c == nullptr || c->total <= 0) return std::nullopt;
  return static_cast<double>(c->links) / static_cast<double>(c->total);
}

void MentionStats::merge(const MentionStats& other) {
  for (const auto& [lt, c] : other.counts_) add(lt.first, lt.second, c.links, c.total);
}

void MentionStats::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw FormatError("mention stats: cannot write " + path.string());
  for (const auto& [lt, c] : counts_) {
    out << lt.first << '\t' << lt.second << '\t' << c.links << '\t' << c.total
        << '\n';
  }
}

MentionStats MentionStats::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("mention stats: cannot open " + path.string());
  MentionStats stats;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto cols = split(line, '\t');
    if (cols.size() != 4) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected 4 columns");
    }
    stats.add(cols[0], cols[1], std::stoll(cols[2]), std::stoll(cols[3]));
  }
  return stats;
}

MentionStats collect_mention_stats(
    const std::vector<AnnotatedDocument>& corpus) {
  // Pass 1: hyperlink surfaces per language.
  std::map<std::string, std::unordered_map<std::string, std::int64_t>> links;
  std::map<std::string, int> max_len;
  for (const auto& doc : corpus) {
    for (const auto& a : doc.annotations) {
      ++links[doc.language][join_tokens(doc.tokens, a.start, a.end)];
      int& m = max_len[doc.language];
      m = std::max(m, a.end - a.start);
    }
  }
  // Pass 2: occurrences of those surfaces on token boundaries.
  std::map<std::string, std::unordered_map<std::string, std::int64_t>> totals;
  for (const auto& doc : corpus) {
    auto lit = links.find(doc.language);
    if (lit == links.end()) continue;
    const auto& surfaces = lit->second;
    auto& tot = totals[doc.language];
    const int n = static_cast<int>(doc.tokens.size());
    const int maxl = max_len[doc.language];
    for (int b = 0; b < n; ++b) {
      std::string s;
      for (int e = b + 1; e <= std::min(n, b + maxl); ++e) {
        if (e > b + 1) s += ' ';
        s += doc.tokens[e - 1];
        if (surfaces.count(s) != 0) ++tot[s];
      }
    }
  }
  MentionStats stats;
  for (const auto& [lang, surfaces] : links) {
    for (const auto& [surface, count] : surfaces) {
      stats.add(lang, surface, count, totals[lang][surface]);
    }
  }
  return stats;
}

}  // namespace entlm
