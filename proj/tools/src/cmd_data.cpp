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

#include <fstream>
#include <map>

#include "commands.h"
#include "entlm/cloze.h"
#include "entlm/corpus.h"
#include "entlm/entity_linker.h"
#include "entlm/entity_vocab.h"
#include "entlm/error.h"
#include "entlm/relation.h"
#include "entlm/toy_corpus.h"
#include "json.hpp"

namespace entlm::cli {

using nlohmann::json;

namespace {

constexpr int kToyOffsets[] = {1, 7, 11, 13};

int toy_index(const std::string& title) {
  return std::stoi(title.substr(title.rfind('_') + 1));
}

// Relation label from the entity offset; head is the entity the offset
// starts from, whichever comes first in the sentence.
std::optional<REInstance> toy_relation(const AnnotatedDocument& doc, int entities) {
  if (doc.annotations.size() != 2) return std::nullopt;
  const auto& a0 = doc.annotations[0];
  const auto& a1 = doc.annotations[1];
  const int k0 = toy_index(a0.title), k1 = toy_index(a1.title);
  for (int r = 0; r < 4; ++r) {
    const int d = kToyOffsets[r];
    REInstance inst;
    inst.tokens = doc.tokens;
    inst.label = "r" + std::to_string(r);
    if ((k0 + d) % entities == k1) {
      inst.head = {a0.start, a0.end};
      inst.tail = {a1.start, a1.end};
      return inst;
    }
    if ((k1 + d) % entities == k0) {
      inst.head = {a1.start, a1.end};
      inst.tail = {a0.start, a0.end};
      return inst;
    }
  }
  return std::nullopt;
}

void write_toy_ner(const std::filesystem::path& path, const std::vector<AnnotatedDocument>& docs) {
  std::ofstream out(path);
  for (const auto& doc : docs) {
    std::vector<std::string> tags(doc.tokens.size(), "O");
    for (const auto& a : doc.annotations) {
      const std::string type = a.end - a.start > 1 ? "LOC" : "PER";
      for (int i = a.start; i < a.end; ++i) tags[i] = (i == a.start ? "B-" : "I-") + type;
    }
    for (std::size_t i = 0; i < tags.size(); ++i) out << doc.tokens[i] << ' ' << tags[i] << '\n';
    out << '\n';
  }
}

std::string surface_of(const AnnotatedDocument& doc, const Annotation& a) {
  return join_tokens(doc.tokens, a.start, a.end);
}

// Question in the question document's language about the first mention;
// the answer is the second mention of the context document.
void write_toy_qa(const std::filesystem::path& path, const std::vector<AnnotatedDocument>& docs,
                  const std::vector<std::string>& languages) {
  json data = json::array();
  const std::size_t L = languages.size();
  for (std::size_t g = 0; g + L <= docs.size(); g += L) {
    for (std::size_t qi = 0; qi < L; ++qi) {
      for (std::size_t ci = 0; ci < L; ++ci) {
        const auto& qdoc = docs[g + qi];
        const auto& cdoc = docs[g + ci];
        if (qdoc.annotations.size() != 2 || cdoc.annotations.size() != 2) continue;
        const Annotation* ask = &qdoc.annotations[0];
        // Same entity pair in the context; find the other one.
        const Annotation* answer = nullptr;
        for (const auto& a : cdoc.annotations) {
          if (toy_index(a.title) != toy_index(ask->title)) answer = &a;
        }
        if (!answer) continue;
        const std::string context = join_tokens(cdoc.tokens, 0, static_cast<int>(cdoc.tokens.size()));
        const std::string prefix = join_tokens(cdoc.tokens, 0, answer->start);
        const std::size_t start = answer->start == 0 ? 0 : prefix.size() + 1;
        json qa = {{"id", qdoc.title + "-" + qdoc.language + "-" + cdoc.language},
                   {"question", languages[qi] + "_who " + surface_of(qdoc, *ask) + " ?"},
                   {"question_lang", qdoc.language},
                   {"answers", json::array({{{"text", surface_of(cdoc, *answer)},
                                             {"answer_start", start}}})}};
        data.push_back({{"paragraphs", json::array({{{"context", context},
                                                     {"context_lang", cdoc.language},
                                                     {"qas", json::array({qa})}}})}});
      }
    }
  }
  std::ofstream(path) << json{{"version", "toy"}, {"data", data}}.dump() << '\n';
}

void write_toy_cloze(const std::filesystem::path& path, const std::vector<AnnotatedDocument>& docs,
                     int entities) {
  std::ofstream out(path);
  for (const auto& doc : docs) {
    if (doc.annotations.size() != 2) continue;
    const auto& x = doc.annotations[0];
    const auto& y = doc.annotations[1];
    std::string templ;
    for (int i = 0; i < static_cast<int>(doc.tokens.size());) {
      std::string piece;
      if (i == x.start) {
        piece = kSubjectSlot;
        i = x.end;
      } else if (i == y.start) {
        piece = kObjectSlot;
        i = y.end;
      } else {
        piece = doc.tokens[i++];
      }
      templ += (templ.empty() ? "" : " ") + piece;
    }
    const int gold = toy_index(y.title);
    json cands = json::array();
    const int count = std::min(10, entities);
    // A run of consecutive ids with the gold entity at a varying position.
    const int gold_index = toy_index(x.title) % count;
    for (int j = 0; j < count; ++j) {
      const int k = ((gold - gold_index + j) % entities + entities) % entities;
      const auto surface = toy_entity_surface(doc.language, k);
      cands.push_back({{"surface", join_tokens(surface, 0, static_cast<int>(surface.size()))},
                       {"entity", "Q" + std::to_string(k)}});
    }
    out << json{{"lang", doc.language}, {"template", templ},
                {"sub_surface", surface_of(doc, x)},
                {"sub_entity", "Q" + std::to_string(toy_index(x.title))},
                {"candidates", cands}, {"gold_index", gold_index}}
               .dump()
        << '\n';
  }
}

std::vector<AnnotatedDocument> read_all(const std::vector<std::filesystem::path>& paths) {
  std::vector<AnnotatedDocument> docs;
  for (const auto& p : paths) {
    auto part = read_corpus(p);
    docs.insert(docs.end(), std::make_move_iterator(part.begin()),
                std::make_move_iterator(part.end()));
  }
  return docs;
}

}  // namespace

void cmd_toy_data(RunContext& ctx) {
  auto& cfg = ctx.cfg();
  ToyCorpusOptions o;
  o.languages = cfg.get_list("toy.languages", o.languages);
  o.entities = static_cast<int>(cfg.get_int("toy.entities", o.entities));
  o.train_groups = static_cast<int>(cfg.get_int("toy.train_groups", o.train_groups));
  o.heldout_groups = static_cast<int>(cfg.get_int("toy.heldout_groups", o.heldout_groups));
  o.seed = ctx.seed();
  const auto dir = ctx.output("output.dir");
  ctx.ready();
  if (o.entities < 14) throw ValidationError("toy.entities must be at least 14");
  std::filesystem::create_directories(dir);
  const ToyCorpus c = make_toy_corpus(o);
  const auto put = [&](const std::string& key, const std::string& name) {
    ctx.record_output(key, dir / name);
    return dir / name;
  };
  write_corpus(put("output.train", "train.jsonl"), c.train);
  write_corpus(put("output.heldout", "heldout.jsonl"), c.heldout);
  c.links.write_tsv(put("output.links", "links.tsv"));

  std::vector<REInstance> re_train, re_test;
  for (const auto& d : c.train) {
    if (auto r = toy_relation(d, o.entities)) re_train.push_back(*r);
  }
  for (const auto& d : c.heldout) {
    if (auto r = toy_relation(d, o.entities)) re_test.push_back(*r);
  }
  write_re_file(put("output.re_train", "re_train.tsv"), re_train);
  write_re_file(put("output.re_test", "re_test.tsv"), re_test);
  write_toy_ner(put("output.ner_train", "ner_train.conll"), c.train);
  write_toy_ner(put("output.ner_test", "ner_test.conll"), c.heldout);
  write_toy_qa(put("output.qa_train", "qa_train.json"), c.train, o.languages);
  write_toy_qa(put("output.qa_test", "qa_test.json"), c.heldout, o.languages);
  write_toy_cloze(put("output.cloze", "cloze.jsonl"), c.heldout, o.entities);
  ctx.out() << "wrote " << c.train.size() << " train and " << c.heldout.size()
            << " held-out documents to " << dir.string() << '\n';
}

void cmd_build_vocab(RunContext& ctx) {
  auto& cfg = ctx.cfg();
  const auto corpus_paths = ctx.input_list("input.corpus");
  const auto links_path = ctx.optional_input("input.links");
  EntityVocabOptions vo;
  vo.min_languages = static_cast<int>(cfg.get_int("vocab.min_languages", vo.min_languages));
  vo.top_k = cfg.get_int("vocab.top_k", vo.top_k);
  const int min_count = static_cast<int>(cfg.get_int("vocab.word_min_count", 1));
  const int max_size = static_cast<int>(cfg.get_int("vocab.word_max_size", 0));
  const auto words_out = ctx.output("output.words");
  const auto entities_out = ctx.output("output.entities");
  const auto stats_out = ctx.optional_output("output.mention_stats");
  ctx.ready();
  if (vo.min_languages < 1 || vo.top_k < 0) {
    throw ValidationError("vocab.min_languages must be >= 1 and vocab.top_k >= 0");
  }

  const auto docs = read_all(corpus_paths);
  const InterLanguageLinks links =
      links_path ? InterLanguageLinks::read_tsv(*links_path) : InterLanguageLinks{};
  const WordVocab words = WordVocab::build(docs, min_count, max_size);
  const EntityVocab entities = build_entity_vocab(docs, links, vo);
  words.save(words_out);
  entities.save(entities_out);
  if (stats_out) collect_mention_stats(docs).save(*stats_out);
  ctx.out() << "words: " << words.size() << "  entities: " << entities.size()
            << " (including specials)\n";
}

void cmd_link_entities(RunContext& ctx) {
  auto& cfg = ctx.cfg();
  const auto corpus_path = ctx.input("input.corpus");
  const auto vocab_path = ctx.input("input.entities");
  const auto stats_path = ctx.input("input.mention_stats");
  const auto targets_path = ctx.optional_input("input.targets");
  const auto links_path = ctx.optional_input("input.links");
  const double threshold = cfg.get_double("link.min_link_prob", kDefaultMinLinkProbability);
  const auto out_path = ctx.output("output.mentions");
  ctx.ready();
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ValidationError("link.min_link_prob must lie in [0, 1]");
  }
  if (targets_path && !links_path) {
    throw ValidationError("input.targets needs input.links for translation");
  }

  const auto pages = read_corpus(corpus_path);
  const auto vocab = EntityVocab::load(vocab_path);
  const auto stats = MentionStats::load(stats_path);
  std::vector<AnnotatedDocument> targets;
  InterLanguageLinks links;
  AnchorIndex anchors;
  if (targets_path) {
    targets = read_corpus(*targets_path);
    links = InterLanguageLinks::read_tsv(*links_path);
    anchors = build_anchor_index(targets);
    if (targets.size() != pages.size()) {
      throw ValidationError("input.targets must pair one document with each page");
    }
  }
  std::ofstream out(out_path);
  if (!out) throw FormatError("cannot write " + out_path.string());
  std::size_t total = 0;
  for (std::size_t i = 0; i < pages.size(); ++i) {
    const MentionMap own = build_mention_map(pages[i], vocab);
    const AnnotatedDocument& doc = targets_path ? targets[i] : pages[i];
    const MentionMap map =
        targets_path ? translate_mention_map(own, vocab, links, doc.language, anchors) : own;
    const auto mentions = detect_entities(doc.tokens, map, stats, doc.language, threshold);
    total += mentions.size();
    json rec = {{"lang", doc.language}, {"title", doc.title},
                {"mentions", json::parse(mentions_to_json(mentions))}};
    json surfaces = json::array();
    for (const auto& m : mentions) {
      surfaces.push_back({join_tokens(doc.tokens, m.start, m.end), vocab.entry(m.entity_id).key});
    }
    rec["surfaces"] = surfaces;
    out << rec.dump() << '\n';
  }
  ctx.out() << "linked " << total << " mentions in " << pages.size() << " documents\n";
}

}  // namespace entlm::cli
