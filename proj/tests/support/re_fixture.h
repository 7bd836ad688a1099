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


#ifndef ENTLM_TESTS_SUPPORT_RE_FIXTURE_H_
#define ENTLM_TESTS_SUPPORT_RE_FIXTURE_H_

#include <string>
#include <utility>
#include <vector>

#include "entlm/relation.h"
#include "support/tiny_model.h"

namespace entlm::testing {

inline const std::vector<std::string> kNames{"ann", "ben", "cal", "dot", "eve",
                                      "fay", "gus", "hal", "ivy", "jon"};

inline WordVocab re_words() {
  auto extra = kNames;
  for (const char* w : {"was", "born", "in", "works", "for", "city", "firm", "the"}) {
    extra.push_back(w);
  }
  return tiny_words(extra);
}

// Two relations told apart by the verb between the mentions; half of the
// sentences put the tail first.
inline std::vector<REInstance> toy_relations() {
  std::vector<REInstance> out;
  for (int i = 0; i < 40; ++i) {
    const bool born = i % 2 == 0;
    const std::string a = kNames[i % 10], b = kNames[(i * 3 + 1) % 10];
    REInstance r;
    r.label = born ? "born_in" : "works_for";
    if (born) {
      r.tokens = {a, "was", "born", "in", "the", "city", b};
    } else {
      r.tokens = {a, "works", "for", "the", "firm", b};
    }
    const int last = static_cast<int>(r.tokens.size()) - 1;
    r.head = {0, 1};
    r.tail = {last, last + 1};
    if (i % 4 >= 2) std::swap(r.head, r.tail);
    out.push_back(r);
  }
  return out;
}

}  // namespace entlm::testing

#endif  // ENTLM_TESTS_SUPPORT_RE_FIXTURE_H_
