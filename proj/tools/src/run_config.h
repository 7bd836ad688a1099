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

#ifndef ENTLM_TOOLS_RUN_CONFIG_H_
#define ENTLM_TOOLS_RUN_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace entlm::cli {

// Flat dotted keys. A file holds "key = value" lines grouped under
// "[section]" headers, which prefix the keys that follow them. Later
// sources override earlier ones. Every key a command reads is recorded, and
// reject_unknown() fails on anything that was never read.
class RunConfig {
 public:
  void load_file(const std::filesystem::path& path);
  void parse_text(const std::string& text, const std::string& origin = "<text>");
  // "key=value"
  void set_assignment(const std::string& assignment);
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback);
  std::optional<std::string> get_optional(const std::string& key);
  std::string require(const std::string& key);
  std::int64_t get_int(const std::string& key, std::int64_t fallback);
  double get_double(const std::string& key, double fallback);
  bool get_bool(const std::string& key, bool fallback);
  // Comma separated, surrounding spaces trimmed, empty items dropped.
  std::vector<std::string> get_list(const std::string& key,
                                    const std::vector<std::string>& fallback);

  void reject_unknown() const;

  // Values after overrides; defaults that were read are included.
  const std::map<std::string, std::string>& values() const { return values_; }
  std::string to_text() const;

 private:
  std::string consume(const std::string& key, const std::string& fallback);

  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;
};

}  // namespace entlm::cli

#endif  // ENTLM_TOOLS_RUN_CONFIG_H_
