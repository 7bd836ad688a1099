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

#ifndef ENTLM_TOOLS_MANIFEST_H_
#define ENTLM_TOOLS_MANIFEST_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace entlm::cli {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kManifestVersion = 1;

// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

struct FileRecord {
  std::string path;
  std::string sha256;
};

// Everything needed to repeat a run: the command, its full configuration
// after overrides and defaults, and digests of what it read and wrote.
struct Manifest {
  std::string command;  // e.g. "pretrain" or "finetune re"
  std::map<std::string, std::string> config;
  std::uint64_t seed = 0;
  std::string tool_version = kToolVersion;
  // Keyed by the config key that named the file.
  std::map<std::string, FileRecord> inputs;
  std::map<std::string, FileRecord> outputs;

  void save(const std::filesystem::path& path) const;
  static Manifest load(const std::filesystem::path& path);
};

}  // namespace entlm::cli

#endif  // ENTLM_TOOLS_MANIFEST_H_
