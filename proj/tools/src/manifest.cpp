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

#include "manifest.h"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>

#include "entlm/error.h"
#include "json.hpp"

namespace entlm::cli {

using nlohmann::json;

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("digest: cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error("digest: OpenSSL init failed");
  }
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

namespace {

json records_to_json(const std::map<std::string, FileRecord>& records) {
  json j = json::object();
  for (const auto& [key, r] : records) j[key] = {{"path", r.path}, {"sha256", r.sha256}};
  return j;
}

std::map<std::string, FileRecord> records_from_json(const json& j) {
  std::map<std::string, FileRecord> out;
  for (const auto& [key, r] : j.items()) {
    out[key] = {r.at("path").get<std::string>(), r.at("sha256").get<std::string>()};
  }
  return out;
}

}  // namespace

void Manifest::save(const std::filesystem::path& path) const {
  json j;
  j["manifest_version"] = kManifestVersion;
  j["tool"] = "entlm";
  j["tool_version"] = tool_version;
  j["command"] = command;
  j["seed"] = seed;
  j["config"] = config;
  j["inputs"] = records_to_json(inputs);
  j["outputs"] = records_to_json(outputs);
  std::ofstream out(path);
  if (!out) throw FormatError("manifest: cannot write " + path.string());
  out << j.dump(2) << '\n';
}

Manifest Manifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("manifest: cannot open " + path.string());
  Manifest m;
  try {
    const json j = json::parse(in);
    if (j.at("manifest_version").get<int>() != kManifestVersion) {
      throw ValidationError("manifest: unsupported version in " + path.string());
    }
    m.command = j.at("command").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.tool_version = j.at("tool_version").get<std::string>();
    m.config = j.at("config").get<std::map<std::string, std::string>>();
    m.inputs = records_from_json(j.at("inputs"));
    m.outputs = records_from_json(j.at("outputs"));
  } catch (const json::exception& e) {
    throw ValidationError("manifest: " + std::string(e.what()));
  }
  return m;
}

}  // namespace entlm::cli
