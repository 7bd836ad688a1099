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

#include "entlm/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>

#include "entlm/error.h"
#include "json.hpp"

namespace entlm {
namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads assume a little-endian host");

constexpr char kMagic[8] = {'E', 'N', 'T', 'L', 'M', 'C', 'K', 'P'};

json config_json(const EncoderConfig& c) {
  return {{"word_vocab_size", c.word_vocab_size},
          {"entity_vocab_size", c.entity_vocab_size},
          {"hidden_size", c.hidden_size},
          {"entity_emb_size", c.entity_emb_size},
          {"layers", c.layers},
          {"heads", c.heads},
          {"ffn_size", c.ffn_size},
          {"max_positions", c.max_positions},
          {"type_count", c.type_count},
          {"dropout", c.dropout},
          {"max_entities", c.max_entities},
          {"entity_position_mode",
           c.entity_position_mode == EntityPositionMode::kSum ? "sum" : "mean"},
          {"init_std", c.init_std}};
}

EncoderConfig config_from(const json& j) {
  EncoderConfig c;
  c.word_vocab_size = j.at("word_vocab_size").get<int>();
  c.entity_vocab_size = j.at("entity_vocab_size").get<int>();
  c.hidden_size = j.at("hidden_size").get<int>();
  c.entity_emb_size = j.at("entity_emb_size").get<int>();
  c.layers = j.at("layers").get<int>();
  c.heads = j.at("heads").get<int>();
  c.ffn_size = j.at("ffn_size").get<int>();
  c.max_positions = j.at("max_positions").get<int>();
  c.type_count = j.at("type_count").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.max_entities = j.at("max_entities").get<int>();
  const auto mode = j.at("entity_position_mode").get<std::string>();
  if (mode == "sum") {
    c.entity_position_mode = EntityPositionMode::kSum;
  } else if (mode == "mean") {
    c.entity_position_mode = EntityPositionMode::kMean;
  } else {
    throw FormatError("unknown entity_position_mode '" + mode + "'");
  }
  c.init_std = j.at("init_std").get<double>();
  return c;
}

struct IndexEntry {
  std::string group;
  std::string name;
  const Tensor* tensor;
};

void write_raw(std::ostream& out, const void* data, std::size_t bytes) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
}

void read_raw(std::istream& in, void* data, std::size_t bytes,
              const std::string& what) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(bytes));
  if (in.gcount() != static_cast<std::streamsize>(bytes)) {
    throw FormatError("checkpoint: truncated " + what);
  }
}

}  // namespace

std::string encoder_config_to_json(const EncoderConfig& config) {
  return config_json(config).dump();
}

EncoderConfig encoder_config_from_json(const std::string& text) {
  try {
    return config_from(json::parse(text));
  } catch (const json::exception& e) {
    throw FormatError(std::string("encoder config: ") + e.what());
  }
}

Checkpoint Checkpoint::from_model(const Model& model) {
  Checkpoint ckpt;
  ckpt.config = model.config;
  for (const auto& [name, p] : model.params) ckpt.tensors.emplace(name, p.value);
  return ckpt;
}

Model Checkpoint::to_model() const {
  Model model;
  model.config = config;
  for (const auto& [name, t] : tensors) model.params.add(name, t);
  return model;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  std::vector<IndexEntry> entries;
  for (const auto& [name, t] : tensors) entries.push_back({"param", name, &t});
  for (const auto& [name, slot] : optimizer) {
    entries.push_back({"adam_m", name, &slot.m});
    entries.push_back({"adam_v", name, &slot.v});
  }
  json index = json::array();
  std::uint64_t offset = 0;
  for (const auto& e : entries) {
    index.push_back({{"group", e.group},
                     {"name", e.name},
                     {"shape", e.tensor->shape()},
                     {"dtype", "f64"},
                     {"offset", offset}});
    offset += e.tensor->size() * sizeof(double);
  }
  json optimizer_steps = json::object();
  for (const auto& [name, slot] : optimizer) optimizer_steps[name] = slot.steps;

  json header = {{"config", config_json(config)},
                 {"step", step},
                 {"rng_state", rng_state},
                 {"metadata", metadata},
                 {"optimizer_steps", optimizer_steps},
                 {"index", index},
                 {"payload_bytes", offset}};
  const std::string text = header.dump();

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("checkpoint: cannot write " + tmp.string());
    write_raw(out, kMagic, sizeof(kMagic));
    const std::uint32_t version = kFormatVersion;
    write_raw(out, &version, sizeof(version));
    const std::uint64_t length = text.size();
    write_raw(out, &length, sizeof(length));
    write_raw(out, text.data(), text.size());
    for (const auto& e : entries) {
      write_raw(out, e.tensor->data().data(), e.tensor->size() * sizeof(double));
    }
    out.flush();
    if (!out) throw FormatError("checkpoint: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("checkpoint: cannot open " + path.string());
  char magic[8];
  read_raw(in, magic, sizeof(magic), "magic");
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError(path.string() + ": not an entlm checkpoint");
  }
  std::uint32_t version = 0;
  read_raw(in, &version, sizeof(version), "version");
  if (version != kFormatVersion) {
    throw FormatError(path.string() + ": unsupported checkpoint version " +
                      std::to_string(version));
  }
  std::uint64_t length = 0;
  read_raw(in, &length, sizeof(length), "header length");
  if (length > (1ull << 32)) throw FormatError("checkpoint: implausible header");
  std::string text(length, '\0');
  read_raw(in, text.data(), text.size(), "header");
  const auto payload_start = in.tellg();

  Checkpoint ckpt;
  try {
    const json header = json::parse(text);
    ckpt.config = config_from(header.at("config"));
    ckpt.step = header.at("step").get<std::int64_t>();
    ckpt.rng_state = header.at("rng_state").get<std::string>();
    ckpt.metadata =
        header.at("metadata").get<std::map<std::string, std::string>>();
    for (const auto& e : header.at("index")) {
      if (e.at("dtype").get<std::string>() != "f64") {
        throw FormatError("checkpoint: unsupported dtype");
      }
      Shape shape = e.at("shape").get<Shape>();
      Tensor t(shape, 0.0);
      in.seekg(payload_start + static_cast<std::streamoff>(
                                   e.at("offset").get<std::uint64_t>()));
      const auto name = e.at("name").get<std::string>();
      read_raw(in, t.data().data(), t.size() * sizeof(double), "tensor " + name);
      const auto group = e.at("group").get<std::string>();
      if (group == "param") {
        ckpt.tensors.emplace(name, std::move(t));
      } else if (group == "adam_m") {
        ckpt.optimizer[name].m = std::move(t);
      } else if (group == "adam_v") {
        ckpt.optimizer[name].v = std::move(t);
      } else {
        throw FormatError("checkpoint: unknown tensor group '" + group + "'");
      }
    }
    for (const auto& [name, steps] : header.at("optimizer_steps").items()) {
      ckpt.optimizer[name].steps = steps.get<std::int64_t>();
    }
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": bad checkpoint header: " + e.what());
  }
  return ckpt;
}

bool bit_identical(const Checkpoint& a, const Checkpoint& b) {
  auto same_tensors = [](const std::map<std::string, Tensor>& x,
                         const std::map<std::string, Tensor>& y) {
    if (x.size() != y.size()) return false;
    for (auto ix = x.begin(), iy = y.begin(); ix != x.end(); ++ix, ++iy) {
      if (ix->first != iy->first || !bit_identical(ix->second, iy->second)) {
        return false;
      }
    }
    return true;
  };
  if (!same_tensors(a.tensors, b.tensors)) return false;
  if (a.optimizer.size() != b.optimizer.size()) return false;
  for (auto ia = a.optimizer.begin(), ib = b.optimizer.begin();
       ia != a.optimizer.end(); ++ia, ++ib) {
    if (ia->first != ib->first || ia->second.steps != ib->second.steps ||
        !bit_identical(ia->second.m, ib->second.m) ||
        !bit_identical(ia->second.v, ib->second.v)) {
      return false;
    }
  }
  return encoder_config_to_json(a.config) == encoder_config_to_json(b.config) &&
         a.step == b.step && a.rng_state == b.rng_state &&
         a.metadata == b.metadata;
}

}  // namespace entlm
