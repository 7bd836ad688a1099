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

#ifndef ENTLM_CHECKPOINT_H_
#define ENTLM_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "entlm/encoder.h"
#include "entlm/model.h"
#include "entlm/optimizer.h"
#include "entlm/tensor.h"

namespace entlm {

// Container layout: 8-byte magic "ENTLMCKP", u32 format version, u64 header
// length, a JSON header, then little-endian float64 payloads at the offsets
// listed in the header index.
struct Checkpoint {
  static constexpr std::uint32_t kFormatVersion = 1;

  EncoderConfig config;
  std::map<std::string, Tensor> tensors;
  // Empty when saved without optimizer state.
  std::map<std::string, AdamW::Slot> optimizer;
  std::int64_t step = 0;
  std::string rng_state;
  // Free-form string entries (word vocabulary, training config, ...).
  std::map<std::string, std::string> metadata;

  static Checkpoint from_model(const Model& model);
  Model to_model() const;

  // Writes to a temporary sibling and renames, so an interrupted save never
  // clobbers the previous file.
  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

bool bit_identical(const Checkpoint& a, const Checkpoint& b);

std::string encoder_config_to_json(const EncoderConfig& config);
EncoderConfig encoder_config_from_json(const std::string& text);

}  // namespace entlm

#endif  // ENTLM_CHECKPOINT_H_
