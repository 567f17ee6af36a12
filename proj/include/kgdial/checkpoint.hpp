// Copyright 2026 The kgdial Authors
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

#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>

#include "json.hpp"
#include "kgdial/model.hpp"

namespace kgdial {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kCheckpointVersion = 1;

nlohmann::ordered_json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::ordered_json& j);

struct Checkpoint {
  ModelConfig config;
  std::uint64_t vocab_hash = 0;
  nlohmann::ordered_json meta;  // free-form run configuration echo
  Parameters<float> params;
};

// File layout: one line of JSON (format version, model config, vocabulary
// hash, meta, tensor manifest with shapes) terminated by '\n', then every
// tensor as little-endian float32 in manifest order, row-major.
void save_checkpoint(const std::filesystem::path& path, const Transformer<float>& model,
                     std::uint64_t vocab_hash, const nlohmann::ordered_json& meta);

Checkpoint load_checkpoint(const std::filesystem::path& path);

Transformer<float> model_from_checkpoint(const Checkpoint& ckpt);

std::string hash_to_hex(std::uint64_t h);

}  // namespace kgdial
