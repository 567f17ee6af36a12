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

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "kgdial/model.hpp"
#include "kgdial/sampling.hpp"
#include "kgdial/train.hpp"

namespace kgdial {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Every tunable of a run. Paths are command flags, not config keys, so the
// echo stored in artifacts does not depend on where files live.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  DecodingParams decoding;
  int min_freq = 1;
  int threads = 1;
};

struct ConfigKey {
  std::string name;  // snake_case; the flag is --name with dashes
  std::string help;
};

const std::vector<ConfigKey>& config_keys();

std::string flag_for(const std::string& key);

nlohmann::ordered_json config_to_json(const RunConfig& cfg);

// Overlays the keys present in `j`; unknown keys and wrong types throw
// ConfigError.
void apply_config_json(RunConfig& cfg, const nlohmann::json& j);

// Parses a flag value given as text into the typed key.
void apply_config_text(RunConfig& cfg, const std::string& key, const std::string& text);

// Overlays the keys of a JSON config file onto `base`.
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

// One line per key: flag, default, description.
std::string config_help();

}  // namespace kgdial
