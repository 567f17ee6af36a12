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
#include <functional>
#include <vector>

#include "kgdial/kg.hpp"
#include "kgdial/model.hpp"
#include "kgdial/sequence.hpp"
#include "kgdial/vocab.hpp"

namespace kgdial {

struct TrainConfig {
  double learning_rate = 6.25e-5;
  double adam_epsilon = 1e-8;
  double weight_decay = 0.0;
  int batch_size = 4;
  int grad_accum_steps = 4;
  int epochs = 40;
  std::uint64_t seed = 42;
  int k_entity = 7;
  int k_relation = 7;
  int warmup_steps = 0;
  AssemblyLimits limits;

  void validate() const;  // throws std::invalid_argument
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double valid_loss = 0.0;  // NaN when there is no validation data
};

struct TrainResult {
  Transformer<float> model;  // best-validation state
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  long optimizer_steps = 0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Teacher-forced response NLL with per-epoch triple shuffling and AdamW.
// Single-threaded and deterministic for a fixed config.
TrainResult train(const DatasetSplit& train_split, const DatasetSplit& valid_split,
                  const Vocabulary& vocab, const ModelConfig& model_config,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

// Mean evaluation-mode response NLL, graphs in file order.
double mean_loss(const Transformer<float>& model, const DatasetSplit& split,
                 const Vocabulary& vocab, const TrainConfig& cfg);

std::string history_csv(const std::vector<EpochRecord>& history);

}  // namespace kgdial
