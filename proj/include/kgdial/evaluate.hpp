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

#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "kgdial/kg.hpp"
#include "kgdial/metrics.hpp"
#include "kgdial/model.hpp"
#include "kgdial/sampling.hpp"
#include "kgdial/sequence.hpp"
#include "kgdial/vocab.hpp"

namespace kgdial {

struct EvalOptions {
  DecodingParams decoding;
  int k_entity = 7;
  int k_relation = 7;
  AssemblyLimits limits;
  int threads = 1;
  bool hyp_from_gold = false;  // score the gold responses against themselves
};

struct SampleRecord {
  std::string id;
  std::string question;
  std::string gold;
  std::string hypothesis;
  std::vector<std::string> gold_entities;
  std::vector<std::string> predicted_entities;
  double bleu = 0.0;
};

struct EvalReport {
  double bleu = 0.0;       // mean sentence BLEU x 100
  double entity_f1 = 0.0;  // micro-averaged x 100
  EntityCounts counts;
  int k_entity = 0;
  int k_relation = 0;
  std::vector<SampleRecord> records;  // input order
};

// Per-sample decode seed: the configured seed mixed with the sample id.
std::uint64_t sample_seed(std::uint64_t seed, const std::string& sample_id);

// The lexicon defaults to the entities of `split` when empty.
EvalReport evaluate(const Transformer<float>& model, const DatasetSplit& split,
                    const Vocabulary& vocab, const EvalOptions& options,
                    std::vector<std::string> lexicon = {});

nlohmann::ordered_json report_to_json(const EvalReport& report, const nlohmann::ordered_json& config);

void print_metrics_table(std::ostream& out, const std::vector<EvalReport>& reports);

}  // namespace kgdial
