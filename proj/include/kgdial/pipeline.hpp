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

#include "kgdial/graph_weight.hpp"
#include "kgdial/kg.hpp"
#include "kgdial/mask.hpp"
#include "kgdial/model.hpp"
#include "kgdial/sequence.hpp"
#include "kgdial/vocab.hpp"

namespace kgdial {

// Everything the model needs for one sample: the assembled sequence, the
// question-conditioned selection and the knowledge key columns derived from it.
struct PreparedSample {
  InputSequence seq;
  WeightedGraph weights;
  Selection selection;
  KnowledgeColumns knowledge;
};

struct PrepareOptions {
  int k_entity = 7;
  int k_relation = 7;
  AssemblyLimits limits;
  bool use_kg_mask = true;
  bool with_response = true;
};

// Scores the graph against the question using the model's current token
// embeddings (cosine scorer) and builds the mask columns.
PreparedSample prepare_sample(const DialogueSample& sample, const GraphOrder& order,
                              const Vocabulary& vocab, const Transformer<float>& model,
                              const PrepareOptions& options);

}  // namespace kgdial
