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

#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "kgdial/kg.hpp"
#include "kgdial/vocab.hpp"

namespace kgdial {

enum TokenType : int { kTypeKg = 0, kTypeUser = 1, kTypeSystem = 2, kNumTypes = 3 };

class SequenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Emission order of a graph: subject groups, and graph-triple indices per group.
struct GraphOrder {
  std::vector<int> subjects;
  std::vector<std::vector<int>> triples;
};

// Groups by first appearance of the subject, triples in file order.
GraphOrder file_order(const KnowledgeGraph& graph);

// Uniformly shuffles groups and the triples inside each group.
GraphOrder shuffled_order(const KnowledgeGraph& graph, std::mt19937_64& rng);

// Order used for one sample in one training epoch.
GraphOrder epoch_order(const KnowledgeGraph& graph, std::uint64_t seed, int epoch,
                       const std::string& sample_id);

// Half-open token ranges.
struct TripleSpan {
  int triple = 0;  // index into KnowledgeGraph::triples()
  int start = 0;   // the [R] token
  int end = 0;     // one past the last object token
};

struct GroupSpan {
  int subject = 0;      // entity id
  int start = 0;        // the [S] token
  int subject_end = 0;  // first [R] of the group
  int end = 0;
};

struct KnowledgeStream {
  std::vector<int> token_ids;
  std::vector<int> entity_ids;
  std::vector<int> triple_ids;
  std::vector<TripleSpan> triple_spans;  // triple id t is triple_spans[t - 1]
  std::vector<GroupSpan> group_spans;    // entity id g is group_spans[g - 1]

  int size() const { return static_cast<int>(token_ids.size()); }
};

// [BOS] ([S] subject ([R] relation [O] object)+)* with group-level entity ids
// and per-triple ids; subject tokens carry triple id 0.
KnowledgeStream linearize_graph(const KnowledgeGraph& graph, const GraphOrder& order,
                                const Vocabulary& vocab);

// Drops whole trailing triples, and groups left without triples, until the
// stream fits. [BOS] is never dropped.
void truncate_knowledge(KnowledgeStream& stream, int max_tokens);

struct AssemblyLimits {
  int max_knowledge_tokens = 384;
  int max_history_tokens = 128;
  int max_history_turns = 4;
  int context_limit = 768;
};

struct InputSequence {
  std::string sample_id;
  std::vector<int> token_ids;
  std::vector<int> position_ids;
  std::vector<int> entity_ids;
  std::vector<int> triple_ids;
  std::vector<int> type_ids;
  int knowledge_end = 0;   // index of [SEP]
  int question_start = 0;  // first token after [Q]
  int response_start = 0;  // == size() when there is no response yet
  std::vector<TripleSpan> triple_spans;
  std::vector<GroupSpan> group_spans;

  int size() const { return static_cast<int>(token_ids.size()); }
  bool has_response() const { return response_start < size(); }

  // Appends one generated response token (entity 0, triple 0, SYSTEM type).
  void append_response_token(int token);
};

InputSequence assemble_input(KnowledgeStream knowledge, const std::vector<DialogueTurn>& history,
                             const std::string& question,
                             const std::optional<std::string>& gold_response,
                             const Vocabulary& vocab, const AssemblyLimits& limits,
                             const std::string& sample_id = {});

// Throws SequenceError when an InputSequence invariant is broken.
void check_sequence(const InputSequence& seq);

}  // namespace kgdial
