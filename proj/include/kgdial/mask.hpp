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

#include <vector>

#include "kgdial/graph_weight.hpp"
#include "kgdial/kg.hpp"
#include "kgdial/sequence.hpp"

namespace kgdial {

// Finite stand-in for -inf: exp() of it underflows to exactly 0 in both
// float and double while keeping the arithmetic NaN-free.
inline constexpr float kMaskedValue = -1e9f;

// Additive key-visibility values for positions 0..knowledge_end.
struct KnowledgeColumns {
  std::vector<float> values;
  std::vector<bool> triple_selected;  // per emitted triple, by the selection rule
  bool fallback = false;              // rule hid every triple; segment left open

  int masked_count() const;
};

// A triple span is visible iff (subject or object selected) and relation
// selected. Subject tokens are visible iff any triple of their group is.
// [BOS] and [SEP] are always visible.
KnowledgeColumns knowledge_column_mask(const InputSequence& seq, const Selection& sel,
                                       const KnowledgeGraph& graph);

// Every knowledge position visible; used when the knowledge mask is disabled.
KnowledgeColumns open_knowledge_columns(const InputSequence& seq);

struct AttentionMask {
  int n = 0;
  std::vector<float> values;  // row-major n x n, entries 0 or kMaskedValue

  float at(int i, int j) const { return values[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)]; }
  bool visible(int i, int j) const { return at(i, j) == 0.0f; }
};

// Causal mask intersected with the knowledge key columns. pad_len extra
// rows/columns are masked, except that padded rows may see column 0 so no
// row is entirely masked.
AttentionMask compose_mask(const InputSequence& seq, const KnowledgeColumns& knowledge,
                           int pad_len = 0);

}  // namespace kgdial
