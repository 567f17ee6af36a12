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

#include "kgdial/mask.hpp"

#include <algorithm>
#include <stdexcept>

namespace kgdial {

int KnowledgeColumns::masked_count() const {
  return static_cast<int>(std::count(values.begin(), values.end(), kMaskedValue));
}

KnowledgeColumns knowledge_column_mask(const InputSequence& seq, const Selection& sel,
                                       const KnowledgeGraph& graph) {
  KnowledgeColumns cols;
  cols.values.assign(static_cast<std::size_t>(seq.knowledge_end + 1), 0.0f);
  cols.triple_selected.assign(seq.triple_spans.size(), false);
  if (seq.triple_spans.empty()) return cols;

  bool any = false;
  for (std::size_t i = 0; i < seq.triple_spans.size(); ++i) {
    const auto& span = seq.triple_spans[i];
    if (span.triple < 0 || static_cast<std::size_t>(span.triple) >= graph.triples().size()) {
      throw std::invalid_argument("triple span does not match the graph");
    }
    const Triple& t = graph.triples()[static_cast<std::size_t>(span.triple)];
    const bool selected = (sel.has_entity(t.subject) || sel.has_entity(t.object)) &&
                          sel.has_relation(t.relation);
    cols.triple_selected[i] = selected;
    any = any || selected;
  }
  if (!any) {
    cols.fallback = true;
    return cols;
  }

  for (std::size_t i = 0; i < seq.triple_spans.size(); ++i) {
    if (cols.triple_selected[i]) continue;
    const auto& span = seq.triple_spans[i];
    std::fill(cols.values.begin() + span.start, cols.values.begin() + span.end, kMaskedValue);
  }
  for (const auto& group : seq.group_spans) {
    bool group_visible = false;
    for (std::size_t i = 0; i < seq.triple_spans.size(); ++i) {
      const auto& span = seq.triple_spans[i];
      if (span.start >= group.subject_end && span.end <= group.end && cols.triple_selected[i]) {
        group_visible = true;
        break;
      }
    }
    if (!group_visible) {
      std::fill(cols.values.begin() + group.start, cols.values.begin() + group.subject_end,
                kMaskedValue);
    }
  }
  return cols;
}

KnowledgeColumns open_knowledge_columns(const InputSequence& seq) {
  KnowledgeColumns cols;
  cols.values.assign(static_cast<std::size_t>(seq.knowledge_end + 1), 0.0f);
  cols.triple_selected.assign(seq.triple_spans.size(), true);
  return cols;
}

AttentionMask compose_mask(const InputSequence& seq, const KnowledgeColumns& knowledge,
                           int pad_len) {
  if (pad_len < 0) throw std::invalid_argument("pad_len must be >= 0");
  const int n = seq.size();
  const int total = n + pad_len;
  const int kn = static_cast<int>(knowledge.values.size());
  AttentionMask m;
  m.n = total;
  m.values.assign(static_cast<std::size_t>(total) * static_cast<std::size_t>(total), kMaskedValue);
  for (int i = 0; i < n; ++i) {
    float* row = m.values.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(total);
    for (int j = 0; j <= i; ++j) {
      row[j] = j < kn ? knowledge.values[static_cast<std::size_t>(j)] : 0.0f;
    }
  }
  for (int i = n; i < total; ++i) {
    m.values[static_cast<std::size_t>(i) * static_cast<std::size_t>(total)] = 0.0f;
  }
  return m;
}

}  // namespace kgdial
