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

#include "kgdial/sequence.hpp"

#include <algorithm>

#include "kgdial/text.hpp"

namespace kgdial {

GraphOrder file_order(const KnowledgeGraph& graph) {
  GraphOrder order;
  std::vector<int> group_of(graph.entities().size(), -1);
  const auto& triples = graph.triples();
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const int s = triples[i].subject;
    if (group_of[static_cast<std::size_t>(s)] < 0) {
      group_of[static_cast<std::size_t>(s)] = static_cast<int>(order.subjects.size());
      order.subjects.push_back(s);
      order.triples.emplace_back();
    }
    order.triples[static_cast<std::size_t>(group_of[static_cast<std::size_t>(s)])].push_back(
        static_cast<int>(i));
  }
  return order;
}

namespace {

template <typename T>
void shuffle_in_place(std::vector<T>& v, std::mt19937_64& rng) {
  // Fisher-Yates with a plain modulo draw so the permutation only depends on
  // the engine, not on the standard library's distribution implementation.
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

GraphOrder shuffled_order(const KnowledgeGraph& graph, std::mt19937_64& rng) {
  GraphOrder base = file_order(graph);
  std::vector<std::size_t> perm(base.subjects.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  shuffle_in_place(perm, rng);
  GraphOrder out;
  for (std::size_t g : perm) {
    out.subjects.push_back(base.subjects[g]);
    auto triples = base.triples[g];
    shuffle_in_place(triples, rng);
    out.triples.push_back(std::move(triples));
  }
  return out;
}

GraphOrder epoch_order(const KnowledgeGraph& graph, std::uint64_t seed, int epoch,
                       const std::string& sample_id) {
  const std::uint64_t h = fnv1a64(sample_id);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(h),
                    static_cast<std::uint32_t>(h >> 32)};
  std::mt19937_64 rng(seq);
  return shuffled_order(graph, rng);
}

namespace {

void validate_order(const KnowledgeGraph& graph, const GraphOrder& order) {
  if (order.subjects.size() != order.triples.size()) {
    throw SequenceError("graph order: group and triple lists differ in length");
  }
  std::vector<int> seen(graph.triples().size(), 0);
  std::vector<int> subject_seen(graph.entities().size(), 0);
  for (std::size_t g = 0; g < order.subjects.size(); ++g) {
    const int s = order.subjects[g];
    if (s < 0 || static_cast<std::size_t>(s) >= subject_seen.size() ||
        subject_seen[static_cast<std::size_t>(s)]++) {
      throw SequenceError("graph order: invalid or repeated subject group");
    }
    for (int t : order.triples[g]) {
      if (t < 0 || static_cast<std::size_t>(t) >= seen.size() ||
          graph.triples()[static_cast<std::size_t>(t)].subject != s ||
          seen[static_cast<std::size_t>(t)]++) {
        throw SequenceError("graph order: triple " + std::to_string(t) +
                            " misplaced or repeated");
      }
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw SequenceError("graph order: not every triple is emitted");
  }
}

}  // namespace

KnowledgeStream linearize_graph(const KnowledgeGraph& graph, const GraphOrder& order,
                                const Vocabulary& vocab) {
  validate_order(graph, order);
  KnowledgeStream ks;
  auto push = [&ks](int tok, int ent, int tri) {
    ks.token_ids.push_back(tok);
    ks.entity_ids.push_back(ent);
    ks.triple_ids.push_back(tri);
  };
  push(kBos, 0, 0);
  int triple_id = 0;
  for (std::size_t g = 0; g < order.subjects.size(); ++g) {
    const int ent = static_cast<int>(g) + 1;
    GroupSpan group;
    group.subject = order.subjects[g];
    group.start = ks.size();
    push(kSubject, ent, 0);
    for (int tok : vocab.encode(graph.entity_surface(group.subject))) push(tok, ent, 0);
    group.subject_end = ks.size();
    for (int t : order.triples[g]) {
      const Triple& triple = graph.triples()[static_cast<std::size_t>(t)];
      ++triple_id;
      TripleSpan span;
      span.triple = t;
      span.start = ks.size();
      push(kRelation, ent, triple_id);
      for (int tok : vocab.encode(graph.relation_surface(triple.relation))) {
        push(tok, ent, triple_id);
      }
      push(kObject, ent, triple_id);
      for (int tok : vocab.encode(graph.entity_surface(triple.object))) push(tok, ent, triple_id);
      span.end = ks.size();
      ks.triple_spans.push_back(span);
    }
    group.end = ks.size();
    ks.group_spans.push_back(group);
  }
  return ks;
}

void truncate_knowledge(KnowledgeStream& ks, int max_tokens) {
  const int budget = std::max(1, max_tokens);
  while (ks.size() > budget && !ks.group_spans.empty()) {
    GroupSpan& group = ks.group_spans.back();
    int cut = group.start;
    if (!ks.triple_spans.empty() && ks.triple_spans.back().start >= group.subject_end) {
      cut = ks.triple_spans.back().start;
      ks.triple_spans.pop_back();
    }
    if (cut <= group.subject_end) {
      cut = group.start;
      ks.group_spans.pop_back();
    } else {
      group.end = cut;
    }
    ks.token_ids.resize(static_cast<std::size_t>(cut));
    ks.entity_ids.resize(static_cast<std::size_t>(cut));
    ks.triple_ids.resize(static_cast<std::size_t>(cut));
  }
}

void InputSequence::append_response_token(int token) {
  position_ids.push_back(size());
  token_ids.push_back(token);
  entity_ids.push_back(0);
  triple_ids.push_back(0);
  type_ids.push_back(kTypeSystem);
}

InputSequence assemble_input(KnowledgeStream knowledge, const std::vector<DialogueTurn>& history,
                             const std::string& question,
                             const std::optional<std::string>& gold_response,
                             const Vocabulary& vocab, const AssemblyLimits& limits,
                             const std::string& sample_id) {
  for (std::size_t i = 1; i < history.size(); ++i) {
    if (history[i].speaker == history[i - 1].speaker) {
      throw SequenceError("sample '" + sample_id + "': history does not alternate");
    }
  }
  truncate_knowledge(knowledge, limits.max_knowledge_tokens);

  InputSequence seq;
  seq.sample_id = sample_id;
  seq.token_ids = std::move(knowledge.token_ids);
  seq.entity_ids = std::move(knowledge.entity_ids);
  seq.triple_ids = std::move(knowledge.triple_ids);
  seq.type_ids.assign(seq.token_ids.size(), kTypeKg);
  seq.triple_spans = std::move(knowledge.triple_spans);
  seq.group_spans = std::move(knowledge.group_spans);

  auto push = [&seq](int tok, int type) {
    seq.token_ids.push_back(tok);
    seq.entity_ids.push_back(0);
    seq.triple_ids.push_back(0);
    seq.type_ids.push_back(type);
  };

  seq.knowledge_end = seq.size();
  push(kSep, kTypeKg);

  // Newest turns win: keep the last max_history_turns turns, then drop the
  // oldest tokens until the token budget holds.
  const std::size_t keep_turns =
      std::min(history.size(), static_cast<std::size_t>(std::max(0, limits.max_history_turns)));
  std::vector<std::pair<int, int>> hist;  // (token, type)
  for (std::size_t i = history.size() - keep_turns; i < history.size(); ++i) {
    const int type = history[i].speaker == Speaker::kUser ? kTypeUser : kTypeSystem;
    for (int tok : vocab.encode(history[i].text)) hist.emplace_back(tok, type);
  }
  const std::size_t max_hist = static_cast<std::size_t>(std::max(0, limits.max_history_tokens));
  const std::size_t skip = hist.size() > max_hist ? hist.size() - max_hist : 0;
  for (std::size_t i = skip; i < hist.size(); ++i) push(hist[i].first, hist[i].second);

  push(kQuestion, kTypeUser);
  seq.question_start = seq.size();
  for (int tok : vocab.encode(question)) push(tok, kTypeUser);

  seq.response_start = seq.size();
  if (gold_response) {
    for (int tok : vocab.encode(*gold_response)) push(tok, kTypeSystem);
    push(kEos, kTypeSystem);
  }

  seq.position_ids.resize(seq.token_ids.size());
  for (std::size_t i = 0; i < seq.position_ids.size(); ++i) {
    seq.position_ids[i] = static_cast<int>(i);
  }
  if (seq.size() > limits.context_limit) {
    throw SequenceError("sample '" + sample_id + "': assembled length " +
                        std::to_string(seq.size()) + " exceeds context limit " +
                        std::to_string(limits.context_limit));
  }
  return seq;
}

void check_sequence(const InputSequence& seq) {
  const std::size_t n = seq.token_ids.size();
  if (seq.position_ids.size() != n || seq.entity_ids.size() != n || seq.triple_ids.size() != n ||
      seq.type_ids.size() != n) {
    throw SequenceError("input streams differ in length");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (seq.position_ids[i] != static_cast<int>(i)) {
      throw SequenceError("position ids must be 0..n-1");
    }
    const bool knowledge = static_cast<int>(i) <= seq.knowledge_end;
    if (knowledge && seq.type_ids[i] != kTypeKg) {
      throw SequenceError("knowledge token without KG type");
    }
    if (!knowledge && (seq.entity_ids[i] != 0 || seq.triple_ids[i] != 0)) {
      throw SequenceError("entity/triple id outside the knowledge segment");
    }
  }
  if (seq.knowledge_end < 0 || static_cast<std::size_t>(seq.knowledge_end) >= n ||
      seq.token_ids[static_cast<std::size_t>(seq.knowledge_end)] != kSep) {
    throw SequenceError("knowledge_end does not point at [SEP]");
  }
  for (const auto& span : seq.triple_spans) {
    if (span.start < 1 || span.end > seq.knowledge_end || span.start >= span.end) {
      throw SequenceError("triple span outside the knowledge segment");
    }
  }
}

}  // namespace kgdial
