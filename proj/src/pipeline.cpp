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

#include "kgdial/pipeline.hpp"

namespace kgdial {

PreparedSample prepare_sample(const DialogueSample& sample, const GraphOrder& order,
                              const Vocabulary& vocab, const Transformer<float>& model,
                              const PrepareOptions& options) {
  PreparedSample out;
  std::optional<std::string> response;
  if (options.with_response) response = sample.gold_response;
  out.seq = assemble_input(linearize_graph(sample.graph, order, vocab), sample.history,
                           sample.question, response, vocab, options.limits, sample.id);

  const TableEmbedder<float> embedder(vocab, model.params().token);
  const CosineEntityScorer scorer = default_scorer(embedder);
  out.weights = compute_weighted_graph(sample.graph, sample.question, scorer, embedder);
  out.selection = select_topk(out.weights, options.k_entity, options.k_relation);
  out.knowledge = options.use_kg_mask ? knowledge_column_mask(out.seq, out.selection, sample.graph)
                                      : open_knowledge_columns(out.seq);
  return out;
}

}  // namespace kgdial
