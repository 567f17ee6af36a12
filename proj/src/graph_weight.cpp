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

#include "kgdial/graph_weight.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace kgdial {

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

double CosineEntityScorer::score(std::string_view question,
                                 std::string_view entity_surface) const {
  return cosine_similarity(embedder_.mean_embedding(question),
                           embedder_.mean_embedding(entity_surface));
}

CosineEntityScorer default_scorer(const Embedder& embedder) {
  return CosineEntityScorer(embedder);
}

Eigen::MatrixXd BipartiteGraph::propagation_matrix() const {
  const int n = size();
  Eigen::MatrixXd p = adjacency + Eigen::MatrixXd::Identity(n, n);
  for (int u = 0; u < n; ++u) p.row(u) /= degree(u);
  return p;
}

BipartiteGraph build_bipartite(const KnowledgeGraph& graph) {
  BipartiteGraph bg;
  bg.num_entities = static_cast<int>(graph.entities().size());
  bg.num_relations = static_cast<int>(graph.relations().size());
  for (const auto& e : graph.entities()) {
    bg.nodes.push_back({BipartiteNode::Kind::kEntity, e.id, e.surface});
  }
  for (const auto& r : graph.relations()) {
    bg.nodes.push_back({BipartiteNode::Kind::kRelation, r.id, r.surface});
  }
  const int n = bg.size();
  bg.adjacency = Eigen::MatrixXd::Zero(n, n);
  for (const auto& t : graph.triples()) {
    const int r = bg.relation_node(t.relation);
    bg.adjacency(t.subject, r) = bg.adjacency(r, t.subject) = 1.0;
    bg.adjacency(r, t.object) = bg.adjacency(t.object, r) = 1.0;
  }
  bg.degree = bg.adjacency.rowwise().sum() + Eigen::VectorXd::Ones(n);
  bg.relation_mask = Eigen::VectorXd::Zero(n);
  bg.relation_mask.tail(bg.num_relations).setOnes();
  return bg;
}

Eigen::VectorXd feature_vector(const BipartiteGraph& bg, std::string_view question,
                               const Embedder& embedder) {
  const Eigen::VectorXd q = embedder.mean_embedding(question);
  Eigen::VectorXd x(bg.size());
  for (int u = 0; u < bg.size(); ++u) {
    x(u) = cosine_similarity(q, embedder.mean_embedding(bg.nodes[static_cast<std::size_t>(u)].surface));
  }
  return x;
}

Eigen::VectorXd propagate(const BipartiteGraph& bg, const Eigen::VectorXd& features) {
  if (features.size() != bg.size()) {
    throw std::invalid_argument("feature vector length does not match the graph");
  }
  // (A + I) X scaled row-wise by 1 / degree.
  Eigen::VectorXd h = bg.adjacency * features + features;
  return h.cwiseQuotient(bg.degree);
}

std::vector<double> relation_weights(const BipartiteGraph& bg, const Eigen::VectorXd& features) {
  const Eigen::VectorXd masked = propagate(bg, features).cwiseProduct(bg.relation_mask);
  std::vector<double> out(static_cast<std::size_t>(bg.num_relations));
  for (int r = 0; r < bg.num_relations; ++r) {
    out[static_cast<std::size_t>(r)] = masked(bg.relation_node(r));
  }
  return out;
}

std::vector<double> softmax(const std::vector<double>& scores) {
  if (scores.empty()) return {};
  const double m = *std::max_element(scores.begin(), scores.end());
  std::vector<double> out(scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - m);
    sum += out[i];
  }
  for (auto& v : out) v /= sum;
  return out;
}

WeightedGraph compute_weighted_graph(const KnowledgeGraph& graph, std::string_view question,
                                     const EntityScorer& scorer, const Embedder& embedder) {
  WeightedGraph wg;
  for (const auto& e : graph.entities()) {
    const double s = scorer.score(question, e.surface);
    if (!std::isfinite(s)) throw std::runtime_error("entity scorer returned a non-finite value");
    wg.entity_scores.push_back(s);
  }
  wg.entity_weights = softmax(wg.entity_scores);

  const BipartiteGraph bg = build_bipartite(graph);
  wg.relation_scores = relation_weights(bg, feature_vector(bg, question, embedder));
  wg.relation_weights = softmax(wg.relation_scores);
  return wg;
}

bool Selection::has_entity(int id) const {
  return std::find(entities.begin(), entities.end(), id) != entities.end();
}

bool Selection::has_relation(int id) const {
  return std::find(relations.begin(), relations.end(), id) != relations.end();
}

std::vector<int> rank_by_weight(const std::vector<double>& weights) {
  std::vector<int> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&weights](int a, int b) {
    return weights[static_cast<std::size_t>(a)] > weights[static_cast<std::size_t>(b)];
  });
  return order;
}

Selection select_topk(const WeightedGraph& wg, int k_entity, int k_relation) {
  if (k_entity < 0 || k_relation < 0) throw std::invalid_argument("top-k must be >= 0");
  Selection sel;
  sel.k_entity = k_entity;
  sel.k_relation = k_relation;
  sel.entities = rank_by_weight(wg.entity_weights);
  sel.relations = rank_by_weight(wg.relation_weights);
  sel.entities.resize(std::min(sel.entities.size(), static_cast<std::size_t>(k_entity)));
  sel.relations.resize(std::min(sel.relations.size(), static_cast<std::size_t>(k_relation)));
  return sel;
}

}  // namespace kgdial
