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

#include <Eigen/Dense>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "kgdial/kg.hpp"
#include "kgdial/vocab.hpp"

namespace kgdial {

// Maps text to a single vector in some embedding space.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual int dim() const = 0;
  // Mean of the token rows of `text`; the zero vector for empty text.
  virtual Eigen::VectorXd mean_embedding(std::string_view text) const = 0;
};

// Non-owning view of a token embedding table (one row per vocabulary id).
template <typename Scalar>
class TableEmbedder final : public Embedder {
 public:
  using Table = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  TableEmbedder(const Vocabulary& vocab, const Table& table) : vocab_(vocab), table_(table) {}

  int dim() const override { return static_cast<int>(table_.cols()); }

  Eigen::VectorXd mean_embedding(std::string_view text) const override {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(table_.cols());
    const auto ids = vocab_.encode(text);
    if (ids.empty()) return acc;
    for (int id : ids) acc += table_.row(id).transpose().template cast<double>();
    return acc / static_cast<double>(ids.size());
  }

 private:
  const Vocabulary& vocab_;
  const Table& table_;
};

// Cosine similarity with a zero-norm guard: 0 when either side is zero.
double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Relevance of an entity to a question. Implementations must be deterministic
// and return finite values.
class EntityScorer {
 public:
  virtual ~EntityScorer() = default;
  virtual double score(std::string_view question, std::string_view entity_surface) const = 0;
};

class CosineEntityScorer final : public EntityScorer {
 public:
  explicit CosineEntityScorer(const Embedder& embedder) : embedder_(embedder) {}
  double score(std::string_view question, std::string_view entity_surface) const override;

 private:
  const Embedder& embedder_;
};

// The default scorer: cosine between mean question and mean entity embeddings.
CosineEntityScorer default_scorer(const Embedder& embedder);

struct BipartiteNode {
  enum class Kind { kEntity, kRelation };
  Kind kind = Kind::kEntity;
  int id = 0;  // entity or relation id in the source graph
  std::string surface;
};

// Undirected graph whose nodes are the entities followed by the relation
// labels of a knowledge graph; each triple links subject-relation and
// relation-object.
struct BipartiteGraph {
  std::vector<BipartiteNode> nodes;
  int num_entities = 0;
  int num_relations = 0;
  Eigen::MatrixXd adjacency;      // symmetric 0/1, zero diagonal
  Eigen::VectorXd degree;         // row sums of (A + I)
  Eigen::VectorXd relation_mask;  // 1 at relation nodes, 0 at entity nodes

  int size() const { return static_cast<int>(nodes.size()); }
  int relation_node(int relation_id) const { return num_entities + relation_id; }

  // D^-1 (A + I); every row sums to one.
  Eigen::MatrixXd propagation_matrix() const;
};

BipartiteGraph build_bipartite(const KnowledgeGraph& graph);

// X[u] = cosine(question, surface of node u).
Eigen::VectorXd feature_vector(const BipartiteGraph& bg, std::string_view question,
                               const Embedder& embedder);

// One propagation step, D^-1 (A + I) X.
Eigen::VectorXd propagate(const BipartiteGraph& bg, const Eigen::VectorXd& features);

// Propagated features masked to relation nodes; result is indexed by
// relation id.
std::vector<double> relation_weights(const BipartiteGraph& bg, const Eigen::VectorXd& features);

std::vector<double> softmax(const std::vector<double>& scores);

struct WeightedGraph {
  std::vector<double> entity_scores;     // raw scorer output per entity id
  std::vector<double> entity_weights;    // softmax of entity_scores
  std::vector<double> relation_scores;   // raw relation weights per relation id
  std::vector<double> relation_weights;  // softmax of relation_scores
};

WeightedGraph compute_weighted_graph(const KnowledgeGraph& graph, std::string_view question,
                                     const EntityScorer& scorer, const Embedder& embedder);

inline constexpr int kSelectAll = std::numeric_limits<int>::max();

struct Selection {
  std::vector<int> entities;   // ranked, best first
  std::vector<int> relations;  // ranked, best first
  int k_entity = 0;
  int k_relation = 0;

  bool has_entity(int id) const;
  bool has_relation(int id) const;
};

// Ranks by weight descending, then by id (first appearance) ascending.
std::vector<int> rank_by_weight(const std::vector<double>& weights);

Selection select_topk(const WeightedGraph& wg, int k_entity, int k_relation);

}  // namespace kgdial
