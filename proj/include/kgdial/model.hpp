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
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kgdial/mask.hpp"
#include "kgdial/sequence.hpp"

namespace kgdial {

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Switches that remove parts of the system for ablation runs.
struct Ablation {
  bool no_entity_embedding = false;
  bool no_triple_embedding = false;
  bool no_type_embedding = false;
  bool no_kg_mask = false;

  bool operator==(const Ablation&) const = default;
};

// Flag names as used on the command line and in checkpoint headers.
std::vector<std::string> ablation_names(const Ablation& a);
// Accepts no-entity-emb, no-triple-emb, no-type-emb, no-kg-mask and
// seq2seq (all three structural embeddings off).
void apply_ablation_name(Ablation& a, const std::string& name);

struct ModelConfig {
  int d_model = 128;
  int n_heads = 4;
  int n_layers = 2;
  int d_ff = 512;
  int vocab_size = 0;
  int max_positions = 768;
  int max_entity_ids = 128;
  int max_triple_ids = 256;
  int n_types = kNumTypes;
  double dropout = 0.1;
  Ablation ablation;

  int head_dim() const { return d_model / n_heads; }
  void validate() const;  // throws std::invalid_argument

  bool operator==(const ModelConfig&) const = default;
};

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
struct BlockParams {
  Matrix<T> ln1_gain, ln1_bias;
  Matrix<T> w_q, b_q, w_k, b_k, w_v, b_v;  // d x d; head i uses columns [i*d_k, (i+1)*d_k)
  Matrix<T> w_o, b_o;
  Matrix<T> ln2_gain, ln2_bias;
  Matrix<T> w_fc, b_fc;      // d x d_ff
  Matrix<T> w_proj, b_proj;  // d_ff x d
};

// Every trainable tensor. Biases and gains are 1 x d matrices.
template <typename T>
struct Parameters {
  Matrix<T> token, position, entity, triple, type;
  Matrix<T> emb_ln_gain, emb_ln_bias;
  std::vector<BlockParams<T>> blocks;
  Matrix<T> final_ln_gain, final_ln_bias;

  // All tensors zero-filled with the shapes implied by `cfg`.
  static Parameters zeros(const ModelConfig& cfg);

  // Stable (name, tensor) list; this order is the checkpoint manifest order.
  std::vector<std::pair<std::string, Matrix<T>*>> named();
  std::vector<std::pair<std::string, const Matrix<T>*>> named() const;

  std::size_t count() const;
  void set_zero();
  bool all_finite() const;
};

struct LossResult {
  double loss = 0.0;
  int count = 0;  // number of predicted tokens
};

// Mean next-token NLL over the response: rows response_start-1 .. n-2 of
// `logits` predict tokens response_start .. n-1. Fills `dlogits` (same shape)
// with d(loss)/d(logits) when non-null.
template <typename T>
LossResult response_nll(const Matrix<T>& logits, const InputSequence& seq,
                        Matrix<T>* dlogits = nullptr);

// softmax(Q K^T / sqrt(d_k) + M) V for one head.
template <typename T>
Matrix<T> masked_attention(const Matrix<T>& q, const Matrix<T>& k, const Matrix<T>& v,
                           const AttentionMask& mask);

// Decoder-only transformer over the five summed input embeddings, with
// pre-norm blocks and an output head tied to the token table.
template <typename T>
class Transformer {
 public:
  explicit Transformer(ModelConfig cfg);

  // N(0, 0.02) weights, residual projections scaled by 1/sqrt(2 n_layers),
  // unit layer-norm gains, zero biases.
  void init_random(std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  Parameters<T>& params() { return params_; }
  const Parameters<T>& params() const { return params_; }

  // LayerNorm of the summed embeddings (no dropout).
  Matrix<T> embed(const InputSequence& seq) const;

  // n x vocab logits, evaluation mode.
  Matrix<T> forward(const InputSequence& seq, const AttentionMask& mask) const;

  // Logits of the final position only.
  Eigen::Matrix<T, 1, Eigen::Dynamic> last_logits(const InputSequence& seq,
                                                  const AttentionMask& mask) const;

  // Response NLL in evaluation mode.
  double loss(const InputSequence& seq, const AttentionMask& mask) const;

  // Adds scale * d(loss)/d(params) into `grads` and returns the unscaled
  // loss. Dropout is active iff `dropout_rng` is non-null.
  double accumulate_gradients(const InputSequence& seq, const AttentionMask& mask,
                              Parameters<T>& grads, T scale,
                              std::mt19937_64* dropout_rng = nullptr) const;

  // Fresh gradients of the evaluation-mode loss.
  std::pair<double, Parameters<T>> backward(const InputSequence& seq,
                                            const AttentionMask& mask) const;

 private:
  struct Cache;

  void check_inputs(const InputSequence& seq, const AttentionMask& mask) const;
  // Final hidden states (after the last layer norm) for rows first_row..n-1.
  // Earlier rows still serve as keys and values; the last block skips their
  // queries and feed-forward.
  Matrix<T> run(const InputSequence& seq, const AttentionMask& mask, Cache* cache,
                std::mt19937_64* dropout_rng, int first_row = 0) const;

  ModelConfig cfg_;
  Parameters<T> params_;
};

extern template class Transformer<float>;
extern template class Transformer<double>;

// Copies parameters across precisions.
template <typename To, typename From>
Parameters<To> cast_parameters(const Parameters<From>& p);

}  // namespace kgdial
