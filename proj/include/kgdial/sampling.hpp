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

#include <cstdint>
#include <random>
#include <vector>

#include "kgdial/mask.hpp"
#include "kgdial/model.hpp"
#include "kgdial/sequence.hpp"

namespace kgdial {

struct DecodingParams {
  double temperature = 0.68;
  int top_k = 6;
  double top_p = 0.9;
  int max_response_length = 100;
  std::uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument
};

// One decoding step over raw logits: temperature, top-k, then the smallest
// prefix of the top-k whose renormalized mass reaches top_p, then a draw.
// Ties in the ranking go to the lower token id.
int choose_token(const std::vector<double>& logits, const DecodingParams& params,
                 std::mt19937_64& rng);

// Generates a response after `context` (which must not contain one). Each
// step re-runs the model over the growing sequence; generated tokens extend
// the mask with the same knowledge columns. The [EOS] token is not returned.
template <typename T>
std::vector<int> sample_response(const Transformer<T>& model, InputSequence context,
                                 const KnowledgeColumns& knowledge, const DecodingParams& params);

}  // namespace kgdial
