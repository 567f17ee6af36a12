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

#include "kgdial/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "kgdial/vocab.hpp"

namespace kgdial {

void DecodingParams::validate() const {
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be > 0");
  if (top_k < 1) throw std::invalid_argument("top_k must be >= 1");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw std::invalid_argument("top_p must lie in (0, 1]");
  if (max_response_length < 1) throw std::invalid_argument("max_response_length must be >= 1");
}

int choose_token(const std::vector<double>& logits, const DecodingParams& params,
                 std::mt19937_64& rng) {
  if (logits.empty()) throw std::invalid_argument("empty logits");
  const std::size_t k = std::min(logits.size(), static_cast<std::size_t>(params.top_k));
  std::vector<int> order(logits.size());
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<long>(k), order.end(),
                    [&logits](int a, int b) {
                      const double la = logits[static_cast<std::size_t>(a)];
                      const double lb = logits[static_cast<std::size_t>(b)];
                      return la != lb ? la > lb : a < b;
                    });
  if (k == 1) return order[0];

  std::vector<double> probs(k);
  const double top = logits[static_cast<std::size_t>(order[0])] / params.temperature;
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    probs[i] = std::exp(logits[static_cast<std::size_t>(order[i])] / params.temperature - top);
    sum += probs[i];
  }
  std::size_t keep = 0;
  double mass = 0.0;
  while (keep < k) {
    mass += probs[keep] / sum;
    ++keep;
    if (mass >= params.top_p) break;
  }
  double kept = 0.0;
  for (std::size_t i = 0; i < keep; ++i) kept += probs[i];
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * kept;
  double acc = 0.0;
  for (std::size_t i = 0; i < keep; ++i) {
    acc += probs[i];
    if (u < acc) return order[i];
  }
  return order[keep - 1];
}

template <typename T>
std::vector<int> sample_response(const Transformer<T>& model, InputSequence context,
                                 const KnowledgeColumns& knowledge, const DecodingParams& params) {
  params.validate();
  if (context.has_response()) {
    throw std::invalid_argument("sample_response: context already holds a response");
  }
  if (context.size() + params.max_response_length > model.config().max_positions) {
    throw std::invalid_argument("sample '" + context.sample_id + "': context of " +
                                std::to_string(context.size()) + " tokens leaves no room for " +
                                std::to_string(params.max_response_length) + " response tokens");
  }
  std::mt19937_64 rng(params.seed);
  std::vector<int> out;
  std::vector<double> logits(static_cast<std::size_t>(model.config().vocab_size));
  for (int step = 0; step < params.max_response_length; ++step) {
    const AttentionMask mask = compose_mask(context, knowledge);
    const auto row = model.last_logits(context, mask);
    for (Eigen::Index i = 0; i < row.size(); ++i) logits[static_cast<std::size_t>(i)] = static_cast<double>(row(i));
    const int tok = choose_token(logits, params, rng);
    if (tok == kEos) break;
    out.push_back(tok);
    context.append_response_token(tok);
  }
  return out;
}

template std::vector<int> sample_response<float>(const Transformer<float>&, InputSequence,
                                                 const KnowledgeColumns&, const DecodingParams&);
template std::vector<int> sample_response<double>(const Transformer<double>&, InputSequence,
                                                  const KnowledgeColumns&, const DecodingParams&);

}  // namespace kgdial
