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

#include "kgdial/optimizer.hpp"

#include <cmath>

namespace kgdial {

template <typename T>
AdamW<T>::AdamW(const Parameters<T>& like, AdamWConfig cfg) : cfg_(cfg), m_(like), v_(like) {
  m_.set_zero();
  v_.set_zero();
}

template <typename T>
double AdamW<T>::current_rate() const {
  if (cfg_.warmup_steps > 0 && t_ < cfg_.warmup_steps) {
    return cfg_.learning_rate * static_cast<double>(t_ + 1) / static_cast<double>(cfg_.warmup_steps);
  }
  return cfg_.learning_rate;
}

template <typename T>
void AdamW<T>::step(Parameters<T>& params, const Parameters<T>& grads) {
  const double lr = current_rate();
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  const T b1 = static_cast<T>(cfg_.beta1);
  const T b2 = static_cast<T>(cfg_.beta2);
  const T step_size = static_cast<T>(lr / bc1);
  const T inv_sqrt_bc2 = static_cast<T>(1.0 / std::sqrt(bc2));
  const T eps = static_cast<T>(cfg_.epsilon);
  const T decay = static_cast<T>(lr * cfg_.weight_decay);

  auto p = params.named();
  auto g = grads.named();
  auto m = m_.named();
  auto v = v_.named();
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto& pa = *p[i].second;
    const auto& ga = *g[i].second;
    auto& ma = *m[i].second;
    auto& va = *v[i].second;
    ma = b1 * ma + (T(1) - b1) * ga;
    va = b2 * va + (T(1) - b2) * ga.cwiseProduct(ga);
    if (decay != T(0)) pa -= decay * pa;
    pa.array() -= step_size * ma.array() / (va.array().sqrt() * inv_sqrt_bc2 + eps);
  }
}

template class AdamW<float>;
template class AdamW<double>;

}  // namespace kgdial
