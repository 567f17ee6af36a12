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

#include "kgdial/model.hpp"

namespace kgdial {

struct AdamWConfig {
  double learning_rate = 6.25e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
  int warmup_steps = 0;  // linear warmup; 0 keeps the rate constant
};

// Adaptive moments with decoupled weight decay:
//   p -= lr_t * (m_hat / (sqrt(v_hat) + eps) + wd * p)
template <typename T>
class AdamW {
 public:
  AdamW(const Parameters<T>& like, AdamWConfig cfg);

  void step(Parameters<T>& params, const Parameters<T>& grads);

  long steps() const { return t_; }
  double current_rate() const;
  const AdamWConfig& config() const { return cfg_; }

 private:
  AdamWConfig cfg_;
  Parameters<T> m_;
  Parameters<T> v_;
  long t_ = 0;
};

extern template class AdamW<float>;
extern template class AdamW<double>;

}  // namespace kgdial
