/* Copyright 2026 The BiL-CTC Lab Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef BILCTC_NN_OPTIM_HPP_
#define BILCTC_NN_OPTIM_HPP_

#include <algorithm>
#include <cmath>

#include "bilctc/nn/parameters.hpp"

namespace bilctc::nn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
};

// One bias-corrected Adam update from the gradients held in the store.
// Increments store.step; throws kNumeric before touching any parameter if a
// gradient is not finite.
template <typename Scalar>
void AdamStep(ParameterStore<Scalar>& store, double lr, const AdamConfig& cfg = {}) {
  for (const auto& p : store.params()) {
    if (!p.grad.allFinite()) {
      Fail(ErrorKind::kNumeric, "non-finite gradient in " + p.name + " at step " +
                                    std::to_string(store.step + 1));
    }
  }
  ++store.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, double(store.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, double(store.step));
  const Scalar b1 = Scalar(cfg.beta1), b2 = Scalar(cfg.beta2);
  for (auto& p : store.params()) {
    p.moment1 = b1 * p.moment1 + (Scalar(1) - b1) * p.grad;
    p.moment2 = b2 * p.moment2 + (Scalar(1) - b2) * p.grad.cwiseAbs2();
    p.value.array() -= Scalar(lr) * (p.moment1.array() / Scalar(c1)) /
                       ((p.moment2.array() / Scalar(c2)).sqrt() + Scalar(cfg.eps));
  }
}

// Linear warmup to `peak` at step == warmup, then inverse square root decay.
inline double InvSqrtLr(long step, long warmup, double peak) {
  if (step < 1) Fail(ErrorKind::kUsage, "learning-rate step counts from 1");
  if (warmup < 1) Fail(ErrorKind::kConfiguration, "warmup must be >= 1");
  const double s = double(step), w = double(warmup);
  return peak * std::min(1.0 / std::sqrt(s), s * std::pow(w, -1.5)) * std::sqrt(w);
}

}  // namespace bilctc::nn

#endif  // BILCTC_NN_OPTIM_HPP_
