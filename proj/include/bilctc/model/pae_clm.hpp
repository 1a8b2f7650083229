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

#ifndef BILCTC_MODEL_PAE_CLM_HPP_
#define BILCTC_MODEL_PAE_CLM_HPP_

#include <random>
#include <vector>

#include "bilctc/ctc/lattice.hpp"
#include "bilctc/nn/ops.hpp"

namespace bilctc::model {

// Prediction-aware encoding: states + probs * projection, where probs is the
// T x C tap distribution in probability space and projection is the C x H
// output matrix of the head that produced it.
template <typename Scalar>
nn::Var PaeInject(nn::Tape<Scalar>& t, nn::Var states, nn::Var probs, nn::Var projection) {
  const auto& h = t.value(states);
  const auto& p = t.value(probs);
  const auto& w = t.value(projection);
  if (p.rows() != h.rows() || p.cols() != w.rows() || w.cols() != h.cols()) {
    Fail(ErrorKind::kConfiguration,
         "PAE shape mismatch: states " + std::to_string(h.rows()) + "x" +
             std::to_string(h.cols()) + ", distribution " + std::to_string(p.rows()) + "x" +
             std::to_string(p.cols()) + ", projection " + std::to_string(w.rows()) + "x" +
             std::to_string(w.cols()));
  }
  return nn::Add(t, states, nn::MatMul(t, probs, projection));
}

// Lowest index wins ties.
template <typename Derived>
int ArgMax(const Eigen::MatrixBase<Derived>& row) {
  int best = 0;
  for (int c = 1; c < row.size(); ++c)
    if (row(c) > row(best)) best = c;
  return best;
}

template <typename Scalar>
struct ClmMixResult {
  std::vector<bool> replaced;
  Matrix<Scalar> one_hot;  // replacement rows, one-hot on the aligned label
  Matrix<Scalar> mixed;
  int count = 0;
};

// Curriculum mixing: each frame whose greedy prediction differs from the
// forced alignment is, with probability `ratio`, replaced by a one-hot row of
// the aligned label. Frames that are already correct are left alone. One
// Bernoulli draw is consumed per incorrect frame, in frame order.
template <typename Scalar>
ClmMixResult<Scalar> ClmMix(const Matrix<Scalar>& probs, const ctc::AlignmentPath& aligned,
                            double ratio, std::mt19937_64& rng) {
  if (static_cast<Eigen::Index>(aligned.size()) != probs.rows()) {
    Fail(ErrorKind::kConfiguration, "CLM alignment length differs from the distribution");
  }
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    Fail(ErrorKind::kConfiguration, "CLM ratio must lie in [0, 1]");
  }
  ClmMixResult<Scalar> out;
  out.replaced.assign(aligned.size(), false);
  out.one_hot = Matrix<Scalar>::Zero(probs.rows(), probs.cols());
  out.mixed = probs;
  std::bernoulli_distribution coin(ratio);
  for (Eigen::Index t = 0; t < probs.rows(); ++t) {
    const int label = aligned[t];
    out.one_hot(t, label) = Scalar(1);
    if (ArgMax(probs.row(t)) == label) continue;
    if (!coin(rng)) continue;
    out.replaced[t] = true;
    out.mixed.row(t) = out.one_hot.row(t);
    ++out.count;
  }
  return out;
}

}  // namespace bilctc::model

#endif  // BILCTC_MODEL_PAE_CLM_HPP_
