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

#ifndef BILCTC_NN_LOSSES_HPP_
#define BILCTC_NN_LOSSES_HPP_

#include <span>
#include <string>
#include <vector>

#include "bilctc/common.hpp"
#include "bilctc/ctc/lattice.hpp"
#include "bilctc/nn/tape.hpp"

namespace bilctc::nn {

enum class Reduction { kMean, kSum };

template <typename Scalar>
struct LossAndGrad {
  Scalar loss = 0;
  Matrix<Scalar> grad;
};

// Per position: (1 - eps) * -log p(target) + eps * -mean_c log p(c), reduced
// over the positions whose target is not `ignore_index`.
template <typename Scalar>
LossAndGrad<Scalar> LabelSmoothedCrossEntropy(const Matrix<Scalar>& logits,
                                              std::span<const int> targets,
                                              double epsilon,
                                              Reduction reduction = Reduction::kMean,
                                              int ignore_index = -1) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    Fail(ErrorKind::kConfiguration, "label smoothing must lie in [0, 1)");
  }
  if (static_cast<Eigen::Index>(targets.size()) != logits.rows()) {
    Fail(ErrorKind::kConfiguration, "label_smoothed_ce: one target per row required");
  }
  const Eigen::Index classes = logits.cols();
  const Matrix<Scalar> logp = bilctc::LogSoftmaxRows<Scalar>(logits);
  LossAndGrad<Scalar> out;
  out.grad = Matrix<Scalar>::Zero(logits.rows(), classes);
  double total = 0.0;
  int counted = 0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const int y = targets[r];
    if (y == ignore_index) continue;
    if (y < 0 || y >= classes) {
      Fail(ErrorKind::kInvalidInput, "target " + std::to_string(y) + " outside [0, " +
                                         std::to_string(classes) + ")");
    }
    total += (1.0 - epsilon) * -double(logp(r, y)) -
             epsilon * double(logp.row(r).mean());
    out.grad.row(r) = logp.row(r).array().exp();
    out.grad.row(r).array() -= Scalar(epsilon / double(classes));
    out.grad(r, y) -= Scalar(1.0 - epsilon);
    ++counted;
  }
  if (reduction == Reduction::kMean && counted > 0) {
    total /= counted;
    out.grad /= Scalar(counted);
  }
  out.loss = static_cast<Scalar>(total);
  return out;
}

// Tape node for LabelSmoothedCrossEntropy.
template <typename Scalar>
Var SmoothedCrossEntropy(Tape<Scalar>& t, Var logits, std::span<const int> targets,
                              double epsilon, Reduction reduction = Reduction::kMean) {
  auto res = LabelSmoothedCrossEntropy<Scalar>(t.value(logits), targets, epsilon, reduction);
  Matrix<Scalar> value = Matrix<Scalar>::Constant(1, 1, res.loss);
  return t.Push(std::move(value), {logits},
                [logits, grad = std::move(res.grad)](Tape<Scalar>& tp, Var self) {
                  tp.AddGrad(logits, grad * tp.grad(self)(0, 0));
                });
}

// -log P_ctc(target | logits) with the lattice evaluated in double precision.
// `dist`, when given, receives the normalized per-frame distribution.
template <typename Scalar>
Var CtcLoss(Tape<Scalar>& t, Var logits, std::span<const int> target,
            ctc::LogProbMatrix* dist = nullptr) {
  const auto probs = ctc::LogProbMatrix::FromLogits(t.value(logits).template cast<double>());
  const auto tables = ctc::ForwardBackward(probs, target);
  if (dist) *dist = probs;
  Matrix<Scalar> value = Matrix<Scalar>::Constant(1, 1, static_cast<Scalar>(-tables.log_z));
  Matrix<Scalar> grad =
      (probs.values().array().exp() - tables.gamma.array().exp()).matrix().template cast<Scalar>();
  return t.Push(std::move(value), {logits},
                [logits, grad = std::move(grad)](Tape<Scalar>& tp, Var self) {
                  tp.AddGrad(logits, grad * tp.grad(self)(0, 0));
                });
}

}  // namespace bilctc::nn

#endif  // BILCTC_NN_LOSSES_HPP_
