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

#ifndef BILCTC_CTC_LATTICE_HPP_
#define BILCTC_CTC_LATTICE_HPP_

#include <span>
#include <vector>

#include "bilctc/common.hpp"

namespace bilctc::ctc {

// Per-frame log-distributions over V labels plus the blank at column 0.
// Every row log-sum-exps to zero.
class LogProbMatrix {
 public:
  LogProbMatrix() = default;

  // Validates shape (T >= 1, C >= 2) and row normalization within `tol`.
  static LogProbMatrix FromLogProbs(MatrixD values, double tol = 1e-6);
  // Row-wise log-softmax of unnormalized scores.
  static LogProbMatrix FromLogits(const MatrixD& logits);

  int frames() const { return static_cast<int>(values_.rows()); }
  int classes() const { return static_cast<int>(values_.cols()); }
  int vocab_size() const { return classes() - 1; }
  double operator()(int t, int c) const { return values_(t, c); }
  const MatrixD& values() const { return values_; }

 private:
  explicit LogProbMatrix(MatrixD values) : values_(std::move(values)) {}
  MatrixD values_;
};

// Frame-level path with entries in [0, V].
using AlignmentPath = std::vector<int>;

// Forward/backward tables over the blank-augmented lattice of 2U+1 states.
// alpha includes the emission at frame t, beta excludes it, so
// logsumexp_s(alpha(t, s) + beta(t, s)) == log_z for every t.
struct LatticeTables {
  MatrixD alpha;  // T x (2U+1)
  MatrixD beta;   // T x (2U+1)
  MatrixD gamma;  // T x C, log posterior occupancy of each class
  double log_z = kLogZero;
};

struct Alignment {
  AlignmentPath path;
  double log_prob = kLogZero;
};

// Merges adjacent repeats, then drops blanks.
LabelSequence Collapse(std::span<const int> path, int vocab_size);

// Minimum number of frames a target needs: one per label plus one blank
// between each pair of equal neighbours.
int MinFramesFor(std::span<const int> target);

// Throws kInvalidInput for out-of-range labels and kInfeasibleTarget when
// the target cannot be emitted in probs.frames() frames.
void CheckTarget(const LogProbMatrix& probs, std::span<const int> target);

double LogLikelihood(const LogProbMatrix& probs, std::span<const int> target);

LatticeTables ForwardBackward(const LogProbMatrix& probs,
                              std::span<const int> target);

// d(-log P(target)) / d(logits) = softmax(logits) - exp(gamma).
MatrixD GradientWrtLogits(const MatrixD& logits, std::span<const int> target);

// Viterbi path through the lattice. Ties prefer staying in the current
// lattice state, then advancing one state, then skipping a blank; the final
// state prefers the trailing blank. Equivalently the returned path is, among
// all maximal paths, the one whose lattice-state sequence read backwards from
// the last frame is lexicographically greatest.
Alignment ForcedAlign(const LogProbMatrix& probs, std::span<const int> target);

}  // namespace bilctc::ctc

#endif  // BILCTC_CTC_LATTICE_HPP_
