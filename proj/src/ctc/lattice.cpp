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

#include "bilctc/ctc/lattice.hpp"

#include <algorithm>
#include <sstream>

namespace bilctc::ctc {
namespace {

// Blank-interleaved label sequence: blank, l1, blank, l2, ..., blank.
std::vector<int> Extend(std::span<const int> target) {
  std::vector<int> ext(2 * target.size() + 1, kBlank);
  for (size_t i = 0; i < target.size(); ++i) ext[2 * i + 1] = target[i];
  return ext;
}

// Whether state s may be entered directly from s-2 (skipping a blank).
bool CanSkip(const std::vector<int>& ext, int s) {
  return s >= 2 && ext[s] != kBlank && ext[s] != ext[s - 2];
}

MatrixD ForwardTable(const LogProbMatrix& probs, const std::vector<int>& ext) {
  const int frames = probs.frames();
  const int states = static_cast<int>(ext.size());
  MatrixD alpha = MatrixD::Constant(frames, states, kLogZero);
  alpha(0, 0) = probs(0, ext[0]);
  if (states > 1) alpha(0, 1) = probs(0, ext[1]);
  for (int t = 1; t < frames; ++t) {
    for (int s = 0; s < states; ++s) {
      double acc = alpha(t - 1, s);
      if (s >= 1) acc = LogAdd(acc, alpha(t - 1, s - 1));
      if (CanSkip(ext, s)) acc = LogAdd(acc, alpha(t - 1, s - 2));
      if (acc != kLogZero) alpha(t, s) = acc + probs(t, ext[s]);
    }
  }
  return alpha;
}

MatrixD BackwardTable(const LogProbMatrix& probs, const std::vector<int>& ext) {
  const int frames = probs.frames();
  const int states = static_cast<int>(ext.size());
  MatrixD beta = MatrixD::Constant(frames, states, kLogZero);
  beta(frames - 1, states - 1) = 0.0;
  if (states > 1) beta(frames - 1, states - 2) = 0.0;
  for (int t = frames - 2; t >= 0; --t) {
    for (int s = 0; s < states; ++s) {
      double acc = beta(t + 1, s) + probs(t + 1, ext[s]);
      if (s + 1 < states) {
        acc = LogAdd(acc, beta(t + 1, s + 1) + probs(t + 1, ext[s + 1]));
      }
      if (s + 2 < states && CanSkip(ext, s + 2)) {
        acc = LogAdd(acc, beta(t + 1, s + 2) + probs(t + 1, ext[s + 2]));
      }
      beta(t, s) = acc;
    }
  }
  return beta;
}

double FinalLogZ(const MatrixD& alpha) {
  const auto last = alpha.rows() - 1;
  const auto states = alpha.cols();
  double z = alpha(last, states - 1);
  if (states > 1) z = LogAdd(z, alpha(last, states - 2));
  return z;
}

}  // namespace

LogProbMatrix LogProbMatrix::FromLogProbs(MatrixD values, double tol) {
  if (values.rows() < 1 || values.cols() < 2) {
    std::ostringstream os;
    os << "log-prob matrix must have T >= 1 and C >= 2, got " << values.rows()
       << "x" << values.cols();
    Fail(ErrorKind::kInvalidInput, os.str());
  }
  for (Eigen::Index t = 0; t < values.rows(); ++t) {
    const double norm = LogSumExp(values.row(t));
    if (!(std::abs(norm) <= tol)) {
      std::ostringstream os;
      os << "row " << t << " of log-prob matrix sums to exp(" << norm << ")";
      Fail(ErrorKind::kInvalidInput, os.str());
    }
  }
  return LogProbMatrix(std::move(values));
}

LogProbMatrix LogProbMatrix::FromLogits(const MatrixD& logits) {
  return FromLogProbs(LogSoftmaxRows(logits));
}

LabelSequence Collapse(std::span<const int> path, int vocab_size) {
  LabelSequence out;
  int prev = -1;
  for (int c : path) {
    if (c < 0 || c > vocab_size) {
      Fail(ErrorKind::kInvalidInput,
           "path entry " + std::to_string(c) + " outside [0, " +
               std::to_string(vocab_size) + "]");
    }
    if (c != prev && c != kBlank) out.push_back(c);
    prev = c;
  }
  return out;
}

int MinFramesFor(std::span<const int> target) {
  int frames = static_cast<int>(target.size());
  for (size_t i = 1; i < target.size(); ++i) {
    if (target[i] == target[i - 1]) ++frames;
  }
  return frames;
}

void CheckTarget(const LogProbMatrix& probs, std::span<const int> target) {
  for (int c : target) {
    if (c < 1 || c > probs.vocab_size()) {
      Fail(ErrorKind::kInvalidInput,
           "target label " + std::to_string(c) + " outside [1, " +
               std::to_string(probs.vocab_size()) + "]");
    }
  }
  const int need = MinFramesFor(target);
  if (need > probs.frames()) {
    Fail(ErrorKind::kInfeasibleTarget,
         "target needs " + std::to_string(need) + " frames, only " +
             std::to_string(probs.frames()) + " available");
  }
}

double LogLikelihood(const LogProbMatrix& probs, std::span<const int> target) {
  CheckTarget(probs, target);
  return FinalLogZ(ForwardTable(probs, Extend(target)));
}

LatticeTables ForwardBackward(const LogProbMatrix& probs,
                              std::span<const int> target) {
  CheckTarget(probs, target);
  const auto ext = Extend(target);
  LatticeTables tables;
  tables.alpha = ForwardTable(probs, ext);
  tables.beta = BackwardTable(probs, ext);
  tables.log_z = FinalLogZ(tables.alpha);

  const int frames = probs.frames();
  tables.gamma = MatrixD::Constant(frames, probs.classes(), kLogZero);
  for (int t = 0; t < frames; ++t) {
    for (size_t s = 0; s < ext.size(); ++s) {
      const double occ = tables.alpha(t, s) + tables.beta(t, s);
      tables.gamma(t, ext[s]) = LogAdd(tables.gamma(t, ext[s]), occ);
    }
  }
  tables.gamma.array() -= tables.log_z;
  return tables;
}

MatrixD GradientWrtLogits(const MatrixD& logits, std::span<const int> target) {
  const auto probs = LogProbMatrix::FromLogits(logits);
  const auto tables = ForwardBackward(probs, target);
  return probs.values().array().exp() - tables.gamma.array().exp();
}

Alignment ForcedAlign(const LogProbMatrix& probs, std::span<const int> target) {
  CheckTarget(probs, target);
  const auto ext = Extend(target);
  const int frames = probs.frames();
  const int states = static_cast<int>(ext.size());

  MatrixD delta = MatrixD::Constant(frames, states, kLogZero);
  Eigen::MatrixXi back = Eigen::MatrixXi::Constant(frames, states, -1);
  delta(0, 0) = probs(0, ext[0]);
  if (states > 1) delta(0, 1) = probs(0, ext[1]);
  for (int t = 1; t < frames; ++t) {
    for (int s = 0; s < states; ++s) {
      // Candidates in preference order; later ones win only if strictly better.
      int best_from = s;
      double best = delta(t - 1, s);
      if (s >= 1 && delta(t - 1, s - 1) > best) {
        best = delta(t - 1, s - 1);
        best_from = s - 1;
      }
      if (CanSkip(ext, s) && delta(t - 1, s - 2) > best) {
        best = delta(t - 1, s - 2);
        best_from = s - 2;
      }
      if (best == kLogZero) continue;
      delta(t, s) = best + probs(t, ext[s]);
      back(t, s) = best_from;
    }
  }

  int state = states - 1;
  if (states > 1 && delta(frames - 1, states - 2) > delta(frames - 1, state)) {
    state = states - 2;
  }
  Alignment result;
  result.log_prob = delta(frames - 1, state);
  result.path.assign(frames, kBlank);
  for (int t = frames - 1; t >= 0; --t) {
    result.path[t] = ext[state];
    if (t > 0) state = back(t, state);
  }
  return result;
}

}  // namespace bilctc::ctc
