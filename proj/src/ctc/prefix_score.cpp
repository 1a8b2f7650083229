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

#include "bilctc/ctc/prefix_score.hpp"

#include <string>

namespace bilctc::ctc {

PrefixState PrefixScoreInit(const LogProbMatrix& probs) {
  const int frames = probs.frames();
  PrefixState state;
  state.non_blank.assign(frames, kLogZero);
  state.blank.assign(frames, kLogZero);
  double acc = 0.0;
  for (int t = 0; t < frames; ++t) {
    acc += probs(t, kBlank);
    state.blank[t] = acc;
  }
  return state;
}

std::pair<PrefixState, double> PrefixScoreExtend(const LogProbMatrix& probs,
                                                 const PrefixState& state,
                                                 int next_label) {
  if (state.ended) {
    Fail(ErrorKind::kUsage, "prefix already closed by end-of-sequence");
  }
  const int frames = probs.frames();
  if (static_cast<int>(state.blank.size()) != frames) {
    Fail(ErrorKind::kUsage, "prefix state built for a different matrix");
  }
  if (next_label == kEos) {
    PrefixState closed = state;
    closed.ended = true;
    const double total =
        LogAdd(state.non_blank[frames - 1], state.blank[frames - 1]);
    closed.log_prefix_prob = total;
    return {std::move(closed), total};
  }
  if (next_label < 1 || next_label > probs.vocab_size()) {
    Fail(ErrorKind::kInvalidInput,
         "extension label " + std::to_string(next_label) + " outside [1, " +
             std::to_string(probs.vocab_size()) + "]");
  }

  PrefixState next;
  next.non_blank.assign(frames, kLogZero);
  next.blank.assign(frames, kLogZero);
  next.last_label = next_label;
  next.length = state.length + 1;

  const bool repeat = state.length > 0 && state.last_label == next_label;
  next.non_blank[0] = state.length == 0 ? probs(0, next_label) : kLogZero;
  double psi = next.non_blank[0];
  for (int t = 1; t < frames; ++t) {
    // Mass of g ending at t-1 that may be followed by a fresh next_label.
    const double phi =
        repeat ? state.blank[t - 1]
               : LogAdd(state.blank[t - 1], state.non_blank[t - 1]);
    const double emit = probs(t, next_label);
    const double stay_or_enter = LogAdd(next.non_blank[t - 1], phi);
    next.non_blank[t] = stay_or_enter == kLogZero ? kLogZero : stay_or_enter + emit;
    const double to_blank = LogAdd(next.blank[t - 1], next.non_blank[t - 1]);
    next.blank[t] = to_blank == kLogZero ? kLogZero : to_blank + probs(t, kBlank);
    if (phi != kLogZero) psi = LogAdd(psi, phi + emit);
  }
  next.log_prefix_prob = psi;
  return {std::move(next), psi};
}

}  // namespace bilctc::ctc
