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

#ifndef BILCTC_CTC_PREFIX_SCORE_HPP_
#define BILCTC_CTC_PREFIX_SCORE_HPP_

#include <utility>
#include <vector>

#include "bilctc/ctc/lattice.hpp"

namespace bilctc::ctc {

// Forward variables of one label prefix g over all frames:
// non_blank[t] = log P(g emitted by frame t, frame t emits last(g)),
// blank[t]     = log P(g emitted by frame t, frame t emits blank).
struct PrefixState {
  std::vector<double> non_blank;
  std::vector<double> blank;
  int last_label = -1;
  int length = 0;
  // log P(some alignment starts with this prefix); 0 for the empty prefix.
  double log_prefix_prob = 0.0;
  bool ended = false;
};

PrefixState PrefixScoreInit(const LogProbMatrix& probs);

// Extends `state` by `next_label` in [1, V], or by kEos to close the
// hypothesis. The returned score is the log prefix probability of the
// extended prefix, or the full-sequence log-likelihood after kEos.
std::pair<PrefixState, double> PrefixScoreExtend(const LogProbMatrix& probs,
                                                 const PrefixState& state,
                                                 int next_label);

}  // namespace bilctc::ctc

#endif  // BILCTC_CTC_PREFIX_SCORE_HPP_
