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

#include <algorithm>
#include <map>

#include "bilctc/decode/decode.hpp"
#include "bilctc/model/pae_clm.hpp"

namespace bilctc::decode {

LabelSequence CtcGreedy(const ctc::LogProbMatrix& probs) {
  std::vector<int> path(probs.frames());
  for (int t = 0; t < probs.frames(); ++t) path[t] = model::ArgMax(probs.values().row(t));
  return ctc::Collapse(path, probs.vocab_size());
}

namespace {

struct BeamEntry {
  double blank = kLogZero;
  double non_blank = kLogZero;
  double total() const { return LogAdd(blank, non_blank); }
};

std::vector<ScoredSequence> Ranked(const std::map<LabelSequence, BeamEntry>& beams) {
  std::vector<ScoredSequence> out;
  for (const auto& [prefix, e] : beams) out.push_back({prefix, e.total()});
  // Map order is lexicographic, so stable sorting breaks ties toward it.
  std::stable_sort(out.begin(), out.end(), [](const ScoredSequence& a, const ScoredSequence& b) {
    return a.log_prob > b.log_prob;
  });
  return out;
}

}  // namespace

std::vector<ScoredSequence> CtcPrefixBeam(const ctc::LogProbMatrix& probs, int beam) {
  if (beam < 1) Fail(ErrorKind::kConfiguration, "beam must be >= 1");
  std::map<LabelSequence, BeamEntry> current;
  current[{}].blank = 0.0;
  for (int t = 0; t < probs.frames(); ++t) {
    std::map<LabelSequence, BeamEntry> next;
    for (const auto& [prefix, e] : current) {
      auto& same = next[prefix];
      same.blank = LogAdd(same.blank, e.total() + probs(t, kBlank));
      for (int c = 1; c <= probs.vocab_size(); ++c) {
        const double p = probs(t, c);
        if (p == kLogZero) continue;
        LabelSequence extended = prefix;
        extended.push_back(c);
        if (!prefix.empty() && prefix.back() == c) {
          // A repeat without an intervening blank stays on the same prefix.
          auto& stay = next[prefix];
          stay.non_blank = LogAdd(stay.non_blank, e.non_blank + p);
          auto& grow = next[extended];
          grow.non_blank = LogAdd(grow.non_blank, e.blank + p);
        } else {
          auto& grow = next[extended];
          grow.non_blank = LogAdd(grow.non_blank, e.total() + p);
        }
      }
    }
    auto ranked = Ranked(next);
    current.clear();
    for (size_t i = 0; i < ranked.size() && i < size_t(beam); ++i) {
      if (ranked[i].log_prob == kLogZero) break;
      current[ranked[i].tokens] = next[ranked[i].tokens];
    }
  }
  auto out = Ranked(current);
  if (out.size() > size_t(beam)) out.resize(beam);
  return out;
}

}  // namespace bilctc::decode
