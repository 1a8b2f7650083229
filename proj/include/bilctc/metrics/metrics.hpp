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

#ifndef BILCTC_METRICS_METRICS_HPP_
#define BILCTC_METRICS_METRICS_HPP_

#include <string>
#include <vector>

#include <json.hpp>

#include "bilctc/common.hpp"

namespace bilctc::metrics {

// Levenshtein distance with unit substitution, insertion and deletion costs.
int EditDistance(const LabelSequence& hyp, const LabelSequence& ref);

// EditDistance / |ref|; 0 for two empty sequences, and |hyp| when only the
// reference is empty.
double Wer(const LabelSequence& hyp, const LabelSequence& ref);

// Corpus WER: total edits over total reference length.
double CorpusWer(const std::vector<LabelSequence>& hyps, const std::vector<LabelSequence>& refs);

struct BleuStats {
  std::vector<long> matches;  // clipped n-gram matches, n = 1..max_n
  std::vector<long> totals;   // hypothesis n-grams
  long hyp_length = 0;
  long ref_length = 0;
};

BleuStats CollectBleuStats(const std::vector<LabelSequence>& hyps,
                           const std::vector<LabelSequence>& refs, int max_n = 4);

// Corpus BLEU in [0, 100] over token ids: geometric mean of modified n-gram
// precisions times the brevity penalty. With smoothing, precisions for n > 1
// use (matches + 1) / (total + 1); the unigram precision is never smoothed.
double Bleu(const std::vector<LabelSequence>& hyps, const std::vector<LabelSequence>& refs,
            int max_n = 4, bool smoothing = true);

double ExactMatch(const std::vector<LabelSequence>& hyps, const std::vector<LabelSequence>& refs);

struct SampleRecord {
  std::string id;
  LabelSequence hyp;
  LabelSequence ref;
  int edits = 0;
};

struct EvalReport {
  double wer = 0.0;
  double bleu = 0.0;
  double exact_match = 0.0;
  std::vector<SampleRecord> samples;
  nlohmann::json config = nlohmann::json::object();

  nlohmann::json ToJson() const;
};

EvalReport Evaluate(const std::vector<std::string>& ids, const std::vector<LabelSequence>& hyps,
                    const std::vector<LabelSequence>& refs,
                    const nlohmann::json& config = nlohmann::json::object());

}  // namespace bilctc::metrics

#endif  // BILCTC_METRICS_METRICS_HPP_
