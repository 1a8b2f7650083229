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

#include "bilctc/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace bilctc::metrics {
namespace {

void CheckCorpora(size_t hyps, size_t refs, const char* what) {
  if (hyps != refs) {
    Fail(ErrorKind::kInvalidInput, std::string(what) + ": " + std::to_string(hyps) +
                                       " hypotheses for " + std::to_string(refs) +
                                       " references");
  }
}

std::map<LabelSequence, long> NGramCounts(const LabelSequence& s, int n) {
  std::map<LabelSequence, long> counts;
  for (size_t i = 0; i + n <= s.size(); ++i) ++counts[LabelSequence(s.begin() + i, s.begin() + i + n)];
  return counts;
}

}  // namespace

int EditDistance(const LabelSequence& hyp, const LabelSequence& ref) {
  // Single rolling row over the reference.
  std::vector<int> row(ref.size() + 1);
  for (size_t j = 0; j <= ref.size(); ++j) row[j] = int(j);
  for (size_t i = 1; i <= hyp.size(); ++i) {
    int diag = row[0];
    row[0] = int(i);
    for (size_t j = 1; j <= ref.size(); ++j) {
      const int up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (hyp[i - 1] != ref[j - 1])});
      diag = up;
    }
  }
  return row[ref.size()];
}

double Wer(const LabelSequence& hyp, const LabelSequence& ref) {
  if (ref.empty()) return double(hyp.size());
  return double(EditDistance(hyp, ref)) / double(ref.size());
}

double CorpusWer(const std::vector<LabelSequence>& hyps, const std::vector<LabelSequence>& refs) {
  CheckCorpora(hyps.size(), refs.size(), "WER");
  long edits = 0, length = 0;
  for (size_t i = 0; i < hyps.size(); ++i) {
    edits += EditDistance(hyps[i], refs[i]);
    length += long(refs[i].size());
  }
  if (length == 0) return double(edits);
  return double(edits) / double(length);
}

BleuStats CollectBleuStats(const std::vector<LabelSequence>& hyps,
                           const std::vector<LabelSequence>& refs, int max_n) {
  CheckCorpora(hyps.size(), refs.size(), "BLEU");
  if (max_n < 1) Fail(ErrorKind::kConfiguration, "BLEU max_n must be >= 1");
  BleuStats st;
  st.matches.assign(max_n, 0);
  st.totals.assign(max_n, 0);
  for (size_t i = 0; i < hyps.size(); ++i) {
    st.hyp_length += long(hyps[i].size());
    st.ref_length += long(refs[i].size());
    for (int n = 1; n <= max_n; ++n) {
      const auto h = NGramCounts(hyps[i], n);
      const auto r = NGramCounts(refs[i], n);
      for (const auto& [gram, count] : h) {
        st.totals[n - 1] += count;
        const auto it = r.find(gram);
        if (it != r.end()) st.matches[n - 1] += std::min(count, it->second);
      }
    }
  }
  return st;
}

double Bleu(const std::vector<LabelSequence>& hyps, const std::vector<LabelSequence>& refs,
            int max_n, bool smoothing) {
  if (hyps.empty()) Fail(ErrorKind::kInvalidInput, "BLEU of an empty corpus");
  const auto st = CollectBleuStats(hyps, refs, max_n);
  if (st.hyp_length == 0 || st.matches[0] == 0) return 0.0;
  double log_precision = 0.0;
  for (int n = 0; n < max_n; ++n) {
    double m = double(st.matches[n]), c = double(st.totals[n]);
    if (smoothing && n > 0) {
      m += 1.0;
      c += 1.0;
    }
    if (m == 0.0) return 0.0;
    log_precision += std::log(m / c) / max_n;
  }
  const double bp = st.hyp_length > st.ref_length
                        ? 0.0
                        : 1.0 - double(st.ref_length) / double(st.hyp_length);
  return 100.0 * std::exp(log_precision + bp);
}

double ExactMatch(const std::vector<LabelSequence>& hyps, const std::vector<LabelSequence>& refs) {
  CheckCorpora(hyps.size(), refs.size(), "exact match");
  if (hyps.empty()) return 0.0;
  long hits = 0;
  for (size_t i = 0; i < hyps.size(); ++i) hits += hyps[i] == refs[i];
  return double(hits) / double(hyps.size());
}

nlohmann::json EvalReport::ToJson() const {
  auto records = nlohmann::json::array();
  for (const auto& s : samples) {
    records.push_back({{"id", s.id}, {"hyp", s.hyp}, {"ref", s.ref}, {"edits", s.edits}});
  }
  return {{"wer", wer},
          {"bleu", bleu},
          {"exact_match", exact_match},
          {"config", config},
          {"samples", records}};
}

EvalReport Evaluate(const std::vector<std::string>& ids, const std::vector<LabelSequence>& hyps,
                    const std::vector<LabelSequence>& refs, const nlohmann::json& config) {
  CheckCorpora(hyps.size(), refs.size(), "evaluation");
  CheckCorpora(ids.size(), refs.size(), "evaluation ids");
  EvalReport r;
  r.wer = CorpusWer(hyps, refs);
  r.bleu = Bleu(hyps, refs);
  r.exact_match = ExactMatch(hyps, refs);
  r.config = config;
  for (size_t i = 0; i < hyps.size(); ++i) {
    r.samples.push_back({ids[i], hyps[i], refs[i], EditDistance(hyps[i], refs[i])});
  }
  return r;
}

}  // namespace bilctc::metrics
