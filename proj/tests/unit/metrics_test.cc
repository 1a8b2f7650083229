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
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "bilctc/metrics/metrics.hpp"

namespace bilctc::metrics {
namespace {

// Full-table Levenshtein written independently of the rolling-row version.
int OracleDistance(const LabelSequence& a, const LabelSequence& b) {
  std::vector<std::vector<int>> d(a.size() + 1, std::vector<int>(b.size() + 1, 0));
  for (size_t i = 0; i <= a.size(); ++i) d[i][0] = int(i);
  for (size_t j = 0; j <= b.size(); ++j) d[0][j] = int(j);
  for (size_t i = 1; i <= a.size(); ++i)
    for (size_t j = 1; j <= b.size(); ++j) {
      int best = d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      best = std::min(best, d[i - 1][j] + 1);
      best = std::min(best, d[i][j - 1] + 1);
      d[i][j] = best;
    }
  return d[a.size()][b.size()];
}

LabelSequence RandomSeq(std::mt19937_64& rng, int max_len, int vocab) {
  LabelSequence s(rng() % (max_len + 1));
  for (auto& c : s) c = 1 + int(rng() % vocab);
  return s;
}

TEST(WerTest, Examples) {
  EXPECT_EQ(Wer({1, 2, 3}, {1, 2, 3}), 0.0);
  EXPECT_DOUBLE_EQ(Wer({1, 2, 3}, {1, 9, 3}), 1.0 / 3.0);
  EXPECT_EQ(Wer({}, {}), 0.0);
  EXPECT_DOUBLE_EQ(Wer({}, {1, 2}), 1.0);
}

TEST(WerTest, MatchesIndependentDynamicProgram) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const auto a = RandomSeq(rng, 12, 5), b = RandomSeq(rng, 12, 5);
    ASSERT_EQ(EditDistance(a, b), OracleDistance(a, b));
    if (!b.empty()) EXPECT_DOUBLE_EQ(Wer(a, b), double(OracleDistance(a, b)) / b.size());
  }
}

TEST(WerTest, CostSymmetry) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 300; ++i) {
    auto a = RandomSeq(rng, 10, 4), b = RandomSeq(rng, 10, 4);
    if (a.empty() || b.empty()) continue;
    EXPECT_NEAR(Wer(a, b) * b.size(), Wer(b, a) * a.size(), 1e-12);
  }
}

TEST(BleuTest, HandComputedExample) {
  // Precisions 4/4, 3/3, 2/2, 1/1; BP = exp(1 - 5/4).
  const double bleu = Bleu({{1, 2, 3, 4}}, {{1, 2, 3, 4, 5}});
  EXPECT_NEAR(bleu, 100.0 * std::exp(-0.25), 1e-9);
  EXPECT_NEAR(bleu, 77.88, 1e-2);
}

TEST(BleuTest, IdenticalCorpusIs100AndDisjointIs0) {
  std::vector<LabelSequence> refs{{1, 2, 3, 4, 5}, {2, 2, 3}};
  EXPECT_NEAR(Bleu(refs, refs), 100.0, 1e-9);
  EXPECT_EQ(Bleu({{7, 8, 9}, {7}}, refs), 0.0);
}

TEST(BleuTest, SmoothingOnlyAboveUnigrams) {
  // One matching unigram, no matching bigrams: unsmoothed is 0.
  const std::vector<LabelSequence> hyp{{1, 9, 8, 7}}, ref{{1, 2, 3, 4}};
  EXPECT_EQ(Bleu(hyp, ref, 4, false), 0.0);
  // Smoothed: p1 = 1/4, p2 = 1/4, p3 = 1/3, p4 = 1/2, BP = 1.
  const double expect = 100.0 * std::pow(0.25 * 0.25 / 3.0 / 2.0, 0.25);
  EXPECT_NEAR(Bleu(hyp, ref, 4, true), expect, 1e-9);
}

TEST(BleuTest, ClippedCounts) {
  // "1 1 1 1" vs "1 2": unigram matches clip to 1.
  const auto st = CollectBleuStats({{1, 1, 1, 1}}, {{1, 2}}, 2);
  EXPECT_EQ(st.matches[0], 1);
  EXPECT_EQ(st.totals[0], 4);
  EXPECT_EQ(st.matches[1], 0);
}

TEST(BleuTest, PermutationInvariant) {
  std::mt19937_64 rng(3);
  std::vector<LabelSequence> h, r;
  for (int i = 0; i < 40; ++i) {
    r.push_back(RandomSeq(rng, 8, 4));
    h.push_back(RandomSeq(rng, 8, 4));
  }
  const double base = Bleu(h, r);
  std::vector<size_t> perm(h.size());
  for (size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<LabelSequence> hp, rp;
  for (size_t i : perm) {
    hp.push_back(h[i]);
    rp.push_back(r[i]);
  }
  EXPECT_DOUBLE_EQ(Bleu(hp, rp), base);
}

TEST(BleuTest, Errors) {
  EXPECT_THROW(Bleu({}, {}), Error);
  EXPECT_THROW(Bleu({{1}}, {{1}, {2}}), Error);
}

TEST(ExactMatchTest, Fractions) {
  EXPECT_EQ(ExactMatch({{1}, {2}}, {{1}, {2}}), 1.0);
  EXPECT_EQ(ExactMatch({{3}, {4}}, {{1}, {2}}), 0.0);
  EXPECT_EQ(ExactMatch({{1}, {4}}, {{1}, {2}}), 0.5);
}

TEST(EvaluateTest, ReportFieldsAndRanges) {
  const auto r = Evaluate({"a", "b"}, {{1, 2}, {3}}, {{1, 2}, {4}}, {{"mode", "attn_only"}});
  EXPECT_DOUBLE_EQ(r.wer, 1.0 / 3.0);
  EXPECT_EQ(r.exact_match, 0.5);
  EXPECT_GE(r.bleu, 0.0);
  EXPECT_LE(r.bleu, 100.0);
  const auto j = r.ToJson();
  EXPECT_EQ(j["config"]["mode"], "attn_only");
  EXPECT_EQ(j["samples"][1]["edits"], 1);
}

}  // namespace
}  // namespace bilctc::metrics
