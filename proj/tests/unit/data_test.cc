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
#include <filesystem>
#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "bilctc/ctc/lattice.hpp"
#include "bilctc/data/dataset.hpp"

namespace bilctc::data {
namespace {

namespace fs = std::filesystem;

fs::path TempPath(const std::string& name) {
  return fs::temp_directory_path() / ("bilctc_data_" + name);
}

// Straightforward second implementation: explicit window loop, explicit
// modular arithmetic on 0-based symbols.
LabelSequence OracleTranslate(const LabelSequence& x, int window, int vy) {
  LabelSequence z;
  for (size_t start = 0; start < x.size(); start += window) {
    size_t end = std::min(x.size(), start + window);
    for (size_t k = end; k > start; --k) z.push_back(x[k - 1]);
  }
  LabelSequence y;
  int prev = 0;
  for (int sym : z) {
    int zero_based = sym - 1;
    y.push_back((zero_based + prev) % vy + 1);
    prev = zero_based;
  }
  return y;
}

TEST(GenerateTest, TranslationMatchesSecondImplementation) {
  SyntheticTaskSpec spec;  // |Vx|=20, U in [4,12], r=4, w=3
  const auto ds = Generate(spec, 100);
  ASSERT_EQ(ds.size(), 100u);
  for (const auto& s : ds) {
    EXPECT_EQ(s.translation, OracleTranslate(s.transcript, 3, spec.tgt_vocab)) << s.id;
  }
}

TEST(GenerateTest, HandWorkedTranslation) {
  SyntheticTaskSpec spec;
  spec.tgt_vocab = 5;
  // windows [1 2 3][4 5] -> z = 3 2 1 5 4, 0-based 2 1 0 4 3
  // y0 = 2+0, y1 = 1+2, y2 = 0+1, y3 = 4+0, y4 = (3+4)%5 -> 1-based 3 4 2 5 3
  EXPECT_EQ(TranslateTranscript({1, 2, 3, 4, 5}, spec), (LabelSequence{3, 4, 2, 5, 3}));
}

TEST(GenerateTest, EasyTargetIsRelabeledCopy) {
  SyntheticTaskSpec spec;
  spec.easy_target = true;
  for (const auto& s : Generate(spec, 30)) EXPECT_EQ(s.translation, s.transcript);
}

TEST(GenerateTest, FeaturesFollowUpsampling) {
  SyntheticTaskSpec spec;
  spec.noise = 0.0;
  for (const auto& s : Generate(spec, 10)) {
    ASSERT_EQ(s.features.rows(), Eigen::Index(spec.upsample * s.transcript.size()));
    ASSERT_EQ(s.features.cols(), spec.input_dim);
    for (Eigen::Index t = 0; t < s.features.rows(); ++t) {
      // Noise-free frames repeat the symbol embedding within a segment.
      const Eigen::Index first = (t / spec.upsample) * spec.upsample;
      EXPECT_TRUE(s.features.row(t) == s.features.row(first));
    }
    EXPECT_GE(int(s.transcript.size()), spec.min_len);
    EXPECT_LE(int(s.transcript.size()), spec.max_len);
    for (int c : s.transcript) EXPECT_TRUE(c >= 1 && c <= spec.src_vocab);
    for (int c : s.translation) EXPECT_TRUE(c >= 1 && c <= spec.tgt_vocab);
  }
}

TEST(GenerateTest, PureFunctionOfSpecAndIndex) {
  SyntheticTaskSpec spec;
  const auto a = Generate(spec, 20);
  const auto b = Generate(spec, 20);
  const auto tail = Generate(spec, 10, "sample", 10);
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].id, b[i].id);
    EXPECT_TRUE(a[i].features == b[i].features);
    EXPECT_EQ(a[i].transcript, b[i].transcript);
  }
  for (size_t i = 0; i < tail.size(); ++i) {
    EXPECT_EQ(tail[i].id, a[10 + i].id);
    EXPECT_TRUE(tail[i].features == a[10 + i].features);
  }
  spec.seed = 2;
  const auto c = Generate(spec, 20);
  int differing = 0;
  for (size_t i = 0; i < a.size(); ++i) differing += a[i].transcript != c[i].transcript;
  EXPECT_GT(differing, 0);
}

TEST(GenerateTest, SplitsAreDisjoint) {
  const auto s = GenerateSplits(SyntheticTaskSpec{}, 30, 10, 10);
  std::set<std::string> ids;
  for (const auto* part : {&s.train, &s.dev, &s.test})
    for (const auto& x : *part) EXPECT_TRUE(ids.insert(x.id).second) << x.id;
  EXPECT_EQ(ids.size(), 50u);
}

TEST(GenerateTest, InvalidSpecRejected) {
  SyntheticTaskSpec spec;
  spec.upsample = 1;
  EXPECT_THROW(Generate(spec, 1), Error);
}

TEST(JsonlTest, RoundTripIsLossless) {
  const auto ds = Generate(SyntheticTaskSpec{}, 15);
  const auto path = TempPath("rt.jsonl");
  SaveJsonl(path.string(), ds);
  const auto back = LoadJsonl(path.string());
  ASSERT_EQ(back.size(), ds.size());
  for (size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(back[i].id, ds[i].id);
    EXPECT_TRUE(back[i].features == ds[i].features);
    EXPECT_EQ(back[i].transcript, ds[i].transcript);
    EXPECT_EQ(back[i].translation, ds[i].translation);
  }
  fs::remove(path);
}

TEST(JsonlTest, MalformedRecordReportsLine) {
  const auto path = TempPath("bad.jsonl");
  SaveJsonl(path.string(), Generate(SyntheticTaskSpec{}, 2));
  {
    std::ofstream os(path, std::ios::app);
    os << R"({"id": "x", "frames": 1, "dim": 1, "features": [[0.5]], "transcript": [0]})"
       << '\n';
  }
  try {
    LoadJsonl(path.string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidInput);
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
  fs::remove(path);
}

TEST(VocabularyTest, RoundTripAndIndexing) {
  const auto v = MakeSyntheticVocabulary("x", 5);
  EXPECT_EQ(v.size(), 5);
  EXPECT_EQ(v.tokens[3], "x3");
  const auto path = TempPath("vocab.txt");
  SaveVocabulary(path.string(), v);
  EXPECT_EQ(LoadVocabulary(path.string()).tokens, v.tokens);
  fs::remove(path);
}

TEST(BatchTest, SingleSampleHasNoPadding) {
  const auto ds = Generate(SyntheticTaskSpec{}, 1);
  const auto b = MakeBatch(ds, {0});
  EXPECT_TRUE(b.frame_mask.all());
  EXPECT_TRUE((b.transcripts.array() >= 1).all());
  EXPECT_TRUE((b.translations.array() >= 1).all());
  const auto s = b.Unpad(0);
  EXPECT_TRUE(s.features == ds[0].features);
}

TEST(BatchTest, BudgetMasksAndOrderRespected) {
  SyntheticTaskSpec spec;
  const auto ds = Generate(spec, 60);
  const int budget = 200;
  BatchingStats stats;
  const auto batches = BuildBatches(ds, budget, &stats);
  size_t expected_next = 0, total = 0;
  for (const auto& b : batches) {
    ASSERT_GT(b.size(), 0u);
    const auto longest = b.frame_mask.cols();
    if (b.size() > 1) EXPECT_LE(longest * Eigen::Index(b.size()), budget);
    for (size_t k = 0; k < b.size(); ++k) {
      EXPECT_GE(b.indices[k], expected_next);
      expected_next = b.indices[k] + 1;
      const auto s = b.Unpad(k);
      const auto& orig = ds[b.indices[k]];
      EXPECT_EQ(b.frames(k), orig.features.rows());
      EXPECT_EQ(s.transcript, orig.transcript);
      EXPECT_EQ(s.translation, orig.translation);
      EXPECT_TRUE(s.features == orig.features);
      EXPECT_TRUE(IsCtcFeasible(s));
      // Padding rows are zero and masked out.
      for (Eigen::Index t = orig.features.rows(); t < longest; ++t) {
        EXPECT_FALSE(b.frame_mask(k, t));
        EXPECT_TRUE(b.features[k].row(t).isZero());
      }
    }
    total += b.size();
  }
  EXPECT_EQ(total + stats.dropped_infeasible, ds.size());
}

TEST(BatchTest, InfeasibleSamplesDropped) {
  Dataset ds = Generate(SyntheticTaskSpec{}, 3);
  // Four identical labels need 7 frames; two input frames give one.
  ds[1].transcript = {1, 1, 1, 1};
  ds[1].features = MatrixF::Zero(2, ds[1].features.cols());
  BatchingStats stats;
  const auto batches = BuildBatches(ds, 10000, &stats);
  EXPECT_EQ(stats.dropped_infeasible, 1u);
  ASSERT_EQ(batches.size(), 1u);
  EXPECT_EQ(batches[0].indices, (std::vector<size_t>{0, 2}));
}

}  // namespace
}  // namespace bilctc::data
