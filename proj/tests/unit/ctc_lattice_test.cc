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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "bilctc/ctc/lattice.hpp"
#include "bilctc/ctc/prefix_score.hpp"
#include "support/oracles.hpp"

namespace bilctc::ctc {
namespace {

using bilctc::testing::BruteBestPath;
using bilctc::testing::BruteLogLikelihood;
using bilctc::testing::BruteOccupancy;
using bilctc::testing::RandomFeasibleTarget;
using bilctc::testing::RandomLogits;
using bilctc::testing::RandomLogProbs;
using bilctc::testing::UniformLogProbs;

constexpr int a = 1;
constexpr int b = 2;

TEST(CollapseTest, MergesRepeatsThenDropsBlanks) {
  EXPECT_EQ(Collapse(std::vector<int>{a, a, 0, b}, 2), (LabelSequence{a, b}));
  EXPECT_EQ(Collapse(std::vector<int>{0, 0, 0}, 2), LabelSequence{});
  EXPECT_EQ(Collapse(std::vector<int>{a, 0, a}, 2), (LabelSequence{a, a}));
}

TEST(CollapseTest, RejectsOutOfRange) {
  try {
    Collapse(std::vector<int>{a, 3}, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidInput);
  }
  EXPECT_THROW(Collapse(std::vector<int>{-1}, 2), Error);
}

TEST(LogProbMatrixTest, ValidatesShapeAndNormalization) {
  EXPECT_THROW(LogProbMatrix::FromLogProbs(MatrixD::Zero(2, 1)), Error);
  EXPECT_THROW(LogProbMatrix::FromLogProbs(MatrixD::Zero(2, 3)), Error);
  EXPECT_NO_THROW(UniformLogProbs(2, 3));
}

TEST(LogLikelihoodTest, SinglePathAndSmallEnumeration) {
  EXPECT_NEAR(LogLikelihood(UniformLogProbs(1, 3), std::vector<int>{a}),
              std::log(1.0 / 3.0), 1e-12);
  // aa, a-, -a each carry 1/9.
  EXPECT_NEAR(LogLikelihood(UniformLogProbs(2, 3), std::vector<int>{a}),
              std::log(1.0 / 3.0), 1e-12);
}

TEST(LogLikelihoodTest, MatchesEnumerationOnRandomInstance) {
  std::mt19937_64 rng(11);
  const auto probs = RandomLogProbs(5, 4, rng);
  const std::vector<int> target{a, b};
  EXPECT_NEAR(LogLikelihood(probs, target), BruteLogLikelihood(probs, target),
              1e-9);
}

TEST(LogLikelihoodTest, InfeasibleTargetIsTypedError) {
  try {
    LogLikelihood(UniformLogProbs(2, 3), std::vector<int>{a, a});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInfeasibleTarget);
  }
  EXPECT_NO_THROW(LogLikelihood(UniformLogProbs(3, 3), std::vector<int>{a, a}));
}

TEST(LogLikelihoodTest, OracleEquivalenceSweep) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 60; ++trial) {
    const int frames = 1 + trial % 6;
    const int vocab = 1 + trial % 3;
    const auto probs = RandomLogProbs(frames, vocab + 1, rng);
    const auto target = RandomFeasibleTarget(frames, vocab, rng);
    EXPECT_NEAR(LogLikelihood(probs, target), BruteLogLikelihood(probs, target),
                1e-9);
  }
}

TEST(LogLikelihoodTest, SumsToOneOverAllLabelings) {
  std::mt19937_64 rng(5);
  for (int frames = 1; frames <= 4; ++frames) {
    for (int vocab = 1; vocab <= 2; ++vocab) {
      const auto probs = RandomLogProbs(frames, vocab + 1, rng);
      double total = 0.0;
      for (const auto& y :
           bilctc::testing::AllLabelSequences(vocab, frames)) {
        if (MinFramesFor(y) > frames) continue;
        total += std::exp(LogLikelihood(probs, y));
      }
      EXPECT_NEAR(total, 1.0, 1e-6);
    }
  }
}

TEST(ForwardBackwardTest, OneHotGammaForSingleFrame) {
  const auto tables = ForwardBackward(UniformLogProbs(1, 3), std::vector<int>{a});
  EXPECT_NEAR(std::exp(tables.gamma(0, a)), 1.0, 1e-12);
  EXPECT_EQ(tables.gamma(0, 0), kLogZero);
  EXPECT_EQ(tables.gamma(0, b), kLogZero);
}

TEST(ForwardBackwardTest, UniformTwoFrameOccupancy) {
  const auto tables = ForwardBackward(UniformLogProbs(2, 3), std::vector<int>{a});
  // Paths aa, a-, -a: frame 0 is blank in one of three.
  EXPECT_NEAR(std::exp(tables.gamma(0, 0)), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(std::exp(tables.gamma(0, a)), 2.0 / 3.0, 1e-12);
}

TEST(ForwardBackwardTest, ConsistencyAndOccupancyMatchOracle) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const int frames = 1 + trial % 6;
    const int vocab = 1 + trial % 3;
    const auto probs = RandomLogProbs(frames, vocab + 1, rng);
    const auto target = RandomFeasibleTarget(frames, vocab, rng);
    const auto tables = ForwardBackward(probs, target);
    for (int t = 0; t < frames; ++t) {
      const double z = LogSumExp(tables.alpha.row(t) + tables.beta.row(t));
      EXPECT_NEAR(z, tables.log_z, 1e-9);
      EXPECT_NEAR(tables.gamma.row(t).array().exp().sum(), 1.0, 1e-6);
    }
    const MatrixD occ = BruteOccupancy(probs, target);
    EXPECT_LT((tables.gamma.array().exp().matrix() - occ).cwiseAbs().maxCoeff(),
              1e-9);
  }
}

TEST(GradientTest, SingleFrameIsSoftmaxMinusOneHot) {
  MatrixD logits(1, 3);
  logits << 0.3, -1.2, 0.8;
  const MatrixD grad = GradientWrtLogits(logits, std::vector<int>{a});
  MatrixD expected = SoftmaxRows(logits);
  expected(0, a) -= 1.0;
  EXPECT_LT((grad - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GradientTest, MatchesCentralDifferences) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixD logits = RandomLogits(4, 4, rng);
    const auto target = RandomFeasibleTarget(4, 3, rng, 1);
    const MatrixD grad = GradientWrtLogits(logits, target);
    const double h = 1e-4;
    for (int t = 0; t < 4; ++t) {
      for (int c = 0; c < 4; ++c) {
        MatrixD up = logits, down = logits;
        up(t, c) += h;
        down(t, c) -= h;
        const double fd = (-LogLikelihood(LogProbMatrix::FromLogits(up), target) +
                           LogLikelihood(LogProbMatrix::FromLogits(down), target)) /
                          (2 * h);
        EXPECT_LE(std::abs(fd - grad(t, c)),
                  1e-4 * std::max(1.0, std::abs(fd)));
      }
    }
    EXPECT_LT(grad.rowwise().sum().cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(ForcedAlignTest, TightTargetHasUniquePath) {
  std::mt19937_64 rng(2);
  const auto probs = RandomLogProbs(3, 4, rng);
  const std::vector<int> target{a, b, 3};
  const auto al = ForcedAlign(probs, target);
  EXPECT_EQ(al.path, target);
}

TEST(ForcedAlignTest, MatchesExhaustiveMaxPath) {
  std::mt19937_64 rng(29);
  const auto probs = RandomLogProbs(6, 4, rng);
  const std::vector<int> target{a, b};
  const auto al = ForcedAlign(probs, target);
  const auto oracle = BruteBestPath(probs, target);
  EXPECT_EQ(al.log_prob, oracle.score);
  EXPECT_EQ(al.path, oracle.path);
  EXPECT_EQ(Collapse(al.path, 3), target);
}

TEST(ForcedAlignTest, UniformTieBreakIsCanonical) {
  for (int frames = 2; frames <= 6; ++frames) {
    const auto probs = UniformLogProbs(frames, 3);
    for (const auto& target : std::vector<std::vector<int>>{{a}, {a, b}, {a, a}}) {
      if (MinFramesFor(target) > frames) continue;
      const auto al = ForcedAlign(probs, target);
      const auto oracle = BruteBestPath(probs, target);
      EXPECT_EQ(al.path, oracle.path);
      EXPECT_EQ(al.log_prob, oracle.score);
    }
  }
  // Trailing blank is preferred at the end, advances happen as early as
  // possible.
  EXPECT_EQ(ForcedAlign(UniformLogProbs(4, 3), std::vector<int>{a}).path,
            (AlignmentPath{a, 0, 0, 0}));
}

TEST(ForcedAlignTest, InfeasibleTarget) {
  EXPECT_THROW(ForcedAlign(UniformLogProbs(1, 3), std::vector<int>{a, b}), Error);
}

TEST(PrefixScoreTest, SingleFrame) {
  std::mt19937_64 rng(31);
  const auto probs = RandomLogProbs(1, 3, rng);
  auto [s1, p1] = PrefixScoreExtend(probs, PrefixScoreInit(probs), a);
  auto [s2, p2] = PrefixScoreExtend(probs, s1, kEos);
  EXPECT_NEAR(p2, probs(0, a), 1e-12);
  EXPECT_TRUE(s2.ended);
  EXPECT_THROW(PrefixScoreExtend(probs, s2, a), Error);
}

TEST(PrefixScoreTest, EosReproducesLikelihoodAndPrefixMassShrinks) {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 50; ++trial) {
    const auto probs = RandomLogProbs(5, 4, rng);
    const auto target = RandomFeasibleTarget(5, 3, rng);
    auto state = PrefixScoreInit(probs);
    double prev = 0.0;
    for (int c : target) {
      auto [next, score] = PrefixScoreExtend(probs, state, c);
      EXPECT_LE(score, prev + 1e-12);
      prev = score;
      state = std::move(next);
    }
    const double full = PrefixScoreExtend(probs, state, kEos).second;
    EXPECT_NEAR(full, LogLikelihood(probs, target), 1e-9);
  }
}

TEST(PurityTest, RepeatedCallsAreBitIdentical) {
  std::mt19937_64 rng(41);
  const auto probs = RandomLogProbs(6, 4, rng);
  const std::vector<int> target{a, 3, a};
  const auto t1 = ForwardBackward(probs, target);
  const auto t2 = ForwardBackward(probs, target);
  EXPECT_EQ(t1.log_z, t2.log_z);
  EXPECT_TRUE(t1.gamma == t2.gamma);
  EXPECT_EQ(ForcedAlign(probs, target).path, ForcedAlign(probs, target).path);
}

}  // namespace
}  // namespace bilctc::ctc
