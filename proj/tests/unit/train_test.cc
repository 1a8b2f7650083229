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

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "bilctc/cli/run_config.hpp"
#include "bilctc/model/model_io.hpp"
#include "bilctc/nn/checkpoint.hpp"
#include "bilctc/train/trainer.hpp"

namespace bilctc::train {
namespace {

namespace fs = std::filesystem;

std::string ReadAll(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct Toy {
  model::ModelSpec spec;
  data::Splits splits;
};

Toy MakeToy(int n_train = 24) {
  data::SyntheticTaskSpec d;
  d.src_vocab = d.tgt_vocab = 5;
  d.min_len = 2;
  d.max_len = 4;
  d.input_dim = 4;
  Toy t;
  t.splits = data::GenerateSplits(d, n_train, 6, 6);
  t.spec.hidden = 16;
  t.spec.heads = 2;
  t.spec.ffn = 32;
  t.spec.encoder_layers = 3;
  t.spec.acoustic_layers = 2;
  t.spec.decoder_layers = 1;
  t.spec.input_dim = 4;
  t.spec.src_vocab = t.spec.tgt_vocab = 5;
  t.spec.taps = {{1, model::HeadKind::kCtc}, {2, model::HeadKind::kXctc}};
  return t;
}

TrainConfig SmallConfig(int steps) {
  TrainConfig c;
  c.steps = steps;
  c.warmup = std::max(1, steps / 4);
  c.valid_interval = std::max(1, steps / 2);
  c.log_interval = 5;
  c.max_frames = 200;
  c.checkpoints_kept = 3;
  c.average_k = 2;
  return c;
}

fs::path Scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("bilctc_train_" + name);
  fs::remove_all(p);
  return p;
}

TEST(TrainConfigTest, DefaultsAndValidation) {
  TrainConfig c;
  EXPECT_DOUBLE_EQ(c.dropout, 0.15);
  EXPECT_DOUBLE_EQ(c.label_smoothing, 0.1);
  EXPECT_EQ(c.average_k, 10);
  EXPECT_NO_THROW(c.Validate());
  c.warmup = c.steps;
  EXPECT_THROW(c.Validate(), Error);
  c = TrainConfig{};
  c.average_k = c.checkpoints_kept + 1;
  EXPECT_THROW(c.Validate(), Error);
}

TEST(TrainTest, ZeroStepsWritesInitialCheckpointOnly) {
  const auto toy = MakeToy();
  const auto dir = Scratch("zero");
  const auto r = Train(toy.spec, toy.splits.train, toy.splits.dev, SmallConfig(0), dir.string());
  EXPECT_EQ(r.checkpoints.size(), 1u);
  EXPECT_TRUE(fs::exists(dir / "ckpt-000000.bin"));
  // The final artifact is the initialization itself.
  const auto final_model = model::LoadModel(r.final_checkpoint);
  model::BilCtcModel<float> init(toy.spec, SmallConfig(0).seed);
  for (const auto& p : init.params().params()) {
    EXPECT_TRUE(final_model.model->params().Get(p.name).value == p.value) << p.name;
  }
}

TEST(TrainTest, SeededRunsWriteIdenticalLogs) {
  const auto toy = MakeToy();
  const auto a = Scratch("det_a"), b = Scratch("det_b");
  Train(toy.spec, toy.splits.train, toy.splits.dev, SmallConfig(12), a.string());
  Train(toy.spec, toy.splits.train, toy.splits.dev, SmallConfig(12), b.string());
  EXPECT_EQ(ReadAll(a / "train.log"), ReadAll(b / "train.log"));
  EXPECT_EQ(ReadAll(a / "final.bin"), ReadAll(b / "final.bin"));
}

TEST(TrainTest, KeepsBestCheckpointsAndAveragesFromDevOnly) {
  const auto toy = MakeToy();
  auto cfg = SmallConfig(20);
  cfg.valid_interval = 4;
  const auto dir = Scratch("keep");
  const auto r = Train(toy.spec, toy.splits.train, toy.splits.dev, cfg, dir.string());
  // Best three by dev loss, plus possibly the newest.
  EXPECT_GE(r.checkpoints.size(), 3u);
  EXPECT_LE(r.checkpoints.size(), 4u);
  double prev = -1.0;
  for (const auto& p : r.checkpoints) {
    const auto ck = nn::LoadCheckpoint(p);
    const double dev = ck.metadata["dev_loss"].get<double>();
    EXPECT_GE(dev, prev);
    prev = dev;
  }
  const auto final_ck = nn::LoadCheckpoint(r.final_checkpoint);
  EXPECT_EQ(final_ck.metadata["averaged_from"].size(), 2u);
  EXPECT_DOUBLE_EQ(final_ck.metadata["dev_loss"].get<double>(), r.best_dev_loss);
}

TEST(TrainTest, LossDecreasesOnToySet) {
  const auto toy = MakeToy(50);
  auto cfg = SmallConfig(150);
  cfg.lr_peak = 3e-3;
  const auto dir = Scratch("decrease");
  const auto r = Train(toy.spec, toy.splits.train, toy.splits.dev, cfg, dir.string());
  EXPECT_LT(r.last_loss, 0.8 * r.first_loss);
}

TEST(TrainTest, InfeasibleTrainingSetRejected) {
  auto toy = MakeToy(2);
  for (auto& s : toy.splits.train) s.features = MatrixF::Zero(2, 4);
  try {
    Train(toy.spec, toy.splits.train, toy.splits.dev, SmallConfig(4), Scratch("inf").string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidInput);
  }
}

TEST(LadderTest, RowsAreCumulative) {
  model::ModelSpec base;
  for (auto topo : {model::Topology::kSynchronous, model::Topology::kProgressive}) {
    const auto rows = LadderRows(base, topo);
    ASSERT_EQ(rows.size(), 5u);
    EXPECT_EQ(rows[0].name, "ctc");
    EXPECT_EQ(rows[0].spec.xctc_weight, 0.0);
    EXPECT_TRUE(rows[0].spec.taps.empty());
    EXPECT_EQ(rows[1].spec.xctc_weight, 0.1);
    EXPECT_TRUE(rows[1].spec.taps.empty());
    EXPECT_EQ(rows[2].spec.taps.size(), 2u);
    EXPECT_FALSE(rows[2].spec.pae_xctc);
    EXPECT_TRUE(rows[3].spec.pae_ctc && rows[3].spec.pae_xctc);
    EXPECT_EQ(rows[3].spec.clm_ratio, 0.0);
    EXPECT_EQ(rows[4].spec.clm_ratio, 0.1);
    for (const auto& r : rows) EXPECT_EQ(r.spec.topology, topo);
  }
}

TEST(LadderTest, DefaultTapPositions) {
  using model::HeadKind;
  EXPECT_EQ(model::DefaultTaps(model::Topology::kSynchronous, 6, 4),
            (std::vector<model::Tap>{{2, HeadKind::kCtc}, {4, HeadKind::kXctc}}));
  EXPECT_EQ(model::DefaultTaps(model::Topology::kProgressive, 6, 4),
            (std::vector<model::Tap>{{2, HeadKind::kCtc}, {5, HeadKind::kXctc}}));
  EXPECT_EQ(model::DefaultTaps(model::Topology::kProgressive, 18, 12),
            (std::vector<model::Tap>{{6, HeadKind::kCtc}, {15, HeadKind::kXctc}}));
}

TEST(LadderTest, ReportHasEveryCell) {
  auto toy = MakeToy(12);
  LadderOptions opt;
  opt.seeds = {1};
  opt.decode.beam = 2;
  const auto cells = RunAblationLadder(toy.spec, toy.splits.train, toy.splits.dev,
                                       toy.splits.test, SmallConfig(4), opt,
                                       Scratch("ladder").string());
  ASSERT_EQ(cells.size(), 2u * 5u * 3u);
  // The CTC-only baseline has no translation head to decode with.
  EXPECT_FALSE(cells[0].available);
  EXPECT_TRUE(cells[1].available);
  EXPECT_FALSE(cells[2].available);
  EXPECT_TRUE(cells[5].available);
  const auto table = FormatLadder(cells);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 12);
  EXPECT_EQ(LadderToJson(cells).size(), 30u);
}

TEST(RunConfigTest, UnknownKeysAndBadValuesRejected) {
  cli::RunConfig c;
  EXPECT_THROW(c.Set("model.nope", "1"), Error);
  EXPECT_THROW(c.Set("hidden", "1"), Error);
  EXPECT_THROW(c.Set("model.hidden", "abc"), Error);
  EXPECT_THROW(c.Set("model.pae_ctc", "maybe"), Error);
  c.Set("model.hidden", "64");
  c.Set("model.taps", "1:ctc,3:xctc");
  c.Set("decode.mode", "rescoring");
  EXPECT_EQ(c.Model().hidden, 64);
  EXPECT_EQ(c.Model().taps.size(), 2u);
  EXPECT_EQ(c.Decode().mode, decode::Mode::kRescoring);
  c.Set("decode.mode", "bogus");
  EXPECT_THROW(c.Validate(), Error);
}

TEST(RunConfigTest, FileRoundTripAndResolvedEcho) {
  cli::RunConfig c;
  c.Set("train.steps", "77");
  c.Set("data.noise", "0.25");
  const auto dir = Scratch("conf");
  c.WriteResolved(dir.string(), "train --steps 77");
  cli::RunConfig back;
  back.LoadFile((dir / "resolved.conf").string());
  EXPECT_EQ(back.tree(), c.tree());
  // Every default is echoed.
  const auto text = ReadAll(dir / "resolved.conf");
  EXPECT_NE(text.find("train.dropout = 0.15"), std::string::npos);
  EXPECT_NE(text.find("decode.beam = 5"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "version.json"));
}

TEST(RunConfigTest, FileErrorsCarryLineNumbers) {
  const auto dir = Scratch("conf_bad");
  fs::create_directories(dir);
  std::ofstream(dir / "bad.conf") << "# comment\nmodel.hidden = 8\nmodel.bogus = 3\n";
  try {
    cli::RunConfig c;
    c.LoadFile((dir / "bad.conf").string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfiguration);
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
}

}  // namespace
}  // namespace bilctc::train
