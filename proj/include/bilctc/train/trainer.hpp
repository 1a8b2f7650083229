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

#ifndef BILCTC_TRAIN_TRAINER_HPP_
#define BILCTC_TRAIN_TRAINER_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bilctc/data/dataset.hpp"
#include "bilctc/decode/decode.hpp"
#include "bilctc/metrics/metrics.hpp"
#include "bilctc/model/bilctc_model.hpp"

namespace bilctc::train {

struct TrainConfig {
  int steps = 3000;
  int max_frames = 2000;   // per-batch budget: batch size x longest input
  double lr_peak = 1e-3;
  int warmup = 500;
  double dropout = 0.15;
  double label_smoothing = 0.1;
  uint64_t seed = 1;
  int valid_interval = 250;
  int log_interval = 25;
  int checkpoints_kept = 10;
  int average_k = 10;

  void Validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct TrainResult {
  std::string final_checkpoint;  // average of the best k checkpoints
  std::string log_path;
  std::vector<std::string> checkpoints;  // retained, best dev loss first
  int steps = 0;
  double best_dev_loss = 0.0;
  double first_loss = 0.0;  // training loss of the first logged batch
  double last_loss = 0.0;
};

// Dev loss under evaluation mode (no dropout, no CLM), token-weighted over
// all dev batches.
double DevLoss(model::BilCtcModel<float>& model, const data::Dataset& dev, int max_frames,
               double label_smoothing);

// Trains from a fresh initialization seeded by config.seed and writes into
// run_dir: train.log (JSONL), ckpt-<step>.bin and final.bin. A non-finite
// loss or gradient aborts with kNumeric; checkpoints saved so far remain.
TrainResult Train(const model::ModelSpec& spec, const data::Dataset& train,
                  const data::Dataset& dev, const TrainConfig& config,
                  const std::string& run_dir);

// Decodes every sample and returns all n-best records (rank 1 first per
// utterance).
std::vector<decode::NBestRecord> DecodeDataset(const model::BilCtcModel<float>& model,
                                               const data::Dataset& dataset,
                                               const decode::DecodeConfig& config);

// Metrics over the rank-1 records against the reference of `reference_kind`
// ("translation" or "transcript").
metrics::EvalReport EvaluateNBest(const std::vector<decode::NBestRecord>& records,
                                  const data::Dataset& references,
                                  const std::string& reference_kind,
                                  const nlohmann::json& config = nlohmann::json::object());

// The decoder's reference for a model task.
const char* ReferenceKind(model::Task task);

// ---- Ablation ladder ----

struct LadderRow {
  std::string name;  // "ctc", "+xctc", "+interctc", "+pae", "+clm"
  model::ModelSpec spec;
};

// Five cumulative rows over `base` for one topology: the CTC-only auxiliary
// baseline, then +XCTC, +InterCTC taps, +PAE, +CLM. Weights, widths and
// tap positions come from `base`.
std::vector<LadderRow> LadderRows(const model::ModelSpec& base, model::Topology topology);

struct LadderCell {
  std::string topology;
  std::string row;
  std::string mode;  // ctc_greedy, attn_only, rescoring
  bool available = false;  // false when the row lacks the needed head
  double exact_match = 0.0;  // mean over seeds
  double bleu = 0.0;
  double wer = 0.0;
  std::vector<double> per_seed_exact_match;
};

struct LadderOptions {
  std::vector<model::Topology> topologies{model::Topology::kSynchronous,
                                          model::Topology::kProgressive};
  std::vector<uint64_t> seeds{1, 2, 3};
  decode::DecodeConfig decode;
  // Called after each finished training run; for progress reporting.
  std::function<void(const std::string&)> progress;
};

// Trains every (topology, row, seed), decodes `test` with the three
// inference modes into n-best files under out_dir, and scores those files.
std::vector<LadderCell> RunAblationLadder(const model::ModelSpec& base,
                                          const data::Dataset& train, const data::Dataset& dev,
                                          const data::Dataset& test, const TrainConfig& config,
                                          const LadderOptions& options,
                                          const std::string& out_dir);

nlohmann::json LadderToJson(const std::vector<LadderCell>& cells);
// Table-shaped text: one line per (topology, row), columns per mode.
std::string FormatLadder(const std::vector<LadderCell>& cells);

}  // namespace bilctc::train

#endif  // BILCTC_TRAIN_TRAINER_HPP_
