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

#include "bilctc/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

#include "bilctc/model/averaging.hpp"
#include "bilctc/model/model_io.hpp"
#include "bilctc/nn/checkpoint.hpp"
#include "bilctc/nn/optim.hpp"

namespace bilctc::train {

namespace fs = std::filesystem;

void TrainConfig::Validate() const {
  auto require = [](bool ok, const char* msg) {
    if (!ok) Fail(ErrorKind::kConfiguration, msg);
  };
  require(steps >= 0, "steps must be >= 0");
  require(max_frames >= 1, "max_frames must be >= 1");
  require(lr_peak > 0.0, "lr_peak must be positive");
  require(warmup >= 1, "warmup must be >= 1");
  require(steps == 0 || warmup < steps, "warmup must be smaller than steps");
  require(dropout >= 0.0 && dropout < 1.0, "dropout must lie in [0, 1)");
  require(label_smoothing >= 0.0 && label_smoothing < 1.0,
          "label_smoothing must lie in [0, 1)");
  require(valid_interval >= 1 && log_interval >= 1, "intervals must be >= 1");
  require(checkpoints_kept >= 1, "checkpoints_kept must be >= 1");
  require(average_k >= 1 && average_k <= checkpoints_kept,
          "average_k must lie in [1, checkpoints_kept]");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"steps", c.steps},
                     {"max_frames", c.max_frames},
                     {"lr_peak", c.lr_peak},
                     {"warmup", c.warmup},
                     {"dropout", c.dropout},
                     {"label_smoothing", c.label_smoothing},
                     {"seed", c.seed},
                     {"valid_interval", c.valid_interval},
                     {"log_interval", c.log_interval},
                     {"checkpoints_kept", c.checkpoints_kept},
                     {"average_k", c.average_k}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  TrainConfig d;
  c.steps = j.value("steps", d.steps);
  c.max_frames = j.value("max_frames", d.max_frames);
  c.lr_peak = j.value("lr_peak", d.lr_peak);
  c.warmup = j.value("warmup", d.warmup);
  c.dropout = j.value("dropout", d.dropout);
  c.label_smoothing = j.value("label_smoothing", d.label_smoothing);
  c.seed = j.value("seed", d.seed);
  c.valid_interval = j.value("valid_interval", d.valid_interval);
  c.log_interval = j.value("log_interval", d.log_interval);
  c.checkpoints_kept = j.value("checkpoints_kept", d.checkpoints_kept);
  c.average_k = j.value("average_k", d.average_k);
}

double DevLoss(model::BilCtcModel<float>& model, const data::Dataset& dev, int max_frames,
               double label_smoothing) {
  double weighted = 0.0;
  long tokens = 0;
  model::LossOptions opt;
  opt.label_smoothing = label_smoothing;
  for (const auto& batch : data::BuildBatches(dev, max_frames)) {
    const auto loss = model.TotalLoss(batch, opt);
    if (loss.batch_skipped()) continue;
    weighted += loss.total * double(loss.tokens);
    tokens += loss.tokens;
  }
  if (tokens == 0) Fail(ErrorKind::kInvalidInput, "dev set has no feasible samples");
  return weighted / double(tokens);
}

namespace {

class JsonlLog {
 public:
  explicit JsonlLog(const std::string& path) : os_(path, std::ios::trunc) {
    if (!os_) Fail(ErrorKind::kIo, "cannot write " + path);
  }
  void Write(const nlohmann::json& record) {
    os_ << record.dump() << '\n';
    os_.flush();
  }

 private:
  std::ofstream os_;
};

std::string CheckpointName(int step) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "ckpt-%06d.bin", step);
  return buf;
}

struct SavedCheckpoint {
  std::string path;
  double dev_loss;
  int step;
};

}  // namespace

TrainResult Train(const model::ModelSpec& spec, const data::Dataset& train,
                  const data::Dataset& dev, const TrainConfig& config,
                  const std::string& run_dir) {
  config.Validate();
  spec.Validate();
  fs::create_directories(run_dir);

  data::BatchingStats stats;
  const auto batches = data::BuildBatches(train, config.max_frames, &stats);
  if (batches.empty()) Fail(ErrorKind::kInvalidInput, "no feasible training samples");

  model::BilCtcModel<float> net(spec, config.seed);
  TrainResult result;
  result.log_path = (fs::path(run_dir) / "train.log").string();
  JsonlLog log(result.log_path);
  log.Write({{"event", "start"},
             {"parameters", net.params().ParameterCount()},
             {"batches", batches.size()},
             {"dropped_infeasible", stats.dropped_infeasible},
             {"model_spec", spec},
             {"train_config", config}});

  std::vector<SavedCheckpoint> saved;
  auto validate_and_save = [&](int step) {
    const double dev_loss = DevLoss(net, dev, config.max_frames, config.label_smoothing);
    const std::string name = CheckpointName(step);
    const std::string path = (fs::path(run_dir) / name).string();
    model::SaveModel(path, net,
                     {{model::kDevLossKey, dev_loss}, {"step", step}, {"train_config", config}});
    saved.push_back({path, dev_loss, step});
    // Keep the best checkpoints by dev loss, plus the newest as the last good one.
    std::vector<SavedCheckpoint> ranked = saved;
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.dev_loss < b.dev_loss; });
    std::vector<SavedCheckpoint> keep;
    for (const auto& c : ranked) {
      if (int(keep.size()) < config.checkpoints_kept || c.step == step) {
        keep.push_back(c);
      } else {
        fs::remove(c.path);
      }
    }
    saved = keep;
    log.Write({{"event", "validate"}, {"step", step}, {"dev_loss", dev_loss},
               {"checkpoint", name}});
  };

  std::mt19937_64 order_rng(config.seed ^ 0x0DDBA11ULL);
  std::vector<size_t> order(batches.size());
  size_t cursor = order.size();
  bool first_logged = false;

  for (int step = 1; step <= config.steps; ++step) {
    if (cursor == order.size()) {
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), order_rng);
      cursor = 0;
    }
    const auto& batch = batches[order[cursor++]];
    const double lr = nn::InvSqrtLr(step, config.warmup, config.lr_peak);

    net.params().ZeroGrad();
    model::LossOptions opt;
    opt.training = true;
    opt.dropout = config.dropout;
    opt.label_smoothing = config.label_smoothing;
    opt.seed = config.seed * 1000003ULL + uint64_t(step);
    opt.compute_gradients = true;
    const auto loss = net.TotalLoss(batch, opt);
    if (loss.batch_skipped()) {
      log.Write({{"event", "skipped_batch"}, {"step", step}});
      continue;
    }
    if (!std::isfinite(loss.total)) {
      log.Write({{"event", "diverged"}, {"step", step}});
      Fail(ErrorKind::kNumeric,
           "training diverged at step " + std::to_string(step) + "; last good checkpoint: " +
               (saved.empty() ? std::string("none") : saved.back().path));
    }
    try {
      nn::AdamStep(net.params(), lr);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kNumeric) throw;
      log.Write({{"event", "diverged"}, {"step", step}});
      Fail(ErrorKind::kNumeric, std::string(e.what()) + "; last good checkpoint: " +
                                    (saved.empty() ? std::string("none") : saved.back().path));
    }
    if (!first_logged) {
      result.first_loss = loss.total;
      first_logged = true;
    }
    result.last_loss = loss.total;
    if (step == 1 || step % config.log_interval == 0) {
      log.Write({{"step", step}, {"lr", lr}, {"loss", loss.ToJson()}});
    }
    if (step % config.valid_interval == 0 && step != config.steps) validate_and_save(step);
  }
  validate_and_save(config.steps);
  result.steps = config.steps;

  std::vector<std::string> paths;
  for (const auto& c : saved) paths.push_back(c.path);
  auto averaged = model::AverageCheckpoints(paths, std::min<int>(config.average_k, paths.size()));
  result.final_checkpoint = (fs::path(run_dir) / "final.bin").string();
  nlohmann::json sources = nlohmann::json::array();
  for (const auto& p : averaged.metadata["averaged_from"]) {
    sources.push_back(fs::path(p.get<std::string>()).filename().string());
  }
  averaged.metadata["averaged_from"] = sources;
  nn::SaveCheckpoint(result.final_checkpoint, averaged.params, averaged.metadata);

  std::stable_sort(saved.begin(), saved.end(),
                   [](const auto& a, const auto& b) { return a.dev_loss < b.dev_loss; });
  for (const auto& c : saved) result.checkpoints.push_back(c.path);
  result.best_dev_loss = saved.front().dev_loss;
  log.Write({{"event", "final"}, {"averaged_from", sources},
             {"best_dev_loss", result.best_dev_loss}});
  return result;
}

std::vector<decode::NBestRecord> DecodeDataset(const model::BilCtcModel<float>& model,
                                               const data::Dataset& dataset,
                                               const decode::DecodeConfig& config) {
  std::vector<decode::NBestRecord> out;
  for (const auto& s : dataset) {
    const auto hyps = decode::DecodeUtterance(model, s.features, config);
    auto records = decode::ToRecords(s.id, hyps);
    out.insert(out.end(), records.begin(), records.end());
  }
  return out;
}

const char* ReferenceKind(model::Task task) {
  return task == model::Task::kSt ? "translation" : "transcript";
}

metrics::EvalReport EvaluateNBest(const std::vector<decode::NBestRecord>& records,
                                  const data::Dataset& references,
                                  const std::string& reference_kind,
                                  const nlohmann::json& config) {
  if (reference_kind != "translation" && reference_kind != "transcript") {
    Fail(ErrorKind::kConfiguration, "reference must be translation or transcript");
  }
  std::map<std::string, LabelSequence> best;
  for (const auto& r : records) {
    if (r.rank == 1) best[r.utt] = r.tokens;
  }
  std::vector<std::string> ids;
  std::vector<LabelSequence> hyps, refs;
  for (const auto& s : references) {
    ids.push_back(s.id);
    const auto it = best.find(s.id);
    // An utterance without a hypothesis scores as an empty output.
    hyps.push_back(it == best.end() ? LabelSequence{} : it->second);
    refs.push_back(reference_kind == "translation" ? s.translation : s.transcript);
  }
  return metrics::Evaluate(ids, hyps, refs, config);
}

}  // namespace bilctc::train
