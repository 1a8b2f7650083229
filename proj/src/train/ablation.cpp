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

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "bilctc/model/model_io.hpp"
#include "bilctc/train/trainer.hpp"

namespace bilctc::train {

namespace fs = std::filesystem;
using model::HeadKind;
using model::Topology;

std::vector<LadderRow> LadderRows(const model::ModelSpec& base, Topology topology) {
  model::ModelSpec s = base;
  s.topology = topology;
  s.xctc_weight = 0.0;
  s.taps = {};
  s.pae_ctc = s.pae_xctc = false;
  s.clm_ratio = 0.0;
  const double xctc = base.xctc_weight > 0.0 ? base.xctc_weight : 0.1;
  const double clm = base.clm_ratio > 0.0 ? base.clm_ratio : 0.1;
  auto taps = model::DefaultTaps(topology, base.encoder_layers, base.acoustic_layers);

  std::vector<LadderRow> rows;
  rows.push_back({"ctc", s});
  s.xctc_weight = xctc;
  rows.push_back({"+xctc", s});
  s.taps = taps;
  rows.push_back({"+interctc", s});
  s.pae_ctc = s.pae_xctc = true;
  rows.push_back({"+pae", s});
  s.clm_ratio = clm;
  rows.push_back({"+clm", s});
  for (const auto& r : rows) r.spec.Validate();
  return rows;
}

namespace {

std::string DirName(const std::string& row) {
  return row[0] == '+' ? row.substr(1) : row;
}

bool ModeAvailable(const model::ModelSpec& spec, decode::Mode mode) {
  if (mode == decode::Mode::kAttnOnly) return true;
  const double w = spec.task == model::Task::kSt ? spec.xctc_weight : spec.ctc_weight;
  return w > 0.0;
}

}  // namespace

std::vector<LadderCell> RunAblationLadder(const model::ModelSpec& base,
                                          const data::Dataset& train, const data::Dataset& dev,
                                          const data::Dataset& test, const TrainConfig& config,
                                          const LadderOptions& options,
                                          const std::string& out_dir) {
  if (options.seeds.empty()) Fail(ErrorKind::kConfiguration, "ladder needs at least one seed");
  const std::vector<decode::Mode> modes{decode::Mode::kCtcGreedy, decode::Mode::kAttnOnly,
                                        decode::Mode::kRescoring};
  const std::string reference = ReferenceKind(base.task);
  std::vector<LadderCell> cells;
  for (const auto topology : options.topologies) {
    for (const auto& row : LadderRows(base, topology)) {
      std::vector<LadderCell> row_cells;
      for (const auto mode : modes) {
        LadderCell c;
        c.topology = model::ToString(topology);
        c.row = row.name;
        c.mode = decode::ToString(mode);
        c.available = ModeAvailable(row.spec, mode);
        row_cells.push_back(c);
      }
      for (const auto seed : options.seeds) {
        const fs::path dir = fs::path(out_dir) / model::ToString(topology) / DirName(row.name) /
                             ("seed" + std::to_string(seed));
        TrainConfig cfg = config;
        cfg.seed = seed;
        const auto trained = Train(row.spec, train, dev, cfg, dir.string());
        const auto loaded = model::LoadModel(trained.final_checkpoint);
        for (size_t m = 0; m < modes.size(); ++m) {
          auto& cell = row_cells[m];
          if (!cell.available) continue;
          decode::DecodeConfig dc = options.decode;
          dc.mode = modes[m];
          const std::string nbest = (dir / (cell.mode + ".nbest.jsonl")).string();
          decode::WriteNBest(nbest, DecodeDataset(*loaded.model, test, dc));
          // Scores come from the persisted file so they can be recomputed offline.
          const auto report = EvaluateNBest(decode::ReadNBest(nbest), test, reference);
          cell.per_seed_exact_match.push_back(report.exact_match);
          cell.exact_match += report.exact_match / double(options.seeds.size());
          cell.bleu += report.bleu / double(options.seeds.size());
          cell.wer += report.wer / double(options.seeds.size());
        }
        if (options.progress) {
          options.progress(std::string(model::ToString(topology)) + " " + row.name + " seed " +
                           std::to_string(seed) + " done");
        }
      }
      cells.insert(cells.end(), row_cells.begin(), row_cells.end());
    }
  }
  return cells;
}

nlohmann::json LadderToJson(const std::vector<LadderCell>& cells) {
  auto out = nlohmann::json::array();
  for (const auto& c : cells) {
    nlohmann::json j{{"topology", c.topology}, {"row", c.row}, {"mode", c.mode},
                     {"available", c.available}};
    if (c.available) {
      j["exact_match"] = c.exact_match;
      j["bleu"] = c.bleu;
      j["wer"] = c.wer;
      j["per_seed_exact_match"] = c.per_seed_exact_match;
    }
    out.push_back(std::move(j));
  }
  return out;
}

std::string FormatLadder(const std::vector<LadderCell>& cells) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof(line), "%-12s %-10s %18s %18s %18s\n", "topology", "row",
                "ctc_greedy", "attn_only", "rescoring");
  os << line;
  std::snprintf(line, sizeof(line), "%-12s %-10s %18s %18s %18s\n", "", "",
                "EM / BLEU", "EM / BLEU", "EM / BLEU");
  os << line;
  for (size_t i = 0; i + 2 < cells.size(); i += 3) {
    std::string cols[3];
    for (int m = 0; m < 3; ++m) {
      const auto& c = cells[i + m];
      char buf[40];
      if (c.available) {
        std::snprintf(buf, sizeof(buf), "%.3f / %6.2f", c.exact_match, c.bleu);
      } else {
        std::snprintf(buf, sizeof(buf), "-");
      }
      cols[m] = buf;
    }
    std::snprintf(line, sizeof(line), "%-12s %-10s %18s %18s %18s\n", cells[i].topology.c_str(),
                  cells[i].row.c_str(), cols[0].c_str(), cols[1].c_str(), cols[2].c_str());
    os << line;
  }
  return os.str();
}

}  // namespace bilctc::train
