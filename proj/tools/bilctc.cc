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

// bilctc: command-line entry point for data generation, training, decoding,
// alignment, evaluation, checkpoint averaging and the ablation ladder.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "bilctc/cli/run_config.hpp"
#include "bilctc/ctc/lattice.hpp"
#include "bilctc/data/dataset.hpp"
#include "bilctc/decode/decode.hpp"
#include "bilctc/metrics/metrics.hpp"
#include "bilctc/model/averaging.hpp"
#include "bilctc/model/model_io.hpp"
#include "bilctc/nn/checkpoint.hpp"
#include "bilctc/train/trainer.hpp"
#include "bilctc/version.hpp"

namespace fs = std::filesystem;
using bilctc::Error;
using bilctc::ErrorKind;
using bilctc::Fail;
using nlohmann::json;

namespace {

int ExitCode(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage: return 2;
    case ErrorKind::kConfiguration: return 3;
    case ErrorKind::kInvalidInput: return 4;
    case ErrorKind::kInfeasibleTarget: return 5;
    case ErrorKind::kIo: return 6;
    case ErrorKind::kNumeric: return 7;
  }
  return 1;
}

// Options shared by every subcommand that reads a configuration.
struct CommonOptions {
  std::string config_file;
  std::vector<std::string> sets;
};

void AddCommon(CLI::App* app, CommonOptions& o) {
  app->add_option("--config", o.config_file, "key = value configuration file");
  app->add_option("--set", o.sets, "override one key, e.g. --set model.hidden=64")
      ->allow_extra_args(false);
}

bilctc::cli::RunConfig Resolve(const CommonOptions& o) {
  bilctc::cli::RunConfig cfg;
  if (!o.config_file.empty()) cfg.LoadFile(o.config_file);
  for (const auto& s : o.sets) cfg.SetAssignment(s);
  return cfg;
}

std::string CommandLine(int argc, char** argv) {
  std::string out;
  for (int i = 1; i < argc; ++i) out += (i > 1 ? " " : "") + std::string(argv[i]);
  return out;
}

void RequireFile(const std::string& path, const char* what) {
  if (!fs::exists(path)) Fail(ErrorKind::kIo, std::string(what) + " not found: " + path);
}

void WriteJson(const fs::path& path, const json& j) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) Fail(ErrorKind::kIo, "cannot write " + path.string());
  os << j.dump(2) << "\n";
}

void CheckModelFitsData(const bilctc::model::ModelSpec& spec, const bilctc::data::Dataset& ds,
                        const std::string& where) {
  for (const auto& s : ds) {
    if (s.features.cols() != spec.input_dim) {
      Fail(ErrorKind::kConfiguration,
           where + ": features have width " + std::to_string(s.features.cols()) +
               " but model.input_dim is " + std::to_string(spec.input_dim));
    }
    for (int c : s.transcript)
      if (c > spec.src_vocab)
        Fail(ErrorKind::kConfiguration, where + ": transcript label " + std::to_string(c) +
                                            " exceeds model.src_vocab");
    for (int c : s.translation)
      if (c > spec.tgt_vocab)
        Fail(ErrorKind::kConfiguration, where + ": translation label " + std::to_string(c) +
                                            " exceeds model.tgt_vocab");
  }
}

// The data section of a run records the task the dataset was generated from.
void AdoptTaskSpec(bilctc::cli::RunConfig& cfg, const fs::path& data_dir) {
  const fs::path task = data_dir / "task.json";
  if (!fs::exists(task)) return;
  std::ifstream is(task);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    Fail(ErrorKind::kInvalidInput, task.string() + ": " + e.what());
  }
  for (const auto& [key, value] : j.items())
    cfg.Set("data." + key, value.is_string() ? value.get<std::string>() : value.dump());
}

// ---- subcommands ----

struct GenDataArgs {
  CommonOptions common;
  std::string out;
  std::optional<uint64_t> seed;
};

void RunGenData(const GenDataArgs& a, const std::string& cmd) {
  auto cfg = Resolve(a.common);
  if (a.seed) cfg.Set("data.seed", std::to_string(*a.seed));
  cfg.Validate();
  const auto spec = cfg.Data();
  const auto sizes = cfg.Splits();
  const auto splits = bilctc::data::GenerateSplits(spec, sizes.train, sizes.dev, sizes.test);
  fs::create_directories(a.out);
  const fs::path out(a.out);
  bilctc::data::SaveJsonl((out / "train.jsonl").string(), splits.train);
  bilctc::data::SaveJsonl((out / "dev.jsonl").string(), splits.dev);
  bilctc::data::SaveJsonl((out / "test.jsonl").string(), splits.test);
  bilctc::data::SaveVocabulary((out / "vocab.src").string(),
                               bilctc::data::MakeSyntheticVocabulary("x", spec.src_vocab));
  bilctc::data::SaveVocabulary((out / "vocab.tgt").string(),
                               bilctc::data::MakeSyntheticVocabulary("y", spec.tgt_vocab));
  WriteJson(out / "task.json", spec);
  cfg.WriteResolved(a.out, cmd);
  std::cout << json{{"train", splits.train.size()},
                    {"dev", splits.dev.size()},
                    {"test", splits.test.size()},
                    {"out", a.out}}
                   .dump()
            << "\n";
}

struct TrainArgs {
  CommonOptions common;
  std::string data_dir;
  std::string out;
  std::optional<uint64_t> seed;
  std::optional<int> steps;
};

void RunTrain(const TrainArgs& a, const std::string& cmd) {
  auto cfg = Resolve(a.common);
  if (a.seed) cfg.Set("train.seed", std::to_string(*a.seed));
  if (a.steps) cfg.Set("train.steps", std::to_string(*a.steps));
  const fs::path dir(a.data_dir);
  AdoptTaskSpec(cfg, dir);
  cfg.Validate();
  RequireFile((dir / "train.jsonl").string(), "training data");
  RequireFile((dir / "dev.jsonl").string(), "dev data");
  const auto train = bilctc::data::LoadJsonl((dir / "train.jsonl").string());
  const auto dev = bilctc::data::LoadJsonl((dir / "dev.jsonl").string());
  const auto spec = cfg.Model();
  CheckModelFitsData(spec, train, "train.jsonl");
  CheckModelFitsData(spec, dev, "dev.jsonl");
  cfg.WriteResolved(a.out, cmd);
  const auto r = bilctc::train::Train(spec, train, dev, cfg.Train(), a.out);
  std::cout << json{{"final_checkpoint", r.final_checkpoint},
                    {"log", r.log_path},
                    {"steps", r.steps},
                    {"best_dev_loss", r.best_dev_loss},
                    {"first_loss", r.first_loss},
                    {"last_loss", r.last_loss}}
                   .dump()
            << "\n";
}

struct DecodeArgs {
  CommonOptions common;
  std::string checkpoint, data, out;
  std::optional<std::string> mode;
  std::optional<double> lambda;
  std::optional<int> beam;
};

void RunDecode(const DecodeArgs& a, const std::string& cmd) {
  auto cfg = Resolve(a.common);
  if (a.mode) cfg.Set("decode.mode", *a.mode);
  if (a.lambda) cfg.Set("decode.ctc_weight", json(*a.lambda).dump());
  if (a.beam) cfg.Set("decode.beam", std::to_string(*a.beam));
  const auto dc = cfg.Decode();
  dc.Validate();
  RequireFile(a.checkpoint, "checkpoint");
  RequireFile(a.data, "dataset");
  const auto loaded = bilctc::model::LoadModel(a.checkpoint);
  const auto ds = bilctc::data::LoadJsonl(a.data);
  CheckModelFitsData(loaded.model->spec(), ds, a.data);
  cfg.WriteResolved(a.out, cmd);
  const auto records = bilctc::train::DecodeDataset(*loaded.model, ds, dc);
  const fs::path out(a.out);
  bilctc::decode::WriteNBest((out / "nbest.jsonl").string(), records);
  std::ofstream txt(out / "hyp.txt", std::ios::trunc);
  for (const auto& r : records) {
    if (r.rank != 1) continue;
    txt << r.utt;
    for (int t : r.tokens) txt << " " << t;
    txt << "\n";
  }
  std::cout << json{{"utterances", ds.size()},
                    {"mode", bilctc::decode::ToString(dc.mode)},
                    {"nbest", (out / "nbest.jsonl").string()}}
                   .dump()
            << "\n";
}

struct AlignArgs {
  std::string checkpoint, data, out, head = "ctc";
  int limit = 0;
};

void RunAlign(const AlignArgs& a, const std::string& cmd) {
  RequireFile(a.checkpoint, "checkpoint");
  RequireFile(a.data, "dataset");
  const auto kind = bilctc::model::ParseHeadKind(a.head);
  const auto loaded = bilctc::model::LoadModel(a.checkpoint);
  const auto ds = bilctc::data::LoadJsonl(a.data);
  CheckModelFitsData(loaded.model->spec(), ds, a.data);
  bilctc::cli::RunConfig().WriteResolved(a.out, cmd);
  std::ofstream os(fs::path(a.out) / "alignments.jsonl", std::ios::trunc);
  int done = 0, infeasible = 0;
  for (const auto& s : ds) {
    if (a.limit > 0 && done >= a.limit) break;
    const auto view = loaded.model->Infer(s.features);
    const auto& dist = kind == bilctc::model::HeadKind::kCtc ? view.ctc : view.xctc;
    if (!dist) {
      Fail(ErrorKind::kConfiguration,
           std::string("model has no final ") + bilctc::model::ToString(kind) + " head");
    }
    const auto& target = kind == bilctc::model::HeadKind::kCtc ? s.transcript : s.translation;
    json rec{{"id", s.id}, {"head", a.head}, {"target", target}};
    try {
      const auto al = bilctc::ctc::ForcedAlign(*dist, target);
      rec["path"] = al.path;
      rec["log_prob"] = al.log_prob;
      rec["collapsed"] = bilctc::ctc::Collapse(al.path, dist->vocab_size());
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kInfeasibleTarget) throw;
      rec["error"] = e.what();
      ++infeasible;
    }
    os << rec.dump() << "\n";
    ++done;
  }
  std::cout << json{{"aligned", done - infeasible}, {"infeasible", infeasible}}.dump() << "\n";
}

struct EvalArgs {
  std::string nbest, data, out, reference = "translation";
};

void RunEval(const EvalArgs& a, const std::string& cmd) {
  RequireFile(a.nbest, "n-best file");
  RequireFile(a.data, "dataset");
  const auto ds = bilctc::data::LoadJsonl(a.data);
  const auto report = bilctc::train::EvaluateNBest(bilctc::decode::ReadNBest(a.nbest), ds,
                                                   a.reference,
                                                   {{"nbest", a.nbest}, {"data", a.data}});
  bilctc::cli::RunConfig().WriteResolved(a.out, cmd);
  WriteJson(fs::path(a.out) / "report.json", report.ToJson());
  std::cout << json{{"wer", report.wer},
                    {"bleu", report.bleu},
                    {"exact_match", report.exact_match},
                    {"samples", report.samples.size()}}
                   .dump()
            << "\n";
}

struct AvgArgs {
  std::vector<std::string> inputs;
  std::string out;
  int k = 10;
};

void RunAverage(const AvgArgs& a) {
  for (const auto& p : a.inputs) RequireFile(p, "checkpoint");
  const auto avg = bilctc::model::AverageCheckpoints(a.inputs, a.k);
  const fs::path out(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  bilctc::nn::SaveCheckpoint(a.out, avg.params, avg.metadata);
  std::cout << json{{"out", a.out}, {"averaged_from", avg.metadata["averaged_from"]}}.dump()
            << "\n";
}

struct AblationArgs {
  CommonOptions common;
  std::string data_dir, out;
  std::vector<uint64_t> seeds{1, 2, 3};
  std::vector<std::string> topologies{"synchronous", "progressive"};
};

void RunAblation(const AblationArgs& a, const std::string& cmd) {
  auto cfg = Resolve(a.common);
  const fs::path dir(a.data_dir);
  AdoptTaskSpec(cfg, dir);
  cfg.Validate();
  for (const char* f : {"train.jsonl", "dev.jsonl", "test.jsonl"}) {
    RequireFile((dir / f).string(), "dataset split");
  }
  const auto train = bilctc::data::LoadJsonl((dir / "train.jsonl").string());
  const auto dev = bilctc::data::LoadJsonl((dir / "dev.jsonl").string());
  const auto test = bilctc::data::LoadJsonl((dir / "test.jsonl").string());
  const auto spec = cfg.Model();
  CheckModelFitsData(spec, train, "train.jsonl");
  bilctc::train::LadderOptions opt;
  opt.seeds = a.seeds;
  opt.topologies.clear();
  for (const auto& t : a.topologies) opt.topologies.push_back(bilctc::model::ParseTopology(t));
  opt.decode = cfg.Decode();
  opt.progress = [](const std::string& msg) { std::cerr << msg << std::endl; };
  cfg.WriteResolved(a.out, cmd);
  const auto cells =
      bilctc::train::RunAblationLadder(spec, train, dev, test, cfg.Train(), opt, a.out);
  WriteJson(fs::path(a.out) / "ladder.json", bilctc::train::LadderToJson(cells));
  const std::string table = bilctc::train::FormatLadder(cells);
  std::ofstream(fs::path(a.out) / "ladder.txt", std::ios::trunc) << table;
  std::cout << table;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BiL-CTC speech translation toolkit"};
  app.set_version_flag("--version", std::string("bilctc ") + bilctc::kVersion);
  app.require_subcommand(1);
  app.add_flag_callback(
      "--print-defaults",
      [] {
        std::cout << bilctc::cli::RunConfig().ToText();
        std::exit(0);
      },
      "print every configuration key with its default and exit");

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "generate the synthetic train/dev/test splits");
  AddCommon(gen_cmd, gen.common);
  gen_cmd->add_option("--out", gen.out, "output directory")->required();
  gen_cmd->add_option("--seed", gen.seed, "generation seed (data.seed)");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "train a model and average its best checkpoints");
  AddCommon(train_cmd, tr.common);
  train_cmd->add_option("--data", tr.data_dir, "directory with train.jsonl and dev.jsonl")
      ->required();
  train_cmd->add_option("--out", tr.out, "run directory")->required();
  train_cmd->add_option("--seed", tr.seed, "training seed (train.seed)");
  train_cmd->add_option("--steps", tr.steps, "update steps (train.steps)");

  DecodeArgs dec;
  auto* decode_cmd = app.add_subcommand("decode", "decode a dataset into an n-best file");
  AddCommon(decode_cmd, dec.common);
  decode_cmd->add_option("--checkpoint", dec.checkpoint, "model checkpoint")->required();
  decode_cmd->add_option("--data", dec.data, "dataset JSONL")->required();
  decode_cmd->add_option("--out", dec.out, "output directory")->required();
  decode_cmd->add_option("--mode", dec.mode,
                         "ctc_greedy | ctc_prefix_beam | attn_only | rescoring | two_pass");
  decode_cmd->add_option("--lambda", dec.lambda, "CTC weight for rescoring (decode.ctc_weight)");
  decode_cmd->add_option("--beam", dec.beam, "beam size (decode.beam)");

  AlignArgs al;
  auto* align_cmd = app.add_subcommand("align", "forced-align targets against a CTC head");
  align_cmd->add_option("--checkpoint", al.checkpoint, "model checkpoint")->required();
  align_cmd->add_option("--data", al.data, "dataset JSONL")->required();
  align_cmd->add_option("--out", al.out, "output directory")->required();
  align_cmd->add_option("--head", al.head, "ctc (transcript) or xctc (translation)")
      ->check(CLI::IsMember({"ctc", "xctc"}));
  align_cmd->add_option("--limit", al.limit, "align at most this many samples (0 = all)");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "score an n-best file against a dataset");
  eval_cmd->add_option("--nbest", ev.nbest, "n-best JSONL from decode")->required();
  eval_cmd->add_option("--data", ev.data, "dataset JSONL with references")->required();
  eval_cmd->add_option("--out", ev.out, "output directory")->required();
  eval_cmd->add_option("--reference", ev.reference, "translation or transcript")
      ->check(CLI::IsMember({"translation", "transcript"}));

  AvgArgs avg;
  auto* avg_cmd = app.add_subcommand("avg-checkpoints", "average the best k checkpoints by dev loss");
  avg_cmd->add_option("checkpoints", avg.inputs, "checkpoint files")->required();
  avg_cmd->add_option("--out", avg.out, "output checkpoint file")->required();
  avg_cmd->add_option("--k", avg.k, "number of checkpoints to average");

  AblationArgs ab;
  auto* ablation_cmd = app.add_subcommand("ablation", "train and score the five-row ablation ladder");
  AddCommon(ablation_cmd, ab.common);
  ablation_cmd->add_option("--data", ab.data_dir, "directory with train/dev/test JSONL")
      ->required();
  ablation_cmd->add_option("--out", ab.out, "output directory")->required();
  ablation_cmd->add_option("--seeds", ab.seeds, "training seeds")->delimiter(',');
  ablation_cmd->add_option("--topologies", ab.topologies, "synchronous, progressive")
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ExitCode(ErrorKind::kUsage);
  }

  const std::string cmd = CommandLine(argc, argv);
  try {
    if (*gen_cmd) RunGenData(gen, cmd);
    if (*train_cmd) RunTrain(tr, cmd);
    if (*decode_cmd) RunDecode(dec, cmd);
    if (*align_cmd) RunAlign(al, cmd);
    if (*eval_cmd) RunEval(ev, cmd);
    if (*avg_cmd) RunAverage(avg);
    if (*ablation_cmd) RunAblation(ab, cmd);
  } catch (const Error& e) {
    std::cerr << "bilctc: " << bilctc::ErrorKindName(e.kind()) << " error: " << e.what()
              << "\n";
    return ExitCode(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "bilctc: io error: " << e.what() << "\n";
    return ExitCode(ErrorKind::kIo);
  }
  return 0;
}
