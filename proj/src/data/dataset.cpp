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

#include "bilctc/data/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>

#include "bilctc/ctc/lattice.hpp"

namespace bilctc::data {
namespace {

void Require(bool ok, const std::string& msg) {
  if (!ok) Fail(ErrorKind::kConfiguration, msg);
}

// Fixed per-symbol feature centroids, one row per transcript label.
MatrixF SymbolEmbeddings(const SyntheticTaskSpec& spec) {
  std::seed_seq seq{uint64_t(0x5EED), spec.seed};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixF table(spec.src_vocab + 1, spec.input_dim);
  for (Eigen::Index i = 0; i < table.size(); ++i) table.data()[i] = float(normal(rng));
  return table;
}

Sample GenerateOne(const SyntheticTaskSpec& spec, const MatrixF& embeddings, int index,
                   const std::string& id) {
  std::seed_seq seq{spec.seed, uint64_t(index)};
  std::mt19937_64 rng(seq);
  std::uniform_int_distribution<int> length(spec.min_len, spec.max_len);
  std::uniform_int_distribution<int> symbol(1, spec.src_vocab);
  std::normal_distribution<double> noise(0.0, spec.noise);

  Sample s;
  s.id = id;
  s.transcript.resize(length(rng));
  for (auto& c : s.transcript) c = symbol(rng);
  s.translation = TranslateTranscript(s.transcript, spec);
  const int frames = spec.upsample * int(s.transcript.size());
  s.features.resize(frames, spec.input_dim);
  for (int t = 0; t < frames; ++t) {
    const int label = s.transcript[t / spec.upsample];
    for (int d = 0; d < spec.input_dim; ++d) {
      s.features(t, d) = embeddings(label, d) + float(noise(rng));
    }
  }
  return s;
}

std::string FormatId(const std::string& prefix, int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06d", index);
  return prefix + "-" + buf;
}

[[noreturn]] void Malformed(const std::string& path, size_t line, const std::string& what) {
  Fail(ErrorKind::kInvalidInput, path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

void SyntheticTaskSpec::Validate() const {
  Require(src_vocab >= 1 && tgt_vocab >= 1, "vocabularies must be non-empty");
  Require(min_len >= 1 && max_len >= min_len, "need 1 <= min_len <= max_len");
  Require(upsample >= 2, "upsample factor must be >= 2 for CTC feasibility");
  Require(input_dim >= 1, "input_dim must be >= 1");
  Require(noise >= 0.0, "noise must be non-negative");
  Require(window >= 1, "window must be >= 1");
}

const char* ToString(Substitution s) {
  return s == Substitution::kIdentity ? "identity" : "context";
}

Substitution ParseSubstitution(const std::string& s) {
  if (s == "identity") return Substitution::kIdentity;
  if (s == "context") return Substitution::kContext;
  Fail(ErrorKind::kConfiguration, "unknown substitution '" + s + "'");
}

void to_json(nlohmann::json& j, const SyntheticTaskSpec& s) {
  j = nlohmann::json{{"src_vocab", s.src_vocab},   {"tgt_vocab", s.tgt_vocab},
                     {"min_len", s.min_len},       {"max_len", s.max_len},
                     {"upsample", s.upsample},     {"input_dim", s.input_dim},
                     {"noise", s.noise},           {"window", s.window},
                     {"substitution", ToString(s.substitution)},
                     {"easy_target", s.easy_target}, {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, SyntheticTaskSpec& s) {
  j.at("src_vocab").get_to(s.src_vocab);
  j.at("tgt_vocab").get_to(s.tgt_vocab);
  j.at("min_len").get_to(s.min_len);
  j.at("max_len").get_to(s.max_len);
  j.at("upsample").get_to(s.upsample);
  j.at("input_dim").get_to(s.input_dim);
  j.at("noise").get_to(s.noise);
  j.at("window").get_to(s.window);
  s.substitution = ParseSubstitution(j.at("substitution").get<std::string>());
  j.at("easy_target").get_to(s.easy_target);
  j.at("seed").get_to(s.seed);
}

LabelSequence TranslateTranscript(const LabelSequence& transcript,
                                  const SyntheticTaskSpec& spec) {
  const int window = spec.easy_target ? 1 : spec.window;
  const bool context = !spec.easy_target && spec.substitution == Substitution::kContext;
  LabelSequence reordered = transcript;
  for (size_t start = 0; start < reordered.size(); start += window) {
    const size_t end = std::min(reordered.size(), start + size_t(window));
    std::reverse(reordered.begin() + start, reordered.begin() + end);
  }
  LabelSequence out(reordered.size());
  int prev = 0;
  for (size_t i = 0; i < reordered.size(); ++i) {
    const int sym = reordered[i] - 1;
    out[i] = (sym + (context ? prev : 0)) % spec.tgt_vocab + 1;
    prev = sym;
  }
  return out;
}

Dataset Generate(const SyntheticTaskSpec& spec, int n, const std::string& prefix,
                 int first_index) {
  spec.Validate();
  const MatrixF embeddings = SymbolEmbeddings(spec);
  Dataset out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    out.push_back(GenerateOne(spec, embeddings, first_index + i, FormatId(prefix, first_index + i)));
  }
  return out;
}

Splits GenerateSplits(const SyntheticTaskSpec& spec, int n_train, int n_dev, int n_test) {
  Splits s;
  s.train = Generate(spec, n_train, "train", 0);
  s.dev = Generate(spec, n_dev, "dev", n_train);
  s.test = Generate(spec, n_test, "test", n_train + n_dev);
  return s;
}

void SaveJsonl(const std::string& path, const Dataset& dataset) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) Fail(ErrorKind::kIo, "cannot write " + path);
  for (const auto& s : dataset) {
    nlohmann::json rec;
    rec["id"] = s.id;
    rec["frames"] = s.features.rows();
    rec["dim"] = s.features.cols();
    auto feats = nlohmann::json::array();
    for (Eigen::Index t = 0; t < s.features.rows(); ++t) {
      auto row = nlohmann::json::array();
      for (Eigen::Index d = 0; d < s.features.cols(); ++d) row.push_back(s.features(t, d));
      feats.push_back(std::move(row));
    }
    rec["features"] = std::move(feats);
    rec["transcript"] = s.transcript;
    rec["translation"] = s.translation;
    os << rec.dump() << '\n';
  }
  if (!os) Fail(ErrorKind::kIo, "failed writing " + path);
}

Dataset LoadJsonl(const std::string& path) {
  std::ifstream is(path);
  if (!is) Fail(ErrorKind::kIo, "cannot open dataset " + path);
  Dataset out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      Malformed(path, lineno, std::string("invalid JSON: ") + e.what());
    }
    try {
      Sample s;
      s.id = rec.at("id").get<std::string>();
      const auto frames = rec.at("frames").get<Eigen::Index>();
      const auto dim = rec.at("dim").get<Eigen::Index>();
      const auto& feats = rec.at("features");
      if (frames < 1 || dim < 1 || Eigen::Index(feats.size()) != frames) {
        Malformed(path, lineno, "feature matrix does not match frames/dim");
      }
      s.features.resize(frames, dim);
      for (Eigen::Index t = 0; t < frames; ++t) {
        const auto& row = feats[t];
        if (Eigen::Index(row.size()) != dim) Malformed(path, lineno, "ragged feature row");
        for (Eigen::Index d = 0; d < dim; ++d) s.features(t, d) = row[d].get<float>();
      }
      s.transcript = rec.at("transcript").get<LabelSequence>();
      s.translation = rec.at("translation").get<LabelSequence>();
      for (int c : s.transcript)
        if (c < 1) Malformed(path, lineno, "transcript label " + std::to_string(c) + " < 1");
      for (int c : s.translation)
        if (c < 1) Malformed(path, lineno, "translation label " + std::to_string(c) + " < 1");
      out.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      Malformed(path, lineno, std::string("bad field: ") + e.what());
    }
  }
  return out;
}

Vocabulary MakeSyntheticVocabulary(const std::string& prefix, int size) {
  Vocabulary v;
  v.tokens.push_back("<blank>");
  for (int i = 1; i <= size; ++i) v.tokens.push_back(prefix + std::to_string(i));
  return v;
}

void SaveVocabulary(const std::string& path, const Vocabulary& vocab) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) Fail(ErrorKind::kIo, "cannot write " + path);
  for (const auto& tok : vocab.tokens) os << tok << '\n';
}

Vocabulary LoadVocabulary(const std::string& path) {
  std::ifstream is(path);
  if (!is) Fail(ErrorKind::kIo, "cannot open vocabulary " + path);
  Vocabulary v;
  std::string line;
  while (std::getline(is, line)) v.tokens.push_back(line);
  if (v.tokens.empty()) Fail(ErrorKind::kInvalidInput, path + ": empty vocabulary");
  return v;
}

bool IsCtcFeasible(const Sample& sample) {
  const int frames = EncoderFrames(int(sample.features.rows()));
  return ctc::MinFramesFor(sample.transcript) <= frames &&
         ctc::MinFramesFor(sample.translation) <= frames;
}

Sample Batch::Unpad(size_t i) const {
  Sample s;
  s.id = ids[i];
  s.features = features[i].topRows(frames(i));
  for (Eigen::Index j = 0; j < transcripts.cols() && transcripts(i, j) >= 0; ++j)
    s.transcript.push_back(transcripts(i, j));
  for (Eigen::Index j = 0; j < translations.cols() && translations(i, j) >= 0; ++j)
    s.translation.push_back(translations(i, j));
  return s;
}

Batch MakeBatch(const Dataset& dataset, const std::vector<size_t>& indices) {
  Batch b;
  b.indices = indices;
  Eigen::Index max_frames = 0, max_x = 0, max_y = 0, dim = 0;
  for (size_t i : indices) {
    const auto& s = dataset.at(i);
    max_frames = std::max(max_frames, s.features.rows());
    max_x = std::max<Eigen::Index>(max_x, s.transcript.size());
    max_y = std::max<Eigen::Index>(max_y, s.translation.size());
    dim = s.features.cols();
  }
  const auto n = Eigen::Index(indices.size());
  b.frame_mask.setConstant(n, max_frames, false);
  b.transcripts.setConstant(n, max_x, -1);
  b.translations.setConstant(n, max_y, -1);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& s = dataset[indices[k]];
    if (s.features.cols() != dim) {
      Fail(ErrorKind::kInvalidInput, "sample " + s.id + " has a different feature width");
    }
    b.ids.push_back(s.id);
    MatrixF padded = MatrixF::Zero(max_frames, dim);
    padded.topRows(s.features.rows()) = s.features;
    b.features.push_back(std::move(padded));
    b.frame_mask.row(k).head(s.features.rows()).setConstant(true);
    for (size_t j = 0; j < s.transcript.size(); ++j) b.transcripts(k, j) = s.transcript[j];
    for (size_t j = 0; j < s.translation.size(); ++j) b.translations(k, j) = s.translation[j];
  }
  return b;
}

std::vector<Batch> BuildBatches(const Dataset& dataset, int max_frames, BatchingStats* stats) {
  if (max_frames < 1) Fail(ErrorKind::kConfiguration, "max_frames must be >= 1");
  std::vector<Batch> batches;
  std::vector<size_t> current;
  Eigen::Index longest = 0;
  for (size_t i = 0; i < dataset.size(); ++i) {
    if (!IsCtcFeasible(dataset[i])) {
      if (stats) ++stats->dropped_infeasible;
      continue;
    }
    const Eigen::Index frames = dataset[i].features.rows();
    const Eigen::Index next_longest = std::max(longest, frames);
    if (!current.empty() && next_longest * Eigen::Index(current.size() + 1) > max_frames) {
      batches.push_back(MakeBatch(dataset, current));
      current.clear();
      longest = 0;
    }
    current.push_back(i);
    longest = std::max(longest, frames);
  }
  if (!current.empty()) batches.push_back(MakeBatch(dataset, current));
  return batches;
}

}  // namespace bilctc::data
