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

#ifndef BILCTC_DATA_DATASET_HPP_
#define BILCTC_DATA_DATASET_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "bilctc/common.hpp"

namespace bilctc::data {

// One (features, transcript, translation) triple. Features are T0 x d_in.
struct Sample {
  std::string id;
  MatrixF features;
  LabelSequence transcript;
  LabelSequence translation;
};

using Dataset = std::vector<Sample>;

enum class Substitution { kIdentity, kContext };

struct SyntheticTaskSpec {
  int src_vocab = 20;
  int tgt_vocab = 20;
  int min_len = 4;
  int max_len = 12;
  int upsample = 4;     // feature frames per transcript symbol
  int input_dim = 16;
  double noise = 0.1;   // feature noise std, relative to unit-variance symbol embeddings
  int window = 3;       // reversal window width
  Substitution substitution = Substitution::kContext;
  // Monotone identity-like targets: forces window 1 and identity substitution.
  bool easy_target = false;
  uint64_t seed = 1;

  void Validate() const;
};

const char* ToString(Substitution s);
Substitution ParseSubstitution(const std::string& s);
void to_json(nlohmann::json& j, const SyntheticTaskSpec& spec);
void from_json(const nlohmann::json& j, SyntheticTaskSpec& spec);

// Reverses each non-overlapping window of the transcript, then maps symbol k
// to (k + previous symbol) mod Vy, where symbols are 0-based and the
// previous symbol of the first position is 0.
LabelSequence TranslateTranscript(const LabelSequence& transcript,
                                  const SyntheticTaskSpec& spec);

// Samples with global indices [first_index, first_index + n), ids
// "<prefix>-<index>". Each sample depends only on (spec, its index).
Dataset Generate(const SyntheticTaskSpec& spec, int n, const std::string& prefix = "sample",
                 int first_index = 0);

struct Splits {
  Dataset train, dev, test;
};
// Disjoint index ranges, so ids and contents never overlap.
Splits GenerateSplits(const SyntheticTaskSpec& spec, int n_train, int n_dev, int n_test);

// JSONL, one record per line:
//   {"id": str, "frames": T0, "dim": d_in,
//    "features": [[float x d_in] x T0],
//    "transcript": [int...], "translation": [int...]}
// Label ids index the vocabulary files; 0 is reserved and never appears.
void SaveJsonl(const std::string& path, const Dataset& dataset);
Dataset LoadJsonl(const std::string& path);

// One token per line; the token's index is its 0-based line number. Line 0
// holds the reserved blank / sentence-boundary symbol.
struct Vocabulary {
  std::vector<std::string> tokens;
  int size() const { return static_cast<int>(tokens.size()) - 1; }  // excludes index 0
};
Vocabulary MakeSyntheticVocabulary(const std::string& prefix, int size);
void SaveVocabulary(const std::string& path, const Vocabulary& vocab);
Vocabulary LoadVocabulary(const std::string& path);

// Frames the encoder sees after 2x frame stacking.
inline int EncoderFrames(int input_frames) { return (input_frames + 1) / 2; }

// Both CTC targets fit into the encoder frames.
bool IsCtcFeasible(const Sample& sample);

// Zero-padded batch. Masks are true on real entries; padded label slots hold -1.
struct Batch {
  std::vector<size_t> indices;  // positions in the source dataset
  std::vector<std::string> ids;
  std::vector<MatrixF> features;  // each max_frames x d_in
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> frame_mask;
  Eigen::MatrixXi transcripts;
  Eigen::MatrixXi translations;

  size_t size() const { return indices.size(); }
  int frames(size_t i) const { return static_cast<int>(frame_mask.row(i).count()); }
  // Strips the padding of entry i.
  Sample Unpad(size_t i) const;
};

struct BatchingStats {
  size_t dropped_infeasible = 0;
};

// Packs samples in dataset order while batch_size * longest_input stays
// within max_frames (a single longer sample gets its own batch). Samples
// with infeasible CTC targets are dropped.
std::vector<Batch> BuildBatches(const Dataset& dataset, int max_frames,
                                BatchingStats* stats = nullptr);
Batch MakeBatch(const Dataset& dataset, const std::vector<size_t>& indices);

}  // namespace bilctc::data

#endif  // BILCTC_DATA_DATASET_HPP_
