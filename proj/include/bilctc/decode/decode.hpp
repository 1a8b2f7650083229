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

#ifndef BILCTC_DECODE_DECODE_HPP_
#define BILCTC_DECODE_DECODE_HPP_

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "bilctc/ctc/lattice.hpp"
#include "bilctc/ctc/prefix_score.hpp"
#include "bilctc/model/bilctc_model.hpp"

namespace bilctc::decode {

enum class Mode { kCtcGreedy, kCtcPrefixBeam, kAttnOnly, kRescoring, kTwoPass };

// Which CTC heads score translation hypotheses during rescoring. kBoth
// averages the transcript and translation heads and needs a shared vocabulary.
enum class RescoreHeads { kMatching, kBoth };

struct DecodeConfig {
  Mode mode = Mode::kAttnOnly;
  int beam = 5;
  double ctc_weight = 0.1;  // lambda
  // Output length cap, as a multiple of the encoder frame count.
  double max_length_factor = 1.5;
  bool length_normalize = true;
  RescoreHeads heads = RescoreHeads::kMatching;

  void Validate() const;
};

void to_json(nlohmann::json& j, const DecodeConfig& c);
void from_json(const nlohmann::json& j, DecodeConfig& c);

const char* ToString(Mode m);
Mode ParseMode(const std::string& s);
const char* ToString(RescoreHeads h);
RescoreHeads ParseRescoreHeads(const std::string& s);

struct ScoredSequence {
  LabelSequence tokens;
  double log_prob = kLogZero;
};

// Per-frame argmax (lowest class on ties), then collapse.
LabelSequence CtcGreedy(const ctc::LogProbMatrix& probs);

// Prefix beam search over label-sequence posteriors. Returns up to `beam`
// sequences with their marginal log probabilities, best first.
std::vector<ScoredSequence> CtcPrefixBeam(const ctc::LogProbMatrix& probs, int beam);

// Next-token log distribution of an autoregressive decoder over V+1
// entries; index 0 is the end of the sequence.
class AttentionScorer {
 public:
  virtual ~AttentionScorer() = default;
  virtual int vocab_size() const = 0;
  virtual Eigen::VectorXd NextLogProbs(const LabelSequence& prefix) const = 0;
};

template <typename Scalar>
class ModelAttentionScorer : public AttentionScorer {
 public:
  ModelAttentionScorer(const model::BilCtcModel<Scalar>& model, Matrix<Scalar> states)
      : model_(model), states_(std::move(states)) {}
  int vocab_size() const override { return model_.spec().DecoderVocab(); }
  Eigen::VectorXd NextLogProbs(const LabelSequence& prefix) const override {
    return model_.NextTokenLogProbs(states_, prefix);
  }

 private:
  const model::BilCtcModel<Scalar>& model_;
  Matrix<Scalar> states_;
};

struct Hypothesis {
  LabelSequence prefix;
  double attn_logscore = 0.0;  // summed, including the end symbol once finished
  double ctc_logscore = 0.0;   // prefix score, full likelihood once finished
  std::vector<ctc::PrefixState> ctc_states;  // one per scoring head
  double fused = 0.0;          // ranking score, see FusedScore
  bool finished = false;
};

// lambda * ctc + (1 - lambda) * attn, where attn is divided by the number of
// scored tokens (end symbol included) when normalizing. Terms whose weight is
// zero are dropped, so -inf on the unused side never leaks in.
double FusedScore(double attn_logscore, double ctc_logscore, int scored_tokens, double lambda,
                  bool length_normalize);

// One-pass beam search over an attention scorer, optionally fused with CTC
// prefix scores of `ctc_heads` (averaged). With no heads this is plain
// attention beam search. Returns finished hypotheses best first; when none
// finished, the best unfinished one (finished == false).
std::vector<Hypothesis> BeamSearch(const AttentionScorer& attn,
                                   const std::vector<const ctc::LogProbMatrix*>& ctc_heads,
                                   const DecodeConfig& config, int max_length);

// Attention n-best, each re-ranked with lambda * full CTC likelihood.
std::vector<Hypothesis> TwoPassRescore(const AttentionScorer& attn,
                                       const std::vector<const ctc::LogProbMatrix*>& ctc_heads,
                                       const DecodeConfig& config, int max_length);

int MaxOutputLength(const DecodeConfig& config, int encoder_frames);

// Decodes one utterance in the language the model's decoder emits (the
// translation for st, the transcript for asr). Returns the n-best list; CTC
// modes fill attn_logscore with 0.
template <typename Scalar>
std::vector<Hypothesis> DecodeUtterance(const model::BilCtcModel<Scalar>& model,
                                        const MatrixF& features, const DecodeConfig& config);

struct NBestRecord {
  std::string utt;
  int rank = 0;
  double fused = 0.0;
  double attn = 0.0;
  double ctc = 0.0;
  bool finished = true;
  LabelSequence tokens;
};
void to_json(nlohmann::json& j, const NBestRecord& r);
void from_json(const nlohmann::json& j, NBestRecord& r);

std::vector<NBestRecord> ToRecords(const std::string& utt, const std::vector<Hypothesis>& hyps);
void WriteNBest(const std::string& path, const std::vector<NBestRecord>& records);
std::vector<NBestRecord> ReadNBest(const std::string& path);

}  // namespace bilctc::decode

#endif  // BILCTC_DECODE_DECODE_HPP_
