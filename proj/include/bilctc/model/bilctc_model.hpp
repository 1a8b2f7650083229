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

#ifndef BILCTC_MODEL_BILCTC_MODEL_HPP_
#define BILCTC_MODEL_BILCTC_MODEL_HPP_

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bilctc/ctc/lattice.hpp"
#include "bilctc/data/dataset.hpp"
#include "bilctc/model/model_spec.hpp"
#include "bilctc/nn/layers.hpp"
#include "bilctc/nn/parameters.hpp"
#include "bilctc/nn/tape.hpp"

namespace bilctc::model {

struct TapLoss {
  Tap tap;
  double weight = 0.0;
  double loss = 0.0;
};

// Loss components, each summed over the used samples and divided by the
// number of decoder target tokens, so that
//   total = ce + ctc_weight * ctc_final + xctc_weight * xctc_final
//           + sum(tap.weight * tap.loss).
struct LossBreakdown {
  double ce = 0.0;
  double ctc_final = 0.0;
  double xctc_final = 0.0;
  std::vector<TapLoss> taps;
  double total = 0.0;
  double ctc_weight = 0.0;
  double xctc_weight = 0.0;

  int samples_used = 0;
  int samples_skipped = 0;  // infeasible for a final head
  int tap_skips = 0;        // infeasible tap targets (sample kept)
  int clm_replaced = 0;     // frames swapped by CLM
  long tokens = 0;

  bool batch_skipped() const { return samples_used == 0; }
  double Recombine() const;
  nlohmann::json ToJson() const;
};

struct LossOptions {
  bool training = false;  // enables dropout and CLM
  double dropout = 0.0;
  double label_smoothing = 0.1;
  uint64_t seed = 0;  // per-sample dropout / CLM streams derive from (seed, position)
  bool compute_gradients = false;
  // Optional precomputed CLM alignments, one per batch entry.
  const std::vector<std::optional<ctc::AlignmentPath>>* clm_alignments = nullptr;
};

// Encoder-decoder with transcript (CTC) and translation (XCTC) heads.
template <typename Scalar>
class BilCtcModel {
 public:
  using Mat = Matrix<Scalar>;

  BilCtcModel(const ModelSpec& spec, uint64_t init_seed);
  // Adopts existing parameters; names and shapes must match `spec`.
  BilCtcModel(const ModelSpec& spec, nn::ParameterStore<Scalar> params);

  const ModelSpec& spec() const { return spec_; }
  nn::ParameterStore<Scalar>& params() { return params_; }
  const nn::ParameterStore<Scalar>& params() const { return params_; }

  struct ClmInput {
    const LabelSequence* translation = nullptr;
    // Used when set; otherwise each XCTC tap aligns against its own output.
    const ctc::AlignmentPath* alignment = nullptr;
    double ratio = 0.0;
    std::mt19937_64* rng = nullptr;
  };

  struct Encoding {
    nn::Var states;       // decoder memory
    nn::Var ctc_logits;   // final transcript head, if its weight > 0
    nn::Var xctc_logits;  // final translation head, if its weight > 0
    std::vector<std::pair<Tap, nn::Var>> tap_logits;
    int clm_replaced = 0;
  };

  // Stacks frame pairs, runs the encoder with taps, PAE and (when `clm` is
  // given) CLM mixing on XCTC taps.
  Encoding Encode(nn::Tape<Scalar>& tape, const MatrixF& features,
                  const nn::ForwardContext& ctx, const ClmInput* clm = nullptr);

  // Logits for every position of `inputs` (which start with kEos as BOS).
  nn::Var DecoderLogits(nn::Tape<Scalar>& tape, nn::Var memory, const std::vector<int>& inputs,
                        const nn::ForwardContext& ctx);

  // Joint objective over a batch; accumulates into params().grad when requested.
  LossBreakdown TotalLoss(const data::Batch& batch, const LossOptions& options);

  // Gradient-free, dropout-free views for decoding and alignment.
  struct Inference {
    Mat states;
    std::optional<ctc::LogProbMatrix> ctc;
    std::optional<ctc::LogProbMatrix> xctc;
    std::vector<std::pair<Tap, ctc::LogProbMatrix>> taps;
  };
  Inference Infer(const MatrixF& features) const;

  // Log-distribution over the decoder vocabulary (index 0 = end of sequence)
  // for the token following `prefix`.
  Eigen::VectorXd NextTokenLogProbs(const Mat& states, const LabelSequence& prefix) const;
  // log P(sequence, EOS | states) under teacher forcing, no smoothing.
  double SequenceLogProb(const Mat& states, const LabelSequence& sequence) const;

  // Target the decoder generates for this sample.
  const LabelSequence& DecoderTarget(const data::Sample& s) const {
    return spec_.task == Task::kSt ? s.translation : s.transcript;
  }

 private:
  void Build(std::mt19937_64& rng);
  const nn::Linear& HeadFor(HeadKind kind, int tap_layer) const;

  ModelSpec spec_;
  nn::ParameterStore<Scalar> params_;
  nn::Linear input_proj_;
  std::vector<nn::EncoderLayer> encoder_;
  nn::Embedding embed_;
  std::vector<nn::DecoderLayer> decoder_;
  nn::Linear output_proj_;
  std::optional<nn::Linear> ctc_head_;
  std::optional<nn::Linear> xctc_head_;
  std::vector<std::pair<Tap, nn::Linear>> tap_heads_;  // only when not shared
};

extern template class BilCtcModel<float>;
extern template class BilCtcModel<double>;

// Frame-pair stacking: row t is [f(2t), f(2t+1)], zero-padded at the end.
MatrixF StackFramePairs(const MatrixF& features);

}  // namespace bilctc::model

#endif  // BILCTC_MODEL_BILCTC_MODEL_HPP_
