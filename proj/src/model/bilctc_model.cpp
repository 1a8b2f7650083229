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

#include "bilctc/model/bilctc_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "bilctc/model/pae_clm.hpp"
#include "bilctc/nn/losses.hpp"
#include "bilctc/nn/ops.hpp"

namespace bilctc::model {

using nn::Var;

double LossBreakdown::Recombine() const {
  double sum = ce + ctc_weight * ctc_final + xctc_weight * xctc_final;
  for (const auto& tap : taps) sum += tap.weight * tap.loss;
  return sum;
}

nlohmann::json LossBreakdown::ToJson() const {
  nlohmann::json j{{"ce", ce},
                   {"ctc", ctc_final},
                   {"xctc", xctc_final},
                   {"total", total},
                   {"samples", samples_used},
                   {"skipped", samples_skipped},
                   {"tokens", tokens}};
  auto taps_json = nlohmann::json::array();
  for (const auto& tap : taps) {
    taps_json.push_back({{"layer", tap.tap.layer},
                         {"kind", ToString(tap.tap.kind)},
                         {"weight", tap.weight},
                         {"loss", tap.loss}});
  }
  j["taps"] = std::move(taps_json);
  if (tap_skips) j["tap_skips"] = tap_skips;
  if (clm_replaced) j["clm_replaced"] = clm_replaced;
  return j;
}

MatrixF StackFramePairs(const MatrixF& features) {
  const Eigen::Index frames = (features.rows() + 1) / 2;
  const Eigen::Index dim = features.cols();
  MatrixF out = MatrixF::Zero(frames, 2 * dim);
  for (Eigen::Index t = 0; t < features.rows(); ++t) {
    out.row(t / 2).segment((t % 2) * dim, dim) = features.row(t);
  }
  return out;
}

template <typename Scalar>
BilCtcModel<Scalar>::BilCtcModel(const ModelSpec& spec, uint64_t init_seed) : spec_(spec) {
  spec_.Validate();
  std::mt19937_64 rng(init_seed);
  Build(rng);
}

template <typename Scalar>
BilCtcModel<Scalar>::BilCtcModel(const ModelSpec& spec, nn::ParameterStore<Scalar> params)
    : spec_(spec) {
  spec_.Validate();
  std::mt19937_64 rng(0);
  Build(rng);
  std::vector<std::string> problems;
  for (const auto& p : params_.params()) {
    if (!params.Contains(p.name)) {
      problems.push_back(p.name + " (missing)");
      continue;
    }
    const auto& q = params.Get(p.name);
    if (q.value.rows() != p.value.rows() || q.value.cols() != p.value.cols()) {
      problems.push_back(p.name + " (shape " + std::to_string(q.value.rows()) + "x" +
                         std::to_string(q.value.cols()) + ", expected " +
                         std::to_string(p.value.rows()) + "x" +
                         std::to_string(p.value.cols()) + ")");
    }
  }
  for (const auto& q : params.params()) {
    if (!params_.Contains(q.name)) problems.push_back(q.name + " (unexpected)");
  }
  if (!problems.empty()) {
    std::string msg = "parameters do not match the model spec:";
    for (const auto& p : problems) msg += " " + p;
    Fail(ErrorKind::kConfiguration, msg);
  }
  // Keep the canonical order of Build().
  nn::ParameterStore<Scalar> ordered;
  for (const auto& p : params_.params()) ordered.Add(p.name, params.Get(p.name).value);
  ordered.step = params.step;
  params_ = std::move(ordered);
}

template <typename Scalar>
void BilCtcModel<Scalar>::Build(std::mt19937_64& rng) {
  const int h = spec_.hidden;
  input_proj_ = nn::Linear::Create(params_, "enc.input_proj", 2 * spec_.input_dim, h, rng);
  for (int l = 1; l <= spec_.encoder_layers; ++l) {
    encoder_.push_back(nn::EncoderLayer::Create(params_, "enc.layer" + std::to_string(l), h,
                                                spec_.heads, spec_.ffn, rng));
  }
  embed_ = nn::Embedding::Create(params_, "dec.embed", spec_.DecoderVocab() + 1, h, rng);
  for (int l = 1; l <= spec_.decoder_layers; ++l) {
    decoder_.push_back(nn::DecoderLayer::Create(params_, "dec.layer" + std::to_string(l), h,
                                                spec_.heads, spec_.ffn, rng));
  }
  output_proj_ = nn::Linear::Create(params_, "dec.output_proj", h, spec_.DecoderVocab() + 1, rng);
  if (spec_.HasHead(HeadKind::kCtc)) {
    ctc_head_ = nn::Linear::Create(params_, "head.ctc", h, spec_.src_vocab + 1, rng);
  }
  if (spec_.HasHead(HeadKind::kXctc)) {
    xctc_head_ = nn::Linear::Create(params_, "head.xctc", h, spec_.tgt_vocab + 1, rng);
  }
  for (const auto& tap : spec_.taps) {
    if (spec_.share_tap_heads || spec_.PaeEnabled(tap.kind)) continue;
    tap_heads_.emplace_back(
        tap, nn::Linear::Create(params_,
                                std::string("head.") + ToString(tap.kind) + ".tap" +
                                    std::to_string(tap.layer),
                                h, spec_.VocabFor(tap.kind) + 1, rng));
  }
}

template <typename Scalar>
const nn::Linear& BilCtcModel<Scalar>::HeadFor(HeadKind kind, int tap_layer) const {
  for (const auto& [tap, head] : tap_heads_) {
    if (tap.layer == tap_layer && tap.kind == kind) return head;
  }
  return kind == HeadKind::kCtc ? *ctc_head_ : *xctc_head_;
}

template <typename Scalar>
typename BilCtcModel<Scalar>::Encoding BilCtcModel<Scalar>::Encode(
    nn::Tape<Scalar>& t, const MatrixF& features, const nn::ForwardContext& ctx,
    const ClmInput* clm) {
  if (features.cols() != spec_.input_dim) {
    Fail(ErrorKind::kConfiguration, "feature width " + std::to_string(features.cols()) +
                                        " differs from input_dim " +
                                        std::to_string(spec_.input_dim));
  }
  const Mat stacked = StackFramePairs(features).template cast<Scalar>();
  const auto frames = static_cast<int>(stacked.rows());
  Var h = input_proj_.Forward(t, params_, t.Constant(stacked));
  h = nn::Add(t, h, t.Constant(nn::SinusoidalPositionEncoding<Scalar>(frames, spec_.hidden)));
  h = nn::Dropout(t, h, ctx.dropout, ctx.rng);

  Encoding enc;
  for (int l = 1; l <= spec_.encoder_layers; ++l) {
    h = encoder_[l - 1].Forward(t, params_, h, ctx);
    if (spec_.topology == Topology::kProgressive && l == spec_.acoustic_layers &&
        spec_.ctc_weight > 0.0) {
      enc.ctc_logits = ctc_head_->Forward(t, params_, h);
    }
    Var injected = h;  // taps at this layer all read the un-injected states
    for (const auto& tap : spec_.taps) {
      if (tap.layer != l) continue;
      const nn::Linear& head = HeadFor(tap.kind, tap.layer);
      const Var logits = head.Forward(t, params_, h);
      enc.tap_logits.emplace_back(tap, logits);
      if (!spec_.PaeEnabled(tap.kind)) continue;
      Var probs = nn::SoftmaxRows(t, logits);
      if (tap.kind == HeadKind::kXctc && clm && clm->ratio > 0.0 && clm->translation) {
        std::optional<ctc::AlignmentPath> own;
        const ctc::AlignmentPath* aligned = clm->alignment;
        if (!aligned) {
          try {
            const auto dist =
                ctc::LogProbMatrix::FromLogits(t.value(logits).template cast<double>());
            own = ctc::ForcedAlign(dist, *clm->translation).path;
            aligned = &*own;
          } catch (const Error& e) {
            if (e.kind() != ErrorKind::kInfeasibleTarget) throw;
          }
        }
        if (aligned) {
          auto mix = ClmMix<Scalar>(t.value(probs), *aligned, clm->ratio, *clm->rng);
          if (mix.count > 0) probs = nn::ReplaceRows(t, probs, mix.replaced, mix.one_hot);
          enc.clm_replaced += mix.count;
        }
      }
      const Var projection = t.Param(params_.Get(head.weight));
      injected = PaeInject(t, injected, probs, projection);
    }
    h = injected;
  }
  if (spec_.topology == Topology::kSynchronous && spec_.ctc_weight > 0.0) {
    enc.ctc_logits = ctc_head_->Forward(t, params_, h);
  }
  if (spec_.xctc_weight > 0.0) enc.xctc_logits = xctc_head_->Forward(t, params_, h);
  enc.states = h;
  return enc;
}

template <typename Scalar>
Var BilCtcModel<Scalar>::DecoderLogits(nn::Tape<Scalar>& t, Var memory,
                                       const std::vector<int>& inputs,
                                       const nn::ForwardContext& ctx) {
  const auto len = static_cast<int>(inputs.size());
  Var x = nn::Scale(t, embed_.Forward(t, params_, inputs),
                    Scalar(std::sqrt(double(spec_.hidden))));
  x = nn::Add(t, x, t.Constant(nn::SinusoidalPositionEncoding<Scalar>(len, spec_.hidden)));
  x = nn::Dropout(t, x, ctx.dropout, ctx.rng);
  for (const auto& layer : decoder_) x = layer.Forward(t, params_, x, memory, ctx);
  return output_proj_.Forward(t, params_, x);
}

template <typename Scalar>
LossBreakdown BilCtcModel<Scalar>::TotalLoss(const data::Batch& batch,
                                             const LossOptions& options) {
  LossBreakdown out;
  out.ctc_weight = spec_.ctc_weight;
  out.xctc_weight = spec_.xctc_weight;
  for (const auto& tap : spec_.taps) out.taps.push_back({tap, spec_.TapWeight(tap.kind), 0.0});

  // Decide which samples the final heads can score, and the token count.
  std::vector<data::Sample> samples;
  std::vector<bool> usable;
  for (size_t i = 0; i < batch.size(); ++i) {
    samples.push_back(batch.Unpad(i));
    const auto& s = samples.back();
    const int frames = data::EncoderFrames(int(s.features.rows()));
    bool ok = true;
    if (spec_.ctc_weight > 0.0) ok = ok && ctc::MinFramesFor(s.transcript) <= frames;
    if (spec_.xctc_weight > 0.0) ok = ok && ctc::MinFramesFor(s.translation) <= frames;
    usable.push_back(ok);
    if (ok) {
      out.tokens += long(DecoderTarget(s).size()) + 1;
      ++out.samples_used;
    } else {
      ++out.samples_skipped;
    }
  }
  if (out.samples_used == 0) return out;
  const double norm = double(out.tokens);

  const bool clm_active = options.training && spec_.clm_ratio > 0.0 && spec_.pae_xctc &&
                          std::any_of(spec_.taps.begin(), spec_.taps.end(), [](const Tap& t) {
                            return t.kind == HeadKind::kXctc;
                          });

  for (size_t i = 0; i < samples.size(); ++i) {
    if (!usable[i]) continue;
    const auto& s = samples[i];
    std::seed_seq drop_seq{options.seed, uint64_t(i), uint64_t(1)};
    std::seed_seq clm_seq{options.seed, uint64_t(i), uint64_t(2)};
    std::mt19937_64 drop_rng(drop_seq), clm_rng(clm_seq);
    nn::ForwardContext ctx;
    if (options.training && options.dropout > 0.0) {
      ctx.dropout = options.dropout;
      ctx.rng = &drop_rng;
    }

    std::optional<ctc::AlignmentPath> alignment;
    ClmInput clm;
    if (clm_active) {
      clm.translation = &s.translation;
      clm.ratio = spec_.clm_ratio;
      clm.rng = &clm_rng;
      if (options.clm_alignments) {
        alignment = options.clm_alignments->at(i);
      } else if (spec_.clm_align == ClmAlignSource::kFinal && spec_.xctc_weight > 0.0) {
        // Alignment of the current parameters, outside the gradient tape.
        const auto view = Infer(s.features);
        try {
          alignment = ctc::ForcedAlign(*view.xctc, s.translation).path;
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::kInfeasibleTarget) throw;
        }
      }
      if (alignment) clm.alignment = &*alignment;
      // Without a final-head alignment fall back to per-tap alignment, unless
      // the final head was requested and proved infeasible.
      if (!alignment && spec_.clm_align == ClmAlignSource::kFinal &&
          spec_.xctc_weight > 0.0) {
        clm.translation = nullptr;
      }
    }

    nn::Tape<Scalar> t(options.compute_gradients);
    const Encoding enc = Encode(t, s.features, ctx, clm_active ? &clm : nullptr);
    out.clm_replaced += enc.clm_replaced;

    const auto& target = DecoderTarget(s);
    std::vector<int> dec_in{kEos};
    dec_in.insert(dec_in.end(), target.begin(), target.end());
    std::vector<int> dec_out(target.begin(), target.end());
    dec_out.push_back(kEos);
    const Var logits = DecoderLogits(t, enc.states, dec_in, ctx);

    std::vector<Var> terms;
    std::vector<Scalar> weights;
    const Var ce = nn::SmoothedCrossEntropy(t, logits, dec_out, options.label_smoothing,
                                            nn::Reduction::kSum);
    terms.push_back(ce);
    weights.push_back(Scalar(1.0 / norm));
    out.ce += double(t.value(ce)(0, 0));

    if (spec_.ctc_weight > 0.0) {
      const Var l = nn::CtcLoss(t, enc.ctc_logits, s.transcript);
      terms.push_back(l);
      weights.push_back(Scalar(spec_.ctc_weight / norm));
      out.ctc_final += double(t.value(l)(0, 0));
    }
    if (spec_.xctc_weight > 0.0) {
      const Var l = nn::CtcLoss(t, enc.xctc_logits, s.translation);
      terms.push_back(l);
      weights.push_back(Scalar(spec_.xctc_weight / norm));
      out.xctc_final += double(t.value(l)(0, 0));
    }
    for (size_t k = 0; k < enc.tap_logits.size(); ++k) {
      const auto& [tap, tap_logits] = enc.tap_logits[k];
      const auto& tap_target = tap.kind == HeadKind::kCtc ? s.transcript : s.translation;
      try {
        const Var l = nn::CtcLoss(t, tap_logits, tap_target);
        terms.push_back(l);
        weights.push_back(Scalar(spec_.TapWeight(tap.kind) / norm));
        out.taps[k].loss += double(t.value(l)(0, 0));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kInfeasibleTarget) throw;
        ++out.tap_skips;
      }
    }
    if (options.compute_gradients) t.Backward(nn::WeightedSum(t, terms, weights));
  }

  out.ce /= norm;
  out.ctc_final /= norm;
  out.xctc_final /= norm;
  for (auto& tap : out.taps) tap.loss /= norm;
  out.total = out.Recombine();
  return out;
}

template <typename Scalar>
typename BilCtcModel<Scalar>::Inference BilCtcModel<Scalar>::Infer(
    const MatrixF& features) const {
  // A gradient-free tape never writes to parameters.
  auto& self = const_cast<BilCtcModel&>(*this);
  nn::Tape<Scalar> t(false);
  const Encoding enc = self.Encode(t, features, nn::ForwardContext{});
  Inference out;
  out.states = t.value(enc.states);
  auto to_dist = [&](Var v) {
    return ctc::LogProbMatrix::FromLogits(t.value(v).template cast<double>());
  };
  if (enc.ctc_logits.valid()) out.ctc = to_dist(enc.ctc_logits);
  if (enc.xctc_logits.valid()) out.xctc = to_dist(enc.xctc_logits);
  for (const auto& [tap, logits] : enc.tap_logits) out.taps.emplace_back(tap, to_dist(logits));
  return out;
}

template <typename Scalar>
Eigen::VectorXd BilCtcModel<Scalar>::NextTokenLogProbs(const Mat& states,
                                                       const LabelSequence& prefix) const {
  auto& self = const_cast<BilCtcModel&>(*this);
  nn::Tape<Scalar> t(false);
  std::vector<int> inputs{kEos};
  inputs.insert(inputs.end(), prefix.begin(), prefix.end());
  const Var logits = self.DecoderLogits(t, t.Constant(states), inputs, nn::ForwardContext{});
  const auto& all = t.value(logits);
  const Eigen::RowVectorXd last = all.row(all.rows() - 1).template cast<double>();
  return (last.array() - LogSumExp(last)).matrix().transpose();
}

template <typename Scalar>
double BilCtcModel<Scalar>::SequenceLogProb(const Mat& states,
                                            const LabelSequence& sequence) const {
  auto& self = const_cast<BilCtcModel&>(*this);
  nn::Tape<Scalar> t(false);
  std::vector<int> inputs{kEos};
  inputs.insert(inputs.end(), sequence.begin(), sequence.end());
  const Var logits = self.DecoderLogits(t, t.Constant(states), inputs, nn::ForwardContext{});
  const MatrixD logp = bilctc::LogSoftmaxRows<double>(t.value(logits).template cast<double>());
  double total = 0.0;
  for (size_t i = 0; i < sequence.size(); ++i) total += logp(Eigen::Index(i), sequence[i]);
  return total + logp(Eigen::Index(sequence.size()), kEos);
}

template class BilCtcModel<float>;
template class BilCtcModel<double>;

}  // namespace bilctc::model
