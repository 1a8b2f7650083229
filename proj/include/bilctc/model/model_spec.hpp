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

#ifndef BILCTC_MODEL_MODEL_SPEC_HPP_
#define BILCTC_MODEL_MODEL_SPEC_HPP_

#include <string>
#include <vector>

#include <json.hpp>

namespace bilctc::model {

// progressive: CTC reads the acoustic block output, XCTC the textual block
// output stacked on top of it. synchronous: both read the final layer.
enum class Topology { kProgressive, kSynchronous };

// CTC predicts the transcript, XCTC the translation.
enum class HeadKind { kCtc, kXctc };

// st: the decoder generates the translation. asr: it generates the
// transcript and XCTC acts as an auxiliary cross-lingual loss.
enum class Task { kSt, kAsr };

// Where CLM takes its forced alignment from: the final XCTC distribution
// (from a gradient-free pre-pass) or the tap's own distribution.
enum class ClmAlignSource { kFinal, kTap };

struct Tap {
  int layer = 0;  // 1-based encoder layer whose output is tapped
  HeadKind kind = HeadKind::kCtc;
  bool operator==(const Tap&) const = default;
};

struct ModelSpec {
  Topology topology = Topology::kSynchronous;
  Task task = Task::kSt;
  int encoder_layers = 6;   // total encoder depth
  int acoustic_layers = 4;  // progressive only; textual = encoder - acoustic
  int decoder_layers = 3;
  int hidden = 128;
  int heads = 4;
  int ffn = 512;
  int input_dim = 16;
  int src_vocab = 20;  // Vx, labels 1..Vx
  int tgt_vocab = 20;  // Vy, labels 1..Vy
  bool shared_vocab = false;
  std::vector<Tap> taps{{2, HeadKind::kCtc}, {4, HeadKind::kXctc}};
  double ctc_weight = 0.2;    // alpha
  double xctc_weight = 0.1;   // beta
  double inter_factor = 0.5;  // tap weight = factor * final weight of its kind
  bool pae_ctc = true;
  bool pae_xctc = true;
  double clm_ratio = 0.1;
  ClmAlignSource clm_align = ClmAlignSource::kFinal;
  // Taps of one kind reuse the final head's projection. Forced on for a kind
  // whose PAE is enabled.
  bool share_tap_heads = true;

  // Throws kConfiguration describing the first violated constraint.
  void Validate() const;

  bool HasHead(HeadKind kind) const;
  bool PaeEnabled(HeadKind kind) const {
    return kind == HeadKind::kCtc ? pae_ctc : pae_xctc;
  }
  double FinalWeight(HeadKind kind) const {
    return kind == HeadKind::kCtc ? ctc_weight : xctc_weight;
  }
  double TapWeight(HeadKind kind) const { return inter_factor * FinalWeight(kind); }
  // Layer whose output feeds the final head of `kind`.
  int FinalLayer(HeadKind kind) const;
  int VocabFor(HeadKind kind) const {
    return kind == HeadKind::kCtc ? src_vocab : tgt_vocab;
  }
  int DecoderVocab() const { return task == Task::kSt ? tgt_vocab : src_vocab; }
};

const char* ToString(Topology t);
const char* ToString(HeadKind k);
const char* ToString(Task t);
const char* ToString(ClmAlignSource s);
Topology ParseTopology(const std::string& s);
HeadKind ParseHeadKind(const std::string& s);
Task ParseTask(const std::string& s);
ClmAlignSource ParseClmAlignSource(const std::string& s);

// "2:ctc,4:xctc" <-> taps
std::vector<Tap> ParseTaps(const std::string& s);
// One CTC and one XCTC tap at proportional depths: layers L/3 and 2L/3 when
// synchronous; the middle of the acoustic and of the textual block when
// progressive. Taps that would not be intermediate are omitted.
std::vector<Tap> DefaultTaps(Topology topology, int encoder_layers, int acoustic_layers);
std::string FormatTaps(const std::vector<Tap>& taps);

void to_json(nlohmann::json& j, const ModelSpec& spec);
void from_json(const nlohmann::json& j, ModelSpec& spec);

}  // namespace bilctc::model

#endif  // BILCTC_MODEL_MODEL_SPEC_HPP_
