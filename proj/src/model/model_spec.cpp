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

#include "bilctc/model/model_spec.hpp"

#include <sstream>

#include "bilctc/common.hpp"

namespace bilctc::model {
namespace {

void Require(bool ok, const std::string& msg) {
  if (!ok) Fail(ErrorKind::kConfiguration, msg);
}

}  // namespace

bool ModelSpec::HasHead(HeadKind kind) const {
  if (FinalWeight(kind) > 0.0) return true;
  for (const auto& tap : taps)
    if (tap.kind == kind) return true;
  return false;
}

int ModelSpec::FinalLayer(HeadKind kind) const {
  if (topology == Topology::kProgressive && kind == HeadKind::kCtc) return acoustic_layers;
  return encoder_layers;
}

void ModelSpec::Validate() const {
  Require(encoder_layers >= 1, "encoder_layers must be >= 1");
  Require(decoder_layers >= 1, "decoder_layers must be >= 1");
  Require(hidden >= 1 && heads >= 1 && hidden % heads == 0,
          "hidden size must be a positive multiple of heads");
  Require(ffn >= 1 && input_dim >= 1, "ffn and input_dim must be positive");
  Require(src_vocab >= 1 && tgt_vocab >= 1, "vocabularies must be non-empty");
  Require(!shared_vocab || src_vocab == tgt_vocab,
          "shared_vocab requires src_vocab == tgt_vocab");
  Require(ctc_weight >= 0.0 && xctc_weight >= 0.0 && inter_factor >= 0.0,
          "loss weights must be non-negative");
  Require(clm_ratio >= 0.0 && clm_ratio <= 1.0, "clm_ratio must lie in [0, 1]");
  if (topology == Topology::kProgressive) {
    Require(acoustic_layers >= 1 && acoustic_layers < encoder_layers,
            "progressive topology needs 1 <= acoustic_layers < encoder_layers");
  }
  for (size_t i = 0; i < taps.size(); ++i) {
    const Tap& tap = taps[i];
    std::ostringstream where;
    where << "tap " << tap.layer << ":" << ToString(tap.kind);
    Require(tap.layer >= 1 && tap.layer <= encoder_layers,
            where.str() + " exceeds the encoder depth " + std::to_string(encoder_layers));
    Require(tap.layer < encoder_layers,
            where.str() + " sits on the final layer; taps must be intermediate");
    for (size_t j = 0; j < i; ++j) {
      Require(!(taps[j] == tap), where.str() + " is listed twice");
    }
    if (topology == Topology::kProgressive) {
      if (tap.kind == HeadKind::kCtc) {
        Require(tap.layer < acoustic_layers,
                where.str() + ": CTC taps must lie inside the acoustic encoder (layers 1.." +
                    std::to_string(acoustic_layers - 1) + ")");
      } else {
        Require(tap.layer > acoustic_layers,
                where.str() + ": XCTC taps must lie inside the textual encoder (layers " +
                    std::to_string(acoustic_layers + 1) + ".." +
                    std::to_string(encoder_layers - 1) + ")");
      }
    }
  }
}

const char* ToString(Topology t) {
  return t == Topology::kProgressive ? "progressive" : "synchronous";
}
const char* ToString(HeadKind k) { return k == HeadKind::kCtc ? "ctc" : "xctc"; }
const char* ToString(Task t) { return t == Task::kSt ? "st" : "asr"; }
const char* ToString(ClmAlignSource s) { return s == ClmAlignSource::kFinal ? "final" : "tap"; }

Topology ParseTopology(const std::string& s) {
  if (s == "progressive") return Topology::kProgressive;
  if (s == "synchronous") return Topology::kSynchronous;
  Fail(ErrorKind::kConfiguration, "unknown topology '" + s + "'");
}
HeadKind ParseHeadKind(const std::string& s) {
  if (s == "ctc") return HeadKind::kCtc;
  if (s == "xctc") return HeadKind::kXctc;
  Fail(ErrorKind::kConfiguration, "unknown head kind '" + s + "'");
}
Task ParseTask(const std::string& s) {
  if (s == "st") return Task::kSt;
  if (s == "asr") return Task::kAsr;
  Fail(ErrorKind::kConfiguration, "unknown task '" + s + "'");
}
ClmAlignSource ParseClmAlignSource(const std::string& s) {
  if (s == "final") return ClmAlignSource::kFinal;
  if (s == "tap") return ClmAlignSource::kTap;
  Fail(ErrorKind::kConfiguration, "unknown clm alignment source '" + s + "'");
}

std::vector<Tap> ParseTaps(const std::string& s) {
  std::vector<Tap> taps;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      Fail(ErrorKind::kConfiguration, "tap '" + item + "' is not of the form layer:kind");
    }
    Tap tap;
    try {
      tap.layer = std::stoi(item.substr(0, colon));
    } catch (const std::exception&) {
      Fail(ErrorKind::kConfiguration, "tap '" + item + "' has a non-numeric layer");
    }
    auto kind = item.substr(colon + 1);
    kind.erase(0, kind.find_first_not_of(" \t"));
    kind.erase(kind.find_last_not_of(" \t") + 1);
    tap.kind = ParseHeadKind(kind);
    taps.push_back(tap);
  }
  return taps;
}

std::vector<Tap> DefaultTaps(Topology topology, int encoder_layers, int acoustic_layers) {
  std::vector<Tap> taps;
  int ctc_layer, xctc_layer;
  if (topology == Topology::kSynchronous) {
    ctc_layer = encoder_layers / 3;
    xctc_layer = 2 * encoder_layers / 3;
    if (ctc_layer >= 1 && ctc_layer < encoder_layers) taps.push_back({ctc_layer, HeadKind::kCtc});
  } else {
    ctc_layer = (acoustic_layers + 1) / 2;
    xctc_layer = acoustic_layers + (encoder_layers - acoustic_layers + 1) / 2;
    if (ctc_layer < acoustic_layers) taps.push_back({ctc_layer, HeadKind::kCtc});
  }
  if (xctc_layer >= 1 && xctc_layer < encoder_layers && xctc_layer != ctc_layer &&
      (topology == Topology::kSynchronous || xctc_layer > acoustic_layers)) {
    taps.push_back({xctc_layer, HeadKind::kXctc});
  }
  return taps;
}

std::string FormatTaps(const std::vector<Tap>& taps) {
  std::string out;
  for (const auto& tap : taps) {
    if (!out.empty()) out += ",";
    out += std::to_string(tap.layer) + ":" + ToString(tap.kind);
  }
  return out;
}

void to_json(nlohmann::json& j, const ModelSpec& s) {
  j = nlohmann::json{{"topology", ToString(s.topology)},
                     {"task", ToString(s.task)},
                     {"encoder_layers", s.encoder_layers},
                     {"acoustic_layers", s.acoustic_layers},
                     {"decoder_layers", s.decoder_layers},
                     {"hidden", s.hidden},
                     {"heads", s.heads},
                     {"ffn", s.ffn},
                     {"input_dim", s.input_dim},
                     {"src_vocab", s.src_vocab},
                     {"tgt_vocab", s.tgt_vocab},
                     {"shared_vocab", s.shared_vocab},
                     {"taps", FormatTaps(s.taps)},
                     {"ctc_weight", s.ctc_weight},
                     {"xctc_weight", s.xctc_weight},
                     {"inter_factor", s.inter_factor},
                     {"pae_ctc", s.pae_ctc},
                     {"pae_xctc", s.pae_xctc},
                     {"clm_ratio", s.clm_ratio},
                     {"clm_align", ToString(s.clm_align)},
                     {"share_tap_heads", s.share_tap_heads}};
}

void from_json(const nlohmann::json& j, ModelSpec& s) {
  s.topology = ParseTopology(j.at("topology").get<std::string>());
  s.task = ParseTask(j.at("task").get<std::string>());
  j.at("encoder_layers").get_to(s.encoder_layers);
  j.at("acoustic_layers").get_to(s.acoustic_layers);
  j.at("decoder_layers").get_to(s.decoder_layers);
  j.at("hidden").get_to(s.hidden);
  j.at("heads").get_to(s.heads);
  j.at("ffn").get_to(s.ffn);
  j.at("input_dim").get_to(s.input_dim);
  j.at("src_vocab").get_to(s.src_vocab);
  j.at("tgt_vocab").get_to(s.tgt_vocab);
  j.at("shared_vocab").get_to(s.shared_vocab);
  s.taps = ParseTaps(j.at("taps").get<std::string>());
  j.at("ctc_weight").get_to(s.ctc_weight);
  j.at("xctc_weight").get_to(s.xctc_weight);
  j.at("inter_factor").get_to(s.inter_factor);
  j.at("pae_ctc").get_to(s.pae_ctc);
  j.at("pae_xctc").get_to(s.pae_xctc);
  j.at("clm_ratio").get_to(s.clm_ratio);
  s.clm_align = ParseClmAlignSource(j.at("clm_align").get<std::string>());
  j.at("share_tap_heads").get_to(s.share_tap_heads);
}

}  // namespace bilctc::model
