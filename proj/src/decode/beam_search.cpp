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

#include <algorithm>
#include <cmath>
#include <fstream>

#include "bilctc/decode/decode.hpp"

namespace bilctc::decode {

void DecodeConfig::Validate() const {
  if (beam < 1) Fail(ErrorKind::kConfiguration, "beam must be >= 1");
  if (!(ctc_weight >= 0.0 && ctc_weight <= 1.0)) {
    Fail(ErrorKind::kConfiguration, "ctc_weight (lambda) must lie in [0, 1]");
  }
  if (!(max_length_factor > 0.0)) {
    Fail(ErrorKind::kConfiguration, "max_length_factor must be positive");
  }
}

const char* ToString(Mode m) {
  switch (m) {
    case Mode::kCtcGreedy: return "ctc_greedy";
    case Mode::kCtcPrefixBeam: return "ctc_prefix_beam";
    case Mode::kAttnOnly: return "attn_only";
    case Mode::kRescoring: return "rescoring";
    case Mode::kTwoPass: return "two_pass";
  }
  return "?";
}

Mode ParseMode(const std::string& s) {
  for (Mode m : {Mode::kCtcGreedy, Mode::kCtcPrefixBeam, Mode::kAttnOnly, Mode::kRescoring,
                 Mode::kTwoPass}) {
    if (s == ToString(m)) return m;
  }
  Fail(ErrorKind::kConfiguration, "unknown decode mode '" + s + "'");
}

const char* ToString(RescoreHeads h) { return h == RescoreHeads::kBoth ? "both" : "matching"; }

RescoreHeads ParseRescoreHeads(const std::string& s) {
  if (s == "matching") return RescoreHeads::kMatching;
  if (s == "both") return RescoreHeads::kBoth;
  Fail(ErrorKind::kConfiguration, "unknown rescoring heads '" + s + "'");
}

void to_json(nlohmann::json& j, const DecodeConfig& c) {
  j = nlohmann::json{{"mode", ToString(c.mode)},
                     {"beam", c.beam},
                     {"ctc_weight", c.ctc_weight},
                     {"max_length_factor", c.max_length_factor},
                     {"length_normalize", c.length_normalize},
                     {"heads", ToString(c.heads)}};
}

void from_json(const nlohmann::json& j, DecodeConfig& c) {
  c.mode = ParseMode(j.at("mode").get<std::string>());
  j.at("beam").get_to(c.beam);
  j.at("ctc_weight").get_to(c.ctc_weight);
  j.at("max_length_factor").get_to(c.max_length_factor);
  j.at("length_normalize").get_to(c.length_normalize);
  c.heads = ParseRescoreHeads(j.at("heads").get<std::string>());
}

double FusedScore(double attn_logscore, double ctc_logscore, int scored_tokens, double lambda,
                  bool length_normalize) {
  double attn = attn_logscore;
  if (length_normalize && scored_tokens > 0) attn /= scored_tokens;
  if (lambda == 0.0) return attn;
  if (lambda == 1.0) return ctc_logscore;
  return lambda * ctc_logscore + (1.0 - lambda) * attn;
}

int MaxOutputLength(const DecodeConfig& config, int encoder_frames) {
  return std::max(1, int(std::ceil(config.max_length_factor * encoder_frames)));
}

namespace {

struct Candidate {
  size_t parent;
  int token;
  double attn;
  double score;  // unnormalized fused score used for pruning
};

double MeanCtcExtension(const std::vector<const ctc::LogProbMatrix*>& heads,
                        const std::vector<ctc::PrefixState>& states, int token,
                        std::vector<ctc::PrefixState>* next_states) {
  double sum = 0.0;
  for (size_t h = 0; h < heads.size(); ++h) {
    auto [state, score] = ctc::PrefixScoreExtend(*heads[h], states[h], token);
    if (next_states) next_states->push_back(std::move(state));
    sum += score;
  }
  return heads.empty() ? 0.0 : sum / double(heads.size());
}

void SortHypotheses(std::vector<Hypothesis>& hyps) {
  std::stable_sort(hyps.begin(), hyps.end(),
                   [](const Hypothesis& a, const Hypothesis& b) { return a.fused > b.fused; });
}

}  // namespace

std::vector<Hypothesis> BeamSearch(const AttentionScorer& attn,
                                   const std::vector<const ctc::LogProbMatrix*>& ctc_heads,
                                   const DecodeConfig& config, int max_length) {
  config.Validate();
  const int vocab = attn.vocab_size();
  for (const auto* h : ctc_heads) {
    if (h->vocab_size() != vocab) {
      Fail(ErrorKind::kConfiguration, "CTC head vocabulary " + std::to_string(h->vocab_size()) +
                                          " differs from the decoder's " +
                                          std::to_string(vocab));
    }
  }
  const double lambda = ctc_heads.empty() ? 0.0 : config.ctc_weight;

  Hypothesis root;
  for (const auto* h : ctc_heads) root.ctc_states.push_back(ctc::PrefixScoreInit(*h));
  std::vector<Hypothesis> live{root};
  std::vector<Hypothesis> ended;

  for (int step = 0; step <= max_length && !live.empty(); ++step) {
    std::vector<Candidate> candidates;
    for (size_t i = 0; i < live.size(); ++i) {
      const auto& hyp = live[i];
      const Eigen::VectorXd logp = attn.NextLogProbs(hyp.prefix);
      for (int c = 0; c <= vocab; ++c) {
        if (step == max_length && c != kEos) continue;
        const double a = hyp.attn_logscore + logp(c);
        const double ctc =
            lambda > 0.0 ? MeanCtcExtension(ctc_heads, hyp.ctc_states, c, nullptr) : 0.0;
        const double score = FusedScore(a, ctc, 0, lambda, false);
        if (score == kLogZero || std::isnan(score)) continue;
        candidates.push_back({i, c, a, score});
      }
    }
    // Candidates were generated in (parent, token) order; stable sorting
    // keeps that as the tie-break.
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
    if (candidates.size() > size_t(config.beam)) candidates.resize(config.beam);

    std::vector<Hypothesis> next;
    for (const auto& cand : candidates) {
      const auto& parent = live[cand.parent];
      Hypothesis h;
      h.prefix = parent.prefix;
      h.attn_logscore = cand.attn;
      // Heads are tracked even at lambda = 0 so the parts stay reportable.
      h.ctc_logscore = MeanCtcExtension(ctc_heads, parent.ctc_states, cand.token, &h.ctc_states);
      if (cand.token == kEos) {
        h.finished = true;
        h.fused = FusedScore(h.attn_logscore, h.ctc_logscore, int(h.prefix.size()) + 1, lambda,
                             config.length_normalize);
        ended.push_back(std::move(h));
      } else {
        h.prefix.push_back(cand.token);
        h.fused = cand.score;
        next.push_back(std::move(h));
      }
    }
    live = std::move(next);
  }

  if (ended.empty()) {
    if (live.empty()) return {};
    Hypothesis best = live.front();
    best.fused = FusedScore(best.attn_logscore, best.ctc_logscore, int(best.prefix.size()),
                            lambda, config.length_normalize);
    return {best};
  }
  SortHypotheses(ended);
  if (ended.size() > size_t(config.beam)) ended.resize(config.beam);
  return ended;
}

std::vector<Hypothesis> TwoPassRescore(const AttentionScorer& attn,
                                       const std::vector<const ctc::LogProbMatrix*>& ctc_heads,
                                       const DecodeConfig& config, int max_length) {
  auto hyps = BeamSearch(attn, {}, config, max_length);
  const double lambda = ctc_heads.empty() ? 0.0 : config.ctc_weight;
  for (auto& h : hyps) {
    double sum = 0.0;
    for (const auto* head : ctc_heads) {
      try {
        sum += ctc::LogLikelihood(*head, h.prefix);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kInfeasibleTarget) throw;
        sum = kLogZero;
      }
    }
    h.ctc_logscore = ctc_heads.empty() ? 0.0 : sum / double(ctc_heads.size());
    const int tokens = int(h.prefix.size()) + (h.finished ? 1 : 0);
    h.fused = FusedScore(h.attn_logscore, h.ctc_logscore, tokens, lambda, config.length_normalize);
  }
  SortHypotheses(hyps);
  return hyps;
}

template <typename Scalar>
std::vector<Hypothesis> DecodeUtterance(const model::BilCtcModel<Scalar>& model,
                                        const MatrixF& features, const DecodeConfig& config) {
  config.Validate();
  const auto& spec = model.spec();
  auto view = model.Infer(features);
  const int frames = int(view.states.rows());
  const bool st = spec.task == model::Task::kSt;
  const auto& matching = st ? view.xctc : view.ctc;
  const char* matching_name = st ? "XCTC" : "CTC";

  std::vector<const ctc::LogProbMatrix*> heads;
  const bool needs_ctc = config.mode != Mode::kAttnOnly;
  if (needs_ctc) {
    if (!matching) {
      Fail(ErrorKind::kConfiguration,
           std::string("decode mode ") + ToString(config.mode) + " needs the final " +
               matching_name + " head, which this model does not have");
    }
    heads.push_back(&*matching);
    if (config.heads == RescoreHeads::kBoth &&
        (config.mode == Mode::kRescoring || config.mode == Mode::kTwoPass)) {
      const auto& other = st ? view.ctc : view.xctc;
      if (!spec.shared_vocab || !other) {
        Fail(ErrorKind::kConfiguration,
             "rescoring with both heads needs shared_vocab and both final heads");
      }
      heads.push_back(&*other);
    }
  }

  if (config.mode == Mode::kCtcGreedy || config.mode == Mode::kCtcPrefixBeam) {
    std::vector<ScoredSequence> seqs;
    if (config.mode == Mode::kCtcGreedy) {
      auto tokens = CtcGreedy(*matching);
      seqs.push_back({tokens, ctc::LogLikelihood(*matching, tokens)});
    } else {
      seqs = CtcPrefixBeam(*matching, config.beam);
    }
    std::vector<Hypothesis> out;
    for (auto& s : seqs) {
      Hypothesis h;
      h.prefix = std::move(s.tokens);
      h.ctc_logscore = s.log_prob;
      h.fused = s.log_prob;
      h.finished = true;
      out.push_back(std::move(h));
    }
    return out;
  }

  ModelAttentionScorer<Scalar> scorer(model, view.states);
  const int max_length = MaxOutputLength(config, frames);
  if (config.mode == Mode::kAttnOnly) return BeamSearch(scorer, {}, config, max_length);
  if (config.mode == Mode::kRescoring) return BeamSearch(scorer, heads, config, max_length);
  return TwoPassRescore(scorer, heads, config, max_length);
}

template std::vector<Hypothesis> DecodeUtterance(const model::BilCtcModel<float>&,
                                                 const MatrixF&, const DecodeConfig&);
template std::vector<Hypothesis> DecodeUtterance(const model::BilCtcModel<double>&,
                                                 const MatrixF&, const DecodeConfig&);

void to_json(nlohmann::json& j, const NBestRecord& r) {
  j = nlohmann::json{{"utt", r.utt},     {"rank", r.rank}, {"fused", r.fused},
                     {"attn", r.attn},   {"ctc", r.ctc},   {"finished", r.finished},
                     {"tokens", r.tokens}};
}

void from_json(const nlohmann::json& j, NBestRecord& r) {
  j.at("utt").get_to(r.utt);
  j.at("rank").get_to(r.rank);
  j.at("fused").get_to(r.fused);
  j.at("attn").get_to(r.attn);
  j.at("ctc").get_to(r.ctc);
  r.finished = j.value("finished", true);
  j.at("tokens").get_to(r.tokens);
}

std::vector<NBestRecord> ToRecords(const std::string& utt, const std::vector<Hypothesis>& hyps) {
  std::vector<NBestRecord> out;
  for (size_t i = 0; i < hyps.size(); ++i) {
    const auto& h = hyps[i];
    out.push_back({utt, int(i) + 1, h.fused, h.attn_logscore, h.ctc_logscore, h.finished,
                   h.prefix});
  }
  return out;
}

void WriteNBest(const std::string& path, const std::vector<NBestRecord>& records) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) Fail(ErrorKind::kIo, "cannot write " + path);
  for (const auto& r : records) os << nlohmann::json(r).dump() << '\n';
  if (!os) Fail(ErrorKind::kIo, "failed writing " + path);
}

std::vector<NBestRecord> ReadNBest(const std::string& path) {
  std::ifstream is(path);
  if (!is) Fail(ErrorKind::kIo, "cannot open " + path);
  std::vector<NBestRecord> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<NBestRecord>());
    } catch (const nlohmann::json::exception& e) {
      Fail(ErrorKind::kInvalidInput, path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace bilctc::decode
