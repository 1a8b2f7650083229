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

#ifndef BILCTC_CLI_RUN_CONFIG_HPP_
#define BILCTC_CLI_RUN_CONFIG_HPP_

#include <string>

#include <json.hpp>

#include "bilctc/data/dataset.hpp"
#include "bilctc/decode/decode.hpp"
#include "bilctc/model/model_spec.hpp"
#include "bilctc/train/trainer.hpp"

namespace bilctc::cli {

struct SplitSizes {
  int train = 3000;
  int dev = 200;
  int test = 200;
};

// Every tunable of the pipeline as "section.key" entries. Sections: data,
// split, model, train, decode. Values keep the type of their default.
class RunConfig {
 public:
  RunConfig();

  // Unknown keys and ill-typed values are configuration errors.
  void Set(const std::string& key, const std::string& value);
  // "key = value" lines; '#' starts a comment.
  void LoadFile(const std::string& path);
  // "key=value", as given on the command line.
  void SetAssignment(const std::string& assignment);

  data::SyntheticTaskSpec Data() const;
  SplitSizes Splits() const;
  model::ModelSpec Model() const;
  train::TrainConfig Train() const;
  decode::DecodeConfig Decode() const;

  // Builds every view so a bad combination fails before work starts.
  void Validate() const;

  const nlohmann::json& tree() const { return tree_; }
  // All keys, defaults included, in the file format LoadFile reads.
  std::string ToText() const;
  // Writes resolved.conf and version.json into dir.
  void WriteResolved(const std::string& dir, const std::string& command) const;

 private:
  nlohmann::json tree_;
};

}  // namespace bilctc::cli

#endif  // BILCTC_CLI_RUN_CONFIG_HPP_
