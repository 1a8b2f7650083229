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

#ifndef BILCTC_NN_CHECKPOINT_HPP_
#define BILCTC_NN_CHECKPOINT_HPP_

#include <string>

#include <json.hpp>

#include "bilctc/nn/parameters.hpp"

namespace bilctc::nn {

// Checkpoint file layout, version 1 (all integers little-endian):
//   bytes 0..7   magic "BILCTCK1"
//   u32          format version
//   u64          header length N
//   N bytes      UTF-8 JSON header:
//                  {"format_version", "step", "metadata": {...},
//                   "tensors": [{"name", "rows", "cols", "offset"}, ...]}
//   payload      float32 values, row-major, tensor i at byte `offset`
//                relative to the payload start
inline constexpr const char kCheckpointMagic[9] = "BILCTCK1";
inline constexpr uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ParameterStore<float> params;
  nlohmann::json metadata = nlohmann::json::object();
};

void SaveCheckpoint(const std::string& path, const ParameterStore<float>& params,
                    const nlohmann::json& metadata);
Checkpoint LoadCheckpoint(const std::string& path);

}  // namespace bilctc::nn

#endif  // BILCTC_NN_CHECKPOINT_HPP_
