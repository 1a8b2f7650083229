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

#ifndef BILCTC_MODEL_AVERAGING_HPP_
#define BILCTC_MODEL_AVERAGING_HPP_

#include <string>
#include <vector>

#include "bilctc/nn/checkpoint.hpp"

namespace bilctc::model {

// Metadata key holding the dev loss a checkpoint was saved with.
inline constexpr const char kDevLossKey[] = "dev_loss";

// Element-wise mean of the k checkpoints with the lowest recorded dev loss
// (all of them when k >= paths.size(); ties keep the order of `paths`).
// Metadata is copied from the best checkpoint and gains "averaged_from".
nn::Checkpoint AverageCheckpoints(const std::vector<std::string>& paths, int k);

// Mean of already loaded stores; names and shapes must agree.
nn::ParameterStore<float> AverageStores(const std::vector<const nn::ParameterStore<float>*>& stores);

}  // namespace bilctc::model

#endif  // BILCTC_MODEL_AVERAGING_HPP_
