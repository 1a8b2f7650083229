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

#ifndef BILCTC_MODEL_MODEL_IO_HPP_
#define BILCTC_MODEL_MODEL_IO_HPP_

#include <memory>
#include <string>

#include <json.hpp>

#include "bilctc/model/bilctc_model.hpp"

namespace bilctc::model {

inline constexpr const char kModelSpecKey[] = "model_spec";

// Writes the parameters with the spec stored under "model_spec" next to
// `metadata`.
void SaveModel(const std::string& path, const BilCtcModel<float>& model,
               nlohmann::json metadata = nlohmann::json::object());

struct LoadedModel {
  std::unique_ptr<BilCtcModel<float>> model;
  nlohmann::json metadata;
};

// Rebuilds a model from a checkpoint that carries its spec.
LoadedModel LoadModel(const std::string& path);

}  // namespace bilctc::model

#endif  // BILCTC_MODEL_MODEL_IO_HPP_
