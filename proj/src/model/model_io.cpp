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

#include "bilctc/model/model_io.hpp"

#include "bilctc/nn/checkpoint.hpp"

namespace bilctc::model {

void SaveModel(const std::string& path, const BilCtcModel<float>& model,
               nlohmann::json metadata) {
  metadata[kModelSpecKey] = model.spec();
  nn::SaveCheckpoint(path, model.params(), metadata);
}

LoadedModel LoadModel(const std::string& path) {
  auto ckpt = nn::LoadCheckpoint(path);
  if (!ckpt.metadata.contains(kModelSpecKey)) {
    Fail(ErrorKind::kInvalidInput, path + " carries no model spec");
  }
  ModelSpec spec;
  try {
    spec = ckpt.metadata[kModelSpecKey].get<ModelSpec>();
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kInvalidInput, path + ": unreadable model spec: " + e.what());
  }
  LoadedModel out;
  out.model = std::make_unique<BilCtcModel<float>>(spec, std::move(ckpt.params));
  out.metadata = std::move(ckpt.metadata);
  return out;
}

}  // namespace bilctc::model
