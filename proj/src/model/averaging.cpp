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

#include "bilctc/model/averaging.hpp"

#include <algorithm>
#include <numeric>

namespace bilctc::model {

nn::ParameterStore<float> AverageStores(
    const std::vector<const nn::ParameterStore<float>*>& stores) {
  if (stores.empty()) Fail(ErrorKind::kUsage, "nothing to average");
  const auto& first = *stores.front();
  std::vector<std::string> offending;
  for (size_t i = 1; i < stores.size(); ++i) {
    const auto& other = *stores[i];
    for (const auto& p : first.params()) {
      if (!other.Contains(p.name) || other.Get(p.name).value.rows() != p.value.rows() ||
          other.Get(p.name).value.cols() != p.value.cols()) {
        offending.push_back(p.name);
      }
    }
    for (const auto& p : other.params())
      if (!first.Contains(p.name)) offending.push_back(p.name);
  }
  if (!offending.empty()) {
    std::sort(offending.begin(), offending.end());
    offending.erase(std::unique(offending.begin(), offending.end()), offending.end());
    std::string msg = "checkpoints differ in structure:";
    for (const auto& n : offending) msg += " " + n;
    Fail(ErrorKind::kConfiguration, msg);
  }
  nn::ParameterStore<float> out;
  for (const auto& p : first.params()) {
    // Accumulate in double so the mean does not depend on summation width.
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols());
    for (const auto* s : stores) sum += s->Get(p.name).value.cast<double>();
    out.Add(p.name, MatrixF((sum / double(stores.size())).cast<float>()));
  }
  out.step = first.step;
  return out;
}

nn::Checkpoint AverageCheckpoints(const std::vector<std::string>& paths, int k) {
  if (paths.empty()) Fail(ErrorKind::kUsage, "no checkpoints given");
  if (k < 1) Fail(ErrorKind::kUsage, "k must be >= 1");
  std::vector<nn::Checkpoint> loaded;
  for (const auto& p : paths) loaded.push_back(nn::LoadCheckpoint(p));

  std::vector<size_t> order(paths.size());
  std::iota(order.begin(), order.end(), 0);
  if (size_t(k) < paths.size()) {
    for (size_t i = 0; i < paths.size(); ++i) {
      const auto& m = loaded[i].metadata;
      if (!m.contains(kDevLossKey) || !m[kDevLossKey].is_number()) {
        Fail(ErrorKind::kInvalidInput,
             paths[i] + " has no dev loss; cannot select the best " + std::to_string(k));
      }
    }
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return loaded[a].metadata[kDevLossKey].get<double>() <
             loaded[b].metadata[kDevLossKey].get<double>();
    });
    order.resize(k);
  }
  std::vector<const nn::ParameterStore<float>*> chosen;
  nlohmann::json sources = nlohmann::json::array();
  for (size_t i : order) {
    chosen.push_back(&loaded[i].params);
    sources.push_back(paths[i]);
  }
  nn::Checkpoint out;
  out.params = AverageStores(chosen);
  out.metadata = loaded[order.front()].metadata;
  out.metadata["averaged_from"] = std::move(sources);
  return out;
}

}  // namespace bilctc::model
