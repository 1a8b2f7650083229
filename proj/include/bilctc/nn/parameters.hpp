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

#ifndef BILCTC_NN_PARAMETERS_HPP_
#define BILCTC_NN_PARAMETERS_HPP_

#include <cstdint>
#include <deque>
#include <random>
#include <string>
#include <unordered_map>

#include "bilctc/common.hpp"

namespace bilctc::nn {

template <typename Scalar>
struct Parameter {
  std::string name;
  Matrix<Scalar> value;
  Matrix<Scalar> grad;
  // Adam first and second moments.
  Matrix<Scalar> moment1;
  Matrix<Scalar> moment2;
};

// Named parameters in insertion order. Addresses are stable, so layers may
// keep pointers into the store.
template <typename Scalar>
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore& other) { *this = other; }
  ParameterStore& operator=(const ParameterStore& other) {
    if (this == &other) return *this;
    params_ = other.params_;
    index_ = other.index_;
    step = other.step;
    return *this;
  }
  ParameterStore(ParameterStore&&) = default;
  ParameterStore& operator=(ParameterStore&&) = default;

  Parameter<Scalar>& Add(const std::string& name, Matrix<Scalar> init) {
    if (index_.count(name)) {
      Fail(ErrorKind::kConfiguration, "duplicate parameter name " + name);
    }
    index_.emplace(name, params_.size());
    auto& p = params_.emplace_back();
    p.name = name;
    p.grad = Matrix<Scalar>::Zero(init.rows(), init.cols());
    p.moment1 = p.grad;
    p.moment2 = p.grad;
    p.value = std::move(init);
    return p;
  }

  // Xavier-uniform: U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
  Parameter<Scalar>& AddXavier(const std::string& name, int rows, int cols,
                               std::mt19937_64& rng) {
    const double bound = std::sqrt(6.0 / double(rows + cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix<Scalar> init(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) init(r, c) = static_cast<Scalar>(dist(rng));
    return Add(name, std::move(init));
  }

  bool Contains(const std::string& name) const { return index_.count(name) > 0; }

  Parameter<Scalar>& Get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) Fail(ErrorKind::kConfiguration, "no parameter " + name);
    return params_[it->second];
  }
  const Parameter<Scalar>& Get(const std::string& name) const {
    return const_cast<ParameterStore*>(this)->Get(name);
  }

  std::deque<Parameter<Scalar>>& params() { return params_; }
  const std::deque<Parameter<Scalar>>& params() const { return params_; }
  size_t size() const { return params_.size(); }

  void ZeroGrad() {
    for (auto& p : params_) p.grad.setZero();
  }

  int64_t ParameterCount() const {
    int64_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

  // Same names and values in another precision; moments are reset.
  template <typename Other>
  ParameterStore<Other> Cast() const {
    ParameterStore<Other> out;
    for (const auto& p : params_) out.Add(p.name, p.value.template cast<Other>());
    out.step = step;
    return out;
  }

  int64_t step = 0;

 private:
  std::deque<Parameter<Scalar>> params_;
  std::unordered_map<std::string, size_t> index_;
};

}  // namespace bilctc::nn

#endif  // BILCTC_NN_PARAMETERS_HPP_
