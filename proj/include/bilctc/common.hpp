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

#ifndef BILCTC_COMMON_HPP_
#define BILCTC_COMMON_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace bilctc {

// Row-major dense matrix; rows are frames / positions throughout the library.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using MatrixD = Matrix<double>;
using MatrixF = Matrix<float>;

// Label index reserved for the CTC blank. Decoders reuse index 0 as the
// sentence boundary symbol, so label sequences always live in [1, V].
inline constexpr int kBlank = 0;
inline constexpr int kEos = 0;

// Label sequences never contain the blank.
using LabelSequence = std::vector<int>;

enum class ErrorKind {
  kInvalidInput,
  kInfeasibleTarget,
  kConfiguration,
  kUsage,
  kIo,
  kNumeric,
};

const char* ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void Fail(ErrorKind kind, const std::string& what);

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b)) that keeps -inf absorbing.
inline double LogAdd(double a, double b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

template <typename Derived>
typename Derived::Scalar LogSumExp(const Eigen::DenseBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  const Scalar m = v.maxCoeff();
  if (!std::isfinite(static_cast<double>(m))) return m;
  return m + std::log((v.derived().array() - m).exp().sum());
}

// Row-wise log-softmax with max subtraction.
template <typename Scalar>
Matrix<Scalar> LogSoftmaxRows(const Matrix<Scalar>& logits) {
  Matrix<Scalar> out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    out.row(r) = logits.row(r).array() - LogSumExp(logits.row(r));
  }
  return out;
}

template <typename Scalar>
Matrix<Scalar> SoftmaxRows(const Matrix<Scalar>& logits) {
  return LogSoftmaxRows(logits).array().exp().matrix();
}

}  // namespace bilctc

#endif  // BILCTC_COMMON_HPP_
