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

#ifndef BILCTC_NN_OPS_HPP_
#define BILCTC_NN_OPS_HPP_

#include <random>
#include <string>
#include <vector>

#include "bilctc/common.hpp"
#include "bilctc/nn/tape.hpp"

namespace bilctc::nn {

namespace detail {
inline void CheckShape(bool ok, const char* op, Eigen::Index r1, Eigen::Index c1,
                       Eigen::Index r2, Eigen::Index c2) {
  if (ok) return;
  Fail(ErrorKind::kConfiguration,
       std::string(op) + ": shape mismatch " + std::to_string(r1) + "x" +
           std::to_string(c1) + " vs " + std::to_string(r2) + "x" +
           std::to_string(c2));
}
}  // namespace detail

template <typename Scalar>
Var MatMul(Tape<Scalar>& t, Var a, Var b) {
  const auto& A = t.value(a);
  const auto& B = t.value(b);
  detail::CheckShape(A.cols() == B.rows(), "MatMul", A.rows(), A.cols(), B.rows(), B.cols());
  Matrix<Scalar> out = A * B;
  return t.Push(std::move(out), {a, b}, [a, b](Tape<Scalar>& tp, Var self) {
    const auto& g = tp.grad(self);
    if (tp.needs_grad(a)) tp.grad(a).noalias() += g * tp.value(b).transpose();
    if (tp.needs_grad(b)) tp.grad(b).noalias() += tp.value(a).transpose() * g;
  });
}

// a * b^T
template <typename Scalar>
Var MatMulNT(Tape<Scalar>& t, Var a, Var b) {
  const auto& A = t.value(a);
  const auto& B = t.value(b);
  detail::CheckShape(A.cols() == B.cols(), "MatMulNT", A.rows(), A.cols(), B.rows(), B.cols());
  Matrix<Scalar> out = A * B.transpose();
  return t.Push(std::move(out), {a, b}, [a, b](Tape<Scalar>& tp, Var self) {
    const auto& g = tp.grad(self);
    if (tp.needs_grad(a)) tp.grad(a).noalias() += g * tp.value(b);
    if (tp.needs_grad(b)) tp.grad(b).noalias() += g.transpose() * tp.value(a);
  });
}

template <typename Scalar>
Var Add(Tape<Scalar>& t, Var a, Var b) {
  const auto& A = t.value(a);
  const auto& B = t.value(b);
  detail::CheckShape(A.rows() == B.rows() && A.cols() == B.cols(), "Add", A.rows(),
                     A.cols(), B.rows(), B.cols());
  Matrix<Scalar> out = A + B;
  return t.Push(std::move(out), {a, b}, [a, b](Tape<Scalar>& tp, Var self) {
    const auto& g = tp.grad(self);
    tp.AddGrad(a, g);
    tp.AddGrad(b, g);
  });
}

// Sum of equally shaped nodes.
template <typename Scalar>
Var AddN(Tape<Scalar>& t, const std::vector<Var>& xs) {
  Matrix<Scalar> out = t.value(xs.at(0));
  for (size_t i = 1; i < xs.size(); ++i) {
    const auto& X = t.value(xs[i]);
    detail::CheckShape(X.rows() == out.rows() && X.cols() == out.cols(), "AddN",
                       out.rows(), out.cols(), X.rows(), X.cols());
    out += X;
  }
  return t.Push(std::move(out), xs, [xs](Tape<Scalar>& tp, Var self) {
    const Matrix<Scalar> g = tp.grad(self);
    for (Var x : xs) tp.AddGrad(x, g);
  });
}

// a + 1 * row, broadcasting a 1 x n row over every row of a.
template <typename Scalar>
Var AddRow(Tape<Scalar>& t, Var a, Var row) {
  const auto& A = t.value(a);
  const auto& R = t.value(row);
  detail::CheckShape(R.rows() == 1 && R.cols() == A.cols(), "AddRow", A.rows(), A.cols(),
                     R.rows(), R.cols());
  Matrix<Scalar> out = A.rowwise() + R.row(0);
  return t.Push(std::move(out), {a, row}, [a, row](Tape<Scalar>& tp, Var self) {
    const auto& g = tp.grad(self);
    tp.AddGrad(a, g);
    if (tp.needs_grad(row)) tp.grad(row) += g.colwise().sum();
  });
}

template <typename Scalar>
Var Scale(Tape<Scalar>& t, Var a, Scalar s) {
  Matrix<Scalar> out = t.value(a) * s;
  return t.Push(std::move(out), {a}, [a, s](Tape<Scalar>& tp, Var self) {
    tp.AddGrad(a, tp.grad(self) * s);
  });
}

template <typename Scalar>
Var Relu(Tape<Scalar>& t, Var a) {
  Matrix<Scalar> out = t.value(a).cwiseMax(Scalar(0));
  return t.Push(std::move(out), {a}, [a](Tape<Scalar>& tp, Var self) {
    const auto& x = tp.value(a);
    tp.AddGrad(a, (x.array() > Scalar(0)).select(tp.grad(self), Scalar(0)));
  });
}

// Row-wise softmax. Entries where `mask` is false get probability zero; every
// row must keep at least one entry.
template <typename Scalar>
Var SoftmaxRows(Tape<Scalar>& t, Var a,
                const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>*
                    mask = nullptr) {
  const auto& X = t.value(a);
  Matrix<Scalar> out(X.rows(), X.cols());
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    Scalar m = -std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index c = 0; c < X.cols(); ++c)
      if (!mask || (*mask)(r, c)) m = std::max(m, X(r, c));
    Scalar sum = 0;
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
      const Scalar e = (!mask || (*mask)(r, c)) ? std::exp(X(r, c) - m) : Scalar(0);
      out(r, c) = e;
      sum += e;
    }
    out.row(r) /= sum;
  }
  return t.Push(std::move(out), {a}, [a](Tape<Scalar>& tp, Var self) {
    const auto& y = tp.value(self);
    const auto& g = tp.grad(self);
    const auto dot = (g.array() * y.array()).rowwise().sum();
    Matrix<Scalar> dx = y.array() * (g.array().colwise() - dot);
    tp.AddGrad(a, dx);
  });
}

template <typename Scalar>
Var LogSoftmaxRows(Tape<Scalar>& t, Var a) {
  Matrix<Scalar> out = bilctc::LogSoftmaxRows<Scalar>(t.value(a));
  return t.Push(std::move(out), {a}, [a](Tape<Scalar>& tp, Var self) {
    const auto& y = tp.value(self);
    const auto& g = tp.grad(self);
    const auto gsum = g.rowwise().sum();
    Matrix<Scalar> dx = g.array() - y.array().exp().colwise() * gsum.array();
    tp.AddGrad(a, dx);
  });
}

// Normalizes each row to zero mean, unit variance, then applies gain/bias.
template <typename Scalar>
Var LayerNorm(Tape<Scalar>& t, Var x, Var gain, Var bias, Scalar eps = Scalar(1e-5)) {
  const auto& X = t.value(x);
  const Eigen::Index n = X.cols();
  detail::CheckShape(t.value(gain).cols() == n && t.value(bias).cols() == n, "LayerNorm",
                     X.rows(), n, t.value(gain).rows(), t.value(gain).cols());
  Matrix<Scalar> xhat(X.rows(), n);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv_std(X.rows());
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    const Scalar mean = X.row(r).mean();
    const Scalar var = (X.row(r).array() - mean).square().mean();
    inv_std(r) = Scalar(1) / std::sqrt(var + eps);
    xhat.row(r) = (X.row(r).array() - mean) * inv_std(r);
  }
  Matrix<Scalar> out =
      (xhat.array().rowwise() * t.value(gain).row(0).array()).rowwise() +
      t.value(bias).row(0).array();
  return t.Push(std::move(out), {x, gain, bias},
                [x, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std)](
                    Tape<Scalar>& tp, Var self) {
                  const auto& g = tp.grad(self);
                  if (tp.needs_grad(gain))
                    tp.grad(gain) += (g.array() * xhat.array()).colwise().sum().matrix();
                  if (tp.needs_grad(bias)) tp.grad(bias) += g.colwise().sum();
                  if (!tp.needs_grad(x)) return;
                  Matrix<Scalar> gx = g.array().rowwise() * tp.value(gain).row(0).array();
                  Matrix<Scalar> dx(gx.rows(), gx.cols());
                  for (Eigen::Index r = 0; r < gx.rows(); ++r) {
                    const Scalar mean_g = gx.row(r).mean();
                    const Scalar mean_gx = (gx.row(r).array() * xhat.row(r).array()).mean();
                    dx.row(r) = inv_std(r) *
                                (gx.row(r).array() - mean_g - xhat.row(r).array() * mean_gx);
                  }
                  tp.grad(x) += dx;
                });
}

// Inverted dropout; identity when rate == 0 or rng is null.
template <typename Scalar>
Var Dropout(Tape<Scalar>& t, Var x, double rate, std::mt19937_64* rng) {
  if (rate <= 0.0 || rng == nullptr) return x;
  if (rate >= 1.0) Fail(ErrorKind::kConfiguration, "dropout rate must be < 1");
  const auto& X = t.value(x);
  std::bernoulli_distribution keep(1.0 - rate);
  const Scalar scale = Scalar(1.0 / (1.0 - rate));
  Matrix<Scalar> mask(X.rows(), X.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i)
    mask.data()[i] = keep(*rng) ? scale : Scalar(0);
  Matrix<Scalar> out = X.cwiseProduct(mask);
  return t.Push(std::move(out), {x}, [x, mask = std::move(mask)](Tape<Scalar>& tp, Var self) {
    tp.AddGrad(x, tp.grad(self).cwiseProduct(mask));
  });
}

// Gathers rows of `table`.
template <typename Scalar>
Var Rows(Tape<Scalar>& t, Var table, const std::vector<int>& ids) {
  const auto& W = t.value(table);
  Matrix<Scalar> out(static_cast<Eigen::Index>(ids.size()), W.cols());
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= W.rows()) {
      Fail(ErrorKind::kInvalidInput, "embedding index " + std::to_string(ids[i]) +
                                         " outside table of " + std::to_string(W.rows()));
    }
    out.row(static_cast<Eigen::Index>(i)) = W.row(ids[i]);
  }
  return t.Push(std::move(out), {table}, [table, ids](Tape<Scalar>& tp, Var self) {
    const auto& g = tp.grad(self);
    auto& gw = tp.grad(table);
    for (size_t i = 0; i < ids.size(); ++i) gw.row(ids[i]) += g.row(static_cast<Eigen::Index>(i));
  });
}

template <typename Scalar>
Var SliceCols(Tape<Scalar>& t, Var a, Eigen::Index start, Eigen::Index count) {
  const auto& A = t.value(a);
  detail::CheckShape(start >= 0 && start + count <= A.cols(), "SliceCols", A.rows(),
                     A.cols(), start, count);
  Matrix<Scalar> out = A.middleCols(start, count);
  return t.Push(std::move(out), {a}, [a, start, count](Tape<Scalar>& tp, Var self) {
    if (tp.needs_grad(a)) tp.grad(a).middleCols(start, count) += tp.grad(self);
  });
}

template <typename Scalar>
Var ConcatCols(Tape<Scalar>& t, const std::vector<Var>& parts) {
  Eigen::Index rows = t.value(parts.at(0)).rows(), cols = 0;
  for (Var p : parts) {
    detail::CheckShape(t.value(p).rows() == rows, "ConcatCols", rows, cols,
                       t.value(p).rows(), t.value(p).cols());
    cols += t.value(p).cols();
  }
  Matrix<Scalar> out(rows, cols);
  Eigen::Index at = 0;
  for (Var p : parts) {
    out.middleCols(at, t.value(p).cols()) = t.value(p);
    at += t.value(p).cols();
  }
  return t.Push(std::move(out), parts, [parts](Tape<Scalar>& tp, Var self) {
    Eigen::Index at = 0;
    for (Var p : parts) {
      const Eigen::Index w = tp.value(p).cols();
      if (tp.needs_grad(p)) tp.grad(p) += tp.grad(self).middleCols(at, w);
      at += w;
    }
  });
}

// Rows flagged in `replace` are overwritten by the matching rows of
// `replacement` and receive no gradient.
template <typename Scalar>
Var ReplaceRows(Tape<Scalar>& t, Var a, const std::vector<bool>& replace,
                const Matrix<Scalar>& replacement) {
  Matrix<Scalar> out = t.value(a);
  for (Eigen::Index r = 0; r < out.rows(); ++r)
    if (replace[r]) out.row(r) = replacement.row(r);
  return t.Push(std::move(out), {a}, [a, replace](Tape<Scalar>& tp, Var self) {
    if (!tp.needs_grad(a)) return;
    Matrix<Scalar> g = tp.grad(self);
    for (Eigen::Index r = 0; r < g.rows(); ++r)
      if (replace[r]) g.row(r).setZero();
    tp.grad(a) += g;
  });
}

// Weighted sum of 1x1 nodes.
template <typename Scalar>
Var WeightedSum(Tape<Scalar>& t, const std::vector<Var>& xs, const std::vector<Scalar>& w) {
  Matrix<Scalar> out = Matrix<Scalar>::Zero(1, 1);
  for (size_t i = 0; i < xs.size(); ++i) out(0, 0) += w[i] * t.value(xs[i])(0, 0);
  return t.Push(std::move(out), xs, [xs, w](Tape<Scalar>& tp, Var self) {
    const Scalar g = tp.grad(self)(0, 0);
    for (size_t i = 0; i < xs.size(); ++i) {
      if (tp.needs_grad(xs[i])) tp.grad(xs[i])(0, 0) += w[i] * g;
    }
  });
}

}  // namespace bilctc::nn

#endif  // BILCTC_NN_OPS_HPP_
