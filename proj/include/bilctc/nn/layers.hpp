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

#ifndef BILCTC_NN_LAYERS_HPP_
#define BILCTC_NN_LAYERS_HPP_

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "bilctc/nn/ops.hpp"
#include "bilctc/nn/parameters.hpp"
#include "bilctc/nn/tape.hpp"

namespace bilctc::nn {

// Dropout state for one forward pass. A null rng means evaluation mode.
struct ForwardContext {
  double dropout = 0.0;
  std::mt19937_64* rng = nullptr;
  bool training() const { return rng != nullptr; }
};

// Layers hold parameter names only and look them up in the store on every
// forward, so they stay valid across store copies and precision casts.

// y = x W^T + b with W stored as out x in.
struct Linear {
  std::string weight;
  std::string bias;  // empty when the layer has no bias

  template <typename Scalar>
  static Linear Create(ParameterStore<Scalar>& store, const std::string& name, int in,
                       int out, std::mt19937_64& rng, bool with_bias = true) {
    Linear l{name + ".weight", with_bias ? name + ".bias" : std::string()};
    store.AddXavier(l.weight, out, in, rng);
    if (with_bias) store.Add(l.bias, Matrix<Scalar>::Zero(1, out));
    return l;
  }

  template <typename Scalar>
  Var Forward(Tape<Scalar>& t, ParameterStore<Scalar>& store, Var x) const {
    Var y = MatMulNT(t, x, t.Param(store.Get(weight)));
    if (!bias.empty()) y = AddRow(t, y, t.Param(store.Get(bias)));
    return y;
  }
};

struct Embedding {
  std::string table;

  template <typename Scalar>
  static Embedding Create(ParameterStore<Scalar>& store, const std::string& name,
                          int rows, int dim, std::mt19937_64& rng) {
    Embedding e{name + ".table"};
    store.AddXavier(e.table, rows, dim, rng);
    return e;
  }

  template <typename Scalar>
  Var Forward(Tape<Scalar>& t, ParameterStore<Scalar>& store,
              const std::vector<int>& ids) const {
    return Rows(t, t.Param(store.Get(table)), ids);
  }
};

struct LayerNormLayer {
  std::string gain;
  std::string bias;

  template <typename Scalar>
  static LayerNormLayer Create(ParameterStore<Scalar>& store, const std::string& name,
                               int dim) {
    LayerNormLayer l{name + ".gain", name + ".bias"};
    store.Add(l.gain, Matrix<Scalar>::Ones(1, dim));
    store.Add(l.bias, Matrix<Scalar>::Zero(1, dim));
    return l;
  }

  template <typename Scalar>
  Var Forward(Tape<Scalar>& t, ParameterStore<Scalar>& store, Var x) const {
    return LayerNorm(t, x, t.Param(store.Get(gain)), t.Param(store.Get(bias)));
  }
};

// Scaled dot-product attention over `heads` column blocks.
struct MultiHeadAttention {
  Linear query, key, value, output;
  int heads = 1;
  int dim = 0;

  template <typename Scalar>
  static MultiHeadAttention Create(ParameterStore<Scalar>& store, const std::string& name,
                                   int dim, int heads, std::mt19937_64& rng) {
    if (heads < 1 || dim % heads != 0) {
      Fail(ErrorKind::kConfiguration, "hidden size " + std::to_string(dim) +
                                          " not divisible by " + std::to_string(heads) +
                                          " heads");
    }
    MultiHeadAttention m;
    m.query = Linear::Create(store, name + ".q", dim, dim, rng);
    m.key = Linear::Create(store, name + ".k", dim, dim, rng);
    m.value = Linear::Create(store, name + ".v", dim, dim, rng);
    m.output = Linear::Create(store, name + ".o", dim, dim, rng);
    m.heads = heads;
    m.dim = dim;
    return m;
  }

  // With `causal`, query row i attends to key rows j <= i only.
  template <typename Scalar>
  Var Forward(Tape<Scalar>& t, ParameterStore<Scalar>& store, Var q_in, Var kv_in,
              bool causal) const {
    if (t.value(q_in).cols() != dim || t.value(kv_in).cols() != dim) {
      Fail(ErrorKind::kConfiguration, "attention input width does not match hidden size");
    }
    const Var q = query.Forward(t, store, q_in);
    const Var k = key.Forward(t, store, kv_in);
    const Var v = value.Forward(t, store, kv_in);
    const int head_dim = dim / heads;
    const Scalar scale = Scalar(1.0 / std::sqrt(double(head_dim)));
    const Eigen::Index rows = t.value(q).rows(), keys = t.value(k).rows();
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> mask;
    if (causal) {
      mask.resize(rows, keys);
      for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < keys; ++j) mask(i, j) = j <= i;
    }
    std::vector<Var> outs;
    outs.reserve(heads);
    for (int h = 0; h < heads; ++h) {
      const Var qh = SliceCols(t, q, h * head_dim, head_dim);
      const Var kh = SliceCols(t, k, h * head_dim, head_dim);
      const Var vh = SliceCols(t, v, h * head_dim, head_dim);
      const Var scores = Scale(t, MatMulNT(t, qh, kh), scale);
      const Var attn = SoftmaxRows(t, scores, causal ? &mask : nullptr);
      outs.push_back(MatMul(t, attn, vh));
    }
    const Var merged = heads == 1 ? outs[0] : ConcatCols(t, outs);
    return output.Forward(t, store, merged);
  }
};

struct FeedForward {
  Linear inner, outer;

  template <typename Scalar>
  static FeedForward Create(ParameterStore<Scalar>& store, const std::string& name,
                            int dim, int ffn, std::mt19937_64& rng) {
    return {Linear::Create(store, name + ".fc1", dim, ffn, rng),
            Linear::Create(store, name + ".fc2", ffn, dim, rng)};
  }

  template <typename Scalar>
  Var Forward(Tape<Scalar>& t, ParameterStore<Scalar>& store, Var x) const {
    return outer.Forward(t, store, Relu(t, inner.Forward(t, store, x)));
  }
};

// Post-norm transformer encoder layer.
struct EncoderLayer {
  MultiHeadAttention self_attn;
  LayerNormLayer attn_norm;
  FeedForward ffn;
  LayerNormLayer ffn_norm;

  template <typename Scalar>
  static EncoderLayer Create(ParameterStore<Scalar>& store, const std::string& name,
                             int dim, int heads, int ffn_dim, std::mt19937_64& rng) {
    EncoderLayer l;
    l.self_attn = MultiHeadAttention::Create(store, name + ".self_attn", dim, heads, rng);
    l.attn_norm = LayerNormLayer::Create(store, name + ".attn_norm", dim);
    l.ffn = FeedForward::Create(store, name + ".ffn", dim, ffn_dim, rng);
    l.ffn_norm = LayerNormLayer::Create(store, name + ".ffn_norm", dim);
    return l;
  }

  template <typename Scalar>
  Var Forward(Tape<Scalar>& t, ParameterStore<Scalar>& store, Var x,
              const ForwardContext& ctx) const {
    Var a = Dropout(t, self_attn.Forward(t, store, x, x, false), ctx.dropout, ctx.rng);
    x = attn_norm.Forward(t, store, Add(t, x, a));
    Var f = Dropout(t, ffn.Forward(t, store, x), ctx.dropout, ctx.rng);
    return ffn_norm.Forward(t, store, Add(t, x, f));
  }
};

// Post-norm transformer decoder layer: causal self-attention, attention over
// the encoder states, feed-forward.
struct DecoderLayer {
  MultiHeadAttention self_attn;
  LayerNormLayer self_norm;
  MultiHeadAttention cross_attn;
  LayerNormLayer cross_norm;
  FeedForward ffn;
  LayerNormLayer ffn_norm;

  template <typename Scalar>
  static DecoderLayer Create(ParameterStore<Scalar>& store, const std::string& name,
                             int dim, int heads, int ffn_dim, std::mt19937_64& rng) {
    DecoderLayer l;
    l.self_attn = MultiHeadAttention::Create(store, name + ".self_attn", dim, heads, rng);
    l.self_norm = LayerNormLayer::Create(store, name + ".self_norm", dim);
    l.cross_attn = MultiHeadAttention::Create(store, name + ".cross_attn", dim, heads, rng);
    l.cross_norm = LayerNormLayer::Create(store, name + ".cross_norm", dim);
    l.ffn = FeedForward::Create(store, name + ".ffn", dim, ffn_dim, rng);
    l.ffn_norm = LayerNormLayer::Create(store, name + ".ffn_norm", dim);
    return l;
  }

  template <typename Scalar>
  Var Forward(Tape<Scalar>& t, ParameterStore<Scalar>& store, Var x, Var memory,
              const ForwardContext& ctx) const {
    Var a = Dropout(t, self_attn.Forward(t, store, x, x, true), ctx.dropout, ctx.rng);
    x = self_norm.Forward(t, store, Add(t, x, a));
    Var c = Dropout(t, cross_attn.Forward(t, store, x, memory, false), ctx.dropout, ctx.rng);
    x = cross_norm.Forward(t, store, Add(t, x, c));
    Var f = Dropout(t, ffn.Forward(t, store, x), ctx.dropout, ctx.rng);
    return ffn_norm.Forward(t, store, Add(t, x, f));
  }
};

// PE(pos, 2i) = sin(pos / 10000^(2i/d)), PE(pos, 2i+1) = cos(...).
template <typename Scalar>
Matrix<Scalar> SinusoidalPositionEncoding(int rows, int dim) {
  Matrix<Scalar> pe(rows, dim);
  for (int pos = 0; pos < rows; ++pos) {
    for (int i = 0; i < dim; ++i) {
      const double freq = std::pow(10000.0, -double(2 * (i / 2)) / double(dim));
      pe(pos, i) = static_cast<Scalar>(i % 2 == 0 ? std::sin(pos * freq) : std::cos(pos * freq));
    }
  }
  return pe;
}

}  // namespace bilctc::nn

#endif  // BILCTC_NN_LAYERS_HPP_
