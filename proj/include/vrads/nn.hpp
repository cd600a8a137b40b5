// Copyright 2026 The vrads Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Named parameters, layers and the LSTM cell.
//
// Layers own their parameters as plain (untaped) tensors. A Context binds a
// subset of parameters to a tape for one forward/backward pass: trainable
// parameters become tape leaves, everything else enters as constants.

#ifndef VRADS_NN_HPP_
#define VRADS_NN_HPP_

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "vrads/tensor.hpp"

namespace vrads {

struct Param {
  std::string name;
  Tensor value;
};

using ParamList = std::vector<Param*>;

class Context {
 public:
  // Parameters in `trainable` become leaves of `tape`.
  Context(Tape& tape, const ParamList& trainable);

  Tape& tape() const { return *tape_; }
  // Tape view of `p`: a leaf when trainable, the raw value otherwise.
  const Tensor& get(const Param& p) const;
  // Leaves for `params`, all of which must be trainable in this context.
  std::vector<Tensor> leaves(const ParamList& params) const;

 private:
  Tape* tape_;
  std::unordered_map<const Param*, Tensor> leaves_;
};

// Value of `p` inside `ctx`, or the raw value when there is no context.
inline const Tensor& bind(const Context* ctx, const Param& p) {
  return ctx != nullptr ? ctx->get(p) : p.value;
}

enum class Activation { kLinear, kTanh, kRelu, kSigmoid, kSoftplus };

Activation parse_activation(const std::string& s);
Tensor apply_activation(Activation act, const Tensor& x);

struct Initializer {
  enum class Scheme { kXavierUniform, kNormal };
  Scheme scheme = Scheme::kXavierUniform;
  double stddev = 0.01;
  std::uint64_t seed = 0;
};

// Draws a [fan_out x fan_in] weight matrix. `stream` separates the draws of
// different tensors under one seed.
Tensor init_weight(std::size_t fan_out, std::size_t fan_in, const Initializer& init,
                   std::uint64_t stream);
double xavier_bound(std::size_t fan_in, std::size_t fan_out);

struct DenseLayer {
  Param weight;  // [out x in]
  Param bias;    // [out]
  Activation activation = Activation::kLinear;

  std::size_t in() const { return weight.value.dim(1); }
  std::size_t out() const { return weight.value.dim(0); }
  void collect(ParamList& out);
};

DenseLayer make_dense(const std::string& name, std::size_t in, std::size_t out,
                      Activation act, const Initializer& init);
// activation(x W^T + b) for x of shape [batch x in].
Tensor dense_forward(const DenseLayer& layer, const Tensor& x, const Context* ctx = nullptr);

using Mlp = std::vector<DenseLayer>;

// Hidden layers use `hidden_act`, the last layer `out_act`. `widths` lists
// the hidden widths; an empty list gives a single layer in -> out.
Mlp make_mlp(const std::string& name, std::size_t in, const std::vector<std::size_t>& widths,
             std::size_t out, Activation hidden_act, Activation out_act,
             const Initializer& init);
Tensor mlp_forward(const Mlp& layers, const Tensor& x, const Context* ctx = nullptr);
void collect(Mlp& layers, ParamList& out);

struct LatentDist {
  Tensor mu;
  Tensor sigma;
};

// Trunk MLP followed by a linear mean head and a softplus scale head.
struct GaussianHead {
  Mlp trunk;
  DenseLayer mu;
  DenseLayer sigma;
  double floor = 1e-6;

  void collect(ParamList& out);
};

GaussianHead make_gaussian_head(const std::string& name, std::size_t in,
                                const std::vector<std::size_t>& trunk_widths,
                                std::size_t out, const Initializer& init);
LatentDist gaussian_forward(const GaussianHead& head, const Tensor& x,
                            const Context* ctx = nullptr);

// Gates are stacked in the order input, forget, candidate, output.
struct LstmCell {
  Param w_ih;  // [4H x I]
  Param w_hh;  // [4H x H]
  Param bias;  // [4H]

  std::size_t input_size() const { return w_ih.value.dim(1); }
  std::size_t hidden_size() const { return w_hh.value.dim(1); }
  void collect(ParamList& out);
};

LstmCell make_lstm(const std::string& name, std::size_t input, std::size_t hidden,
                   const Initializer& init, double forget_bias = 0.0);

struct LstmState {
  Tensor h;
  Tensor c;
};

LstmState lstm_zero_state(std::size_t batch, std::size_t hidden);
LstmState lstm_step(const LstmCell& cell, const Tensor& x, const LstmState& state,
                    const Context* ctx = nullptr);

// Order-sensitive FNV-1a digest of names, shapes and raw value bytes.
std::uint64_t hash_params(const ParamList& params);
std::string hex64(std::uint64_t v);

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

// Binary checkpoint; the layout is described in docs/checkpoint-format.md.
void save_tensors(const std::string& path, const NamedTensors& tensors);
NamedTensors load_tensors(const std::string& path);

NamedTensors snapshot(const ParamList& params);
// Copies values by name. Missing names or shape mismatches throw.
void restore(const ParamList& params, const NamedTensors& tensors);

}  // namespace vrads

#endif  // VRADS_NN_HPP_
