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

#include <cmath>
#include <string>

#include "vrads/errors.hpp"
#include "vrads/nn.hpp"
#include "vrads/ops.hpp"
#include "vrads/rng.hpp"

namespace vrads {

Context::Context(Tape& tape, const ParamList& trainable) : tape_(&tape) {
  for (const Param* p : trainable) {
    if (leaves_.count(p) == 0) leaves_.emplace(p, tape.leaf(p->value));
  }
}

const Tensor& Context::get(const Param& p) const {
  auto it = leaves_.find(&p);
  return it != leaves_.end() ? it->second : p.value;
}

std::vector<Tensor> Context::leaves(const ParamList& params) const {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const Param* p : params) {
    auto it = leaves_.find(p);
    if (it == leaves_.end()) {
      throw AutodiffError("parameter " + p->name + " is not trainable in this context");
    }
    out.push_back(it->second);
  }
  return out;
}

Activation parse_activation(const std::string& s) {
  if (s == "linear") return Activation::kLinear;
  if (s == "tanh") return Activation::kTanh;
  if (s == "relu") return Activation::kRelu;
  if (s == "sigmoid") return Activation::kSigmoid;
  if (s == "softplus") return Activation::kSoftplus;
  throw ConfigError("unknown activation '" + s + "'");
}

Tensor apply_activation(Activation act, const Tensor& x) {
  switch (act) {
    case Activation::kLinear: return x;
    case Activation::kTanh: return tanh(x);
    case Activation::kRelu: return relu(x);
    case Activation::kSigmoid: return sigmoid(x);
    case Activation::kSoftplus: return softplus(x);
  }
  return x;
}

double xavier_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

Tensor init_weight(std::size_t fan_out, std::size_t fan_in, const Initializer& init,
                   std::uint64_t stream) {
  if (fan_in == 0 || fan_out == 0) throw ShapeError("layer sizes must be positive");
  Rng rng(mix_seed({init.seed, stream}));
  std::vector<double> w(fan_out * fan_in);
  if (init.scheme == Initializer::Scheme::kXavierUniform) {
    const double b = xavier_bound(fan_in, fan_out);
    for (double& v : w) v = rng.uniform(-b, b);
  } else {
    for (double& v : w) v = rng.normal(0.0, init.stddev);
  }
  return Tensor(Shape{fan_out, fan_in}, std::move(w));
}

void DenseLayer::collect(ParamList& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

DenseLayer make_dense(const std::string& name, std::size_t in, std::size_t out,
                      Activation act, const Initializer& init) {
  DenseLayer layer;
  layer.weight = {name + ".weight", init_weight(out, in, init, hash_string(name))};
  layer.bias = {name + ".bias", Tensor::zeros({out})};
  layer.activation = act;
  return layer;
}

Tensor dense_forward(const DenseLayer& layer, const Tensor& x, const Context* ctx) {
  if (x.rank() != 2 || x.dim(1) != layer.in()) {
    throw ShapeError("dense layer " + layer.weight.name + " expects [batch x " +
                     std::to_string(layer.in()) + "], got " + x.shape().str());
  }
  const Tensor pre = matmul(x, bind(ctx, layer.weight), false, true) + bind(ctx, layer.bias);
  return apply_activation(layer.activation, pre);
}

Mlp make_mlp(const std::string& name, std::size_t in, const std::vector<std::size_t>& widths,
             std::size_t out, Activation hidden_act, Activation out_act,
             const Initializer& init) {
  Mlp layers;
  std::size_t prev = in;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    layers.push_back(make_dense(name + "." + std::to_string(i), prev, widths[i], hidden_act, init));
    prev = widths[i];
  }
  layers.push_back(make_dense(name + "." + std::to_string(widths.size()), prev, out, out_act, init));
  return layers;
}

Tensor mlp_forward(const Mlp& layers, const Tensor& x, const Context* ctx) {
  Tensor h = x;
  for (const DenseLayer& layer : layers) h = dense_forward(layer, h, ctx);
  return h;
}

void collect(Mlp& layers, ParamList& out) {
  for (DenseLayer& layer : layers) layer.collect(out);
}

void GaussianHead::collect(ParamList& out) {
  vrads::collect(trunk, out);
  mu.collect(out);
  sigma.collect(out);
}

GaussianHead make_gaussian_head(const std::string& name, std::size_t in,
                                const std::vector<std::size_t>& trunk_widths,
                                std::size_t out, const Initializer& init) {
  GaussianHead head;
  std::size_t prev = in;
  for (std::size_t i = 0; i < trunk_widths.size(); ++i) {
    head.trunk.push_back(make_dense(name + ".trunk." + std::to_string(i), prev, trunk_widths[i],
                                    Activation::kTanh, init));
    prev = trunk_widths[i];
  }
  head.mu = make_dense(name + ".mu", prev, out, Activation::kLinear, init);
  head.sigma = make_dense(name + ".sigma", prev, out, Activation::kSoftplus, init);
  return head;
}

LatentDist gaussian_forward(const GaussianHead& head, const Tensor& x, const Context* ctx) {
  const Tensor h = mlp_forward(head.trunk, x, ctx);
  return {dense_forward(head.mu, h, ctx), add_scalar(dense_forward(head.sigma, h, ctx), head.floor)};
}

void LstmCell::collect(ParamList& out) {
  out.push_back(&w_ih);
  out.push_back(&w_hh);
  out.push_back(&bias);
}

LstmCell make_lstm(const std::string& name, std::size_t input, std::size_t hidden,
                   const Initializer& init, double forget_bias) {
  if (input == 0 || hidden == 0) throw ShapeError("LSTM sizes must be positive");
  LstmCell cell;
  // Fan sizes follow the [in x 4H] convention for the stacked gate kernel.
  Initializer ih = init;
  ih.seed = mix_seed({init.seed, hash_string(name + ".w_ih")});
  Tensor w_ih = init_weight(4 * hidden, input, ih, 0);
  Initializer hh = init;
  hh.seed = mix_seed({init.seed, hash_string(name + ".w_hh")});
  cell.w_ih = {name + ".w_ih", std::move(w_ih)};
  cell.w_hh = {name + ".w_hh", init_weight(4 * hidden, hidden, hh, 0)};
  std::vector<double> b(4 * hidden, 0.0);
  for (std::size_t i = hidden; i < 2 * hidden; ++i) b[i] = forget_bias;
  cell.bias = {name + ".bias", Tensor(Shape{4 * hidden}, std::move(b))};
  return cell;
}

LstmState lstm_zero_state(std::size_t batch, std::size_t hidden) {
  return {Tensor::zeros({batch, hidden}), Tensor::zeros({batch, hidden})};
}

LstmState lstm_step(const LstmCell& cell, const Tensor& x, const LstmState& state,
                    const Context* ctx) {
  const std::size_t hidden = cell.hidden_size();
  if (x.rank() != 2 || x.dim(1) != cell.input_size()) {
    throw ShapeError("LSTM " + cell.w_ih.name + " expects input width " +
                     std::to_string(cell.input_size()) + ", got " + x.shape().str());
  }
  if (state.h.rank() != 2 || state.h.dim(1) != hidden || state.h.dim(0) != x.dim(0) ||
      state.c.shape() != state.h.shape()) {
    throw ShapeError("LSTM state shape mismatch: " + state.h.shape().str());
  }
  const Tensor gates = matmul(x, bind(ctx, cell.w_ih), false, true) +
                       matmul(state.h, bind(ctx, cell.w_hh), false, true) +
                       bind(ctx, cell.bias);
  const Tensor i = sigmoid(slice(gates, 1, 0, hidden));
  const Tensor f = sigmoid(slice(gates, 1, hidden, hidden));
  const Tensor g = tanh(slice(gates, 1, 2 * hidden, hidden));
  const Tensor o = sigmoid(slice(gates, 1, 3 * hidden, hidden));
  const Tensor c = f * state.c + i * g;
  return {o * tanh(c), c};
}

}  // namespace vrads
