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

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "internal.hpp"
#include "vrads/errors.hpp"
#include "vrads/ops.hpp"
#include "vrads/tensor.hpp"

namespace vrads {
namespace {

constexpr double kNormFloor = 1e-12;

// sum_to that skips the copy when no axis was broadcast.
Tensor reduce_like(const Tensor& g, const Shape& shape) {
  return g.shape() == shape ? g : sum_to(g, shape);
}

Shape keep_shape(const Shape& in, std::uint32_t mask) {
  Shape keep = in;
  for (std::size_t i = 0; i < in.rank(); ++i) {
    if (mask & (1u << i)) keep[i] = 1;
  }
  return keep;
}

Tensor mask_where(const Tensor& a, double lo, double hi) {
  std::vector<double> m(a.size());
  const auto v = a.values();
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = (v[i] >= lo && v[i] <= hi) ? 1.0 : 0.0;
  return Tensor(a.shape(), std::move(m));
}

// Adjoint contributions of node `id` to each of its inputs, in input order.
// Inputs with need[k] == 0 get an unspecified placeholder.
std::vector<Tensor> backward(const Tape& tape, std::int32_t id, const Tensor& g,
                             const std::vector<char>& need) {
  const TapeNode node = tape.node(id);
  const bool n0 = need[0] != 0;
  const bool n1 = need.size() > 1 && need[1] != 0;
  const Tensor out = tape.tensor_at(id);
  std::vector<Tensor> in;
  in.reserve(node.inputs.size());
  for (std::int32_t j : node.inputs) in.push_back(tape.tensor_at(j));
  const OpAttr& at = node.attr;

  switch (node.kind) {
    case OpKind::kLeaf:
    case OpKind::kConstant:
      return {};
    case OpKind::kAdd:
      return {n0 ? reduce_like(g, in[0].shape()) : Tensor(),
              n1 ? reduce_like(g, in[1].shape()) : Tensor()};
    case OpKind::kSub:
      return {n0 ? reduce_like(g, in[0].shape()) : Tensor(),
              n1 ? neg(reduce_like(g, in[1].shape())) : Tensor()};
    case OpKind::kMul:
      return {n0 ? reduce_like(mul(g, in[1]), in[0].shape()) : Tensor(),
              n1 ? reduce_like(mul(g, in[0]), in[1].shape()) : Tensor()};
    case OpKind::kDiv:
      return {n0 ? reduce_like(div(g, in[1]), in[0].shape()) : Tensor(),
              n1 ? neg(reduce_like(div(mul(g, out), in[1]), in[1].shape())) : Tensor()};
    case OpKind::kNeg:
      return {neg(g)};
    case OpKind::kExp:
      return {mul(g, out)};
    case OpKind::kLog:
      return {div(g, in[0])};
    case OpKind::kTanh:
      return {sub(g, mul(g, square(out)))};
    case OpKind::kSigmoid:
      return {mul(g, sub(out, square(out)))};
    case OpKind::kSoftplus:
      return {mul(g, sigmoid(in[0]))};
    case OpKind::kSquare:
      return {scale(mul(g, in[0]), 2.0)};
    case OpKind::kSqrt:
      return {scale(div(g, out), 0.5)};
    case OpKind::kRelu: {
      Tensor m = mask_where(in[0], 0.0, std::numeric_limits<double>::infinity());
      for (std::size_t i = 0; i < m.size(); ++i) {
        if (in[0].values()[i] == 0.0) m.mutable_values()[i] = 0.0;
      }
      return {mul(g, m)};
    }
    case OpKind::kScale:
      return {scale(g, at.a)};
    case OpKind::kAddScalar:
      return {g};
    case OpKind::kClamp:
      return {mul(g, mask_where(in[0], at.a, at.b))};
    case OpKind::kMatMul: {
      const bool ta = at.flag_a;
      const bool tb = at.flag_b;
      Tensor ga;
      Tensor gb;
      if (n0) ga = !ta ? matmul(g, in[1], false, !tb) : matmul(in[1], g, tb, true);
      if (n1) gb = !tb ? matmul(in[0], g, !ta, false) : matmul(g, in[0], true, ta);
      return {ga, gb};
    }
    case OpKind::kTranspose:
      return {transpose(g)};
    case OpKind::kSum: {
      const Shape keep = keep_shape(in[0].shape(), at.axes);
      return {broadcast_to(reshape(g, keep), in[0].shape())};
    }
    case OpKind::kNorm: {
      const Shape keep = keep_shape(in[0].shape(), at.axes);
      Tensor denom = clamp(reshape(out, keep), kNormFloor, std::numeric_limits<double>::max());
      return {mul(in[0], div(reshape(g, keep), denom))};
    }
    case OpKind::kBroadcastTo:
      return {sum_to(g, in[0].shape())};
    case OpKind::kSumTo:
      return {broadcast_to(g, in[0].shape())};
    case OpKind::kReshape:
      return {reshape(g, in[0].shape())};
    case OpKind::kSlice:
      return {pad(g, at.axis, at.start, in[0].dim(at.axis) - at.start - at.extent)};
    case OpKind::kPad:
      return {slice(g, at.axis, at.start, in[0].dim(at.axis))};
    case OpKind::kConcat: {
      std::vector<Tensor> parts;
      std::size_t offset = 0;
      for (std::size_t k = 0; k < in.size(); ++k) {
        const Tensor& p = in[k];
        parts.push_back(need[k] ? slice(g, at.axis, offset, p.dim(at.axis)) : Tensor());
        offset += p.dim(at.axis);
      }
      return parts;
    }
  }
  throw AutodiffError("no gradient rule for operation");
}

std::vector<Tensor> sweep(Tape& tape, const Tensor& scalar, std::span<const Tensor> wrt) {
  const std::int32_t root = scalar.node();
  // reach[i]: node i depends on some wrt tensor.
  std::vector<char> reach(root + 1, 0);
  for (const Tensor& w : wrt) {
    if (w.node() <= root) reach[w.node()] = 1;
  }
  for (std::int32_t i = 0; i <= root; ++i) {
    if (reach[i]) continue;
    for (std::int32_t j : tape.node(i).inputs) {
      if (reach[j]) {
        reach[i] = 1;
        break;
      }
    }
  }

  std::vector<std::optional<Tensor>> adj(root + 1);
  if (reach[root]) adj[root] = Tensor::ones(scalar.shape());
  for (std::int32_t i = root; i >= 0; --i) {
    if (!adj[i] || !reach[i]) continue;
    const std::vector<std::int32_t> inputs = tape.node(i).inputs;
    if (inputs.empty()) continue;
    std::vector<char> need(inputs.size());
    for (std::size_t k = 0; k < inputs.size(); ++k) need[k] = reach[inputs[k]];
    std::vector<Tensor> contrib = backward(tape, i, *adj[i], need);
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      const std::int32_t j = inputs[k];
      if (!reach[j]) continue;
      adj[j] = adj[j] ? add(*adj[j], contrib[k]) : contrib[k];
    }
  }

  std::vector<Tensor> result;
  result.reserve(wrt.size());
  for (const Tensor& w : wrt) {
    const std::int32_t id = w.node();
    if (id <= root && adj[id]) {
      result.push_back(*adj[id]);
    } else {
      result.push_back(Tensor::zeros(w.shape()));
    }
  }
  return result;
}

}  // namespace

std::vector<Tensor> grad(const Tensor& scalar, std::span<const Tensor> wrt, bool create_graph) {
  if (scalar.size() != 1) {
    throw AutodiffError("grad requires a single-element output, got shape " +
                        scalar.shape().str());
  }
  if (!scalar.taped()) throw AutodiffError("grad of a tensor that is not on a tape");
  Tape& tape = *scalar.tape();
  for (const Tensor& w : wrt) {
    if (!w.taped()) throw AutodiffError("grad with respect to a detached tensor");
    if (w.tape() != &tape) throw AutodiffError("grad inputs live on different tapes");
  }
  if (create_graph) {
    std::vector<Tensor> out = sweep(tape, scalar, wrt);
    // Untouched inputs get taped zeros so callers can always differentiate again.
    for (Tensor& t : out) {
      if (!t.taped()) {
        t = tape.record(OpKind::kConstant, {}, t.shape(),
                        std::make_shared<std::vector<double>>(t.size(), 0.0), {});
      }
    }
    return out;
  }
  Tape::Pause pause(tape);
  std::vector<Tensor> out = sweep(tape, scalar, wrt);
  for (Tensor& t : out) t = t.detach();
  return out;
}

}  // namespace vrads
