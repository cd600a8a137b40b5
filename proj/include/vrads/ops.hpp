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

// Differentiable tensor operations. Every function records itself on the tape
// of its taped inputs (when that tape is recording) and throws ShapeError,
// DomainError, AxisError or NumericError on invalid input. Results are
// guaranteed finite.

#ifndef VRADS_OPS_HPP_
#define VRADS_OPS_HPP_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "vrads/tensor.hpp"

namespace vrads {

enum class UnaryKind { kExp, kLog, kTanh, kSigmoid, kSoftplus, kSquare, kSqrt, kNeg, kRelu };
enum class BinaryKind { kAdd, kSub, kMul, kDiv };
enum class ReduceKind { kSum, kMean, kL2Norm };

// Binary operations broadcast numpy-style (shapes are aligned on trailing
// axes; extents must match or be 1).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor neg(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);  // requires a > 0
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor softplus(const Tensor& a);
Tensor square(const Tensor& a);
Tensor sqrt(const Tensor& a);  // requires a > 0
Tensor relu(const Tensor& a);

Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);
// Gradient passes where lo <= a <= hi and is zero elsewhere.
Tensor clamp(const Tensor& a, double lo, double hi);

Tensor elementwise(UnaryKind kind, const Tensor& a);
Tensor elementwise(BinaryKind kind, const Tensor& a, const Tensor& b);

// op(a) * op(b) for 2-D operands, op = transpose when the flag is set.
Tensor matmul(const Tensor& a, const Tensor& b, bool transpose_a = false,
              bool transpose_b = false);
Tensor transpose(const Tensor& a);

Tensor sum(const Tensor& a);
Tensor sum(const Tensor& a, std::initializer_list<std::size_t> axes,
           bool keepdims = false);
Tensor sum(const Tensor& a, std::span<const std::size_t> axes, bool keepdims = false);
Tensor mean(const Tensor& a);
Tensor mean(const Tensor& a, std::initializer_list<std::size_t> axes,
            bool keepdims = false);
// Euclidean norm over the given axes (all axes when empty). The gradient at a
// zero vector is taken as zero.
Tensor l2_norm(const Tensor& a, std::initializer_list<std::size_t> axes = {});
Tensor reduce(ReduceKind kind, const Tensor& a, std::span<const std::size_t> axes);

Tensor reshape(const Tensor& a, Shape shape);
Tensor broadcast_to(const Tensor& a, Shape shape);
// Sums broadcast axes away so the result has `shape`; inverse of broadcast_to.
Tensor sum_to(const Tensor& a, Shape shape);
Tensor slice(const Tensor& a, std::size_t axis, std::size_t start, std::size_t extent);
Tensor pad(const Tensor& a, std::size_t axis, std::size_t before, std::size_t after);
Tensor concat(std::span<const Tensor> parts, std::size_t axis);
Tensor concat(std::initializer_list<Tensor> parts, std::size_t axis);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
inline Tensor operator-(const Tensor& a) { return neg(a); }
inline Tensor operator*(double c, const Tensor& a) { return scale(a, c); }
inline Tensor operator*(const Tensor& a, double c) { return scale(a, c); }
inline Tensor operator+(const Tensor& a, double c) { return add_scalar(a, c); }
inline Tensor operator-(const Tensor& a, double c) { return add_scalar(a, -c); }

// Numerically stable scalar helpers shared by kernels and tests.
double stable_sigmoid(double x);
double stable_softplus(double x);

}  // namespace vrads

#endif  // VRADS_OPS_HPP_
