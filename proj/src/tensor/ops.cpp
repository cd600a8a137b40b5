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

#include "vrads/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "internal.hpp"
#include "vrads/errors.hpp"

namespace vrads {
namespace {

using Buffer = std::shared_ptr<std::vector<double>>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Dims4 = std::array<std::size_t, 4>;

Buffer alloc(std::size_t n) { return std::make_shared<std::vector<double>>(n); }

// Tape to record on, or nullptr when no input is taped or recording is off.
Tape* active_tape(std::initializer_list<const Tensor*> inputs) {
  Tape* tape = nullptr;
  for (const Tensor* t : inputs) {
    if (!t->taped()) continue;
    if (tape != nullptr && tape != t->tape()) {
      throw AutodiffError("operation mixes tensors from different tapes");
    }
    tape = t->tape();
  }
  return (tape != nullptr && tape->recording()) ? tape : nullptr;
}

void check_finite(const std::vector<double>& v) {
  // x * 0 is NaN exactly when x is not finite; four lanes keep it vectorized.
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t n = v.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (std::size_t k = 0; k < 4; ++k) acc[k] += v[i + k] * 0.0;
  }
  for (; i < n; ++i) acc[0] += v[i] * 0.0;
  if (acc[0] + acc[1] + acc[2] + acc[3] != 0.0) {
    throw NumericError("operation produced a non-finite value");
  }
}

Tensor finish(OpKind kind, std::initializer_list<const Tensor*> inputs, Shape shape,
              Buffer out, const OpAttr& attr = {}) {
  check_finite(*out);
  Tape* tape = active_tape(inputs);
  if (tape == nullptr) return TensorFactory::make(shape, std::move(out));
  return tape->record(kind, std::span<const Tensor* const>(inputs.begin(), inputs.size()),
                      shape, std::move(out), attr);
}

// Right-aligns `s` into four dimensions.
Dims4 pad4(const Shape& s) {
  Dims4 d{1, 1, 1, 1};
  const std::size_t off = 4 - s.rank();
  for (std::size_t i = 0; i < s.rank(); ++i) d[off + i] = s[i];
  return d;
}

Dims4 strides4(const Dims4& d) {
  return {d[1] * d[2] * d[3], d[2] * d[3], d[3], 1};
}

Shape broadcast_shape(const Shape& a, const Shape& b) {
  const std::size_t rank = std::max(a.rank(), b.rank());
  std::array<std::size_t, 4> dims{};
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t da = i < rank - a.rank() ? 1 : a[i - (rank - a.rank())];
    const std::size_t db = i < rank - b.rank() ? 1 : b[i - (rank - b.rank())];
    if (da != db && da != 1 && db != 1) {
      throw ShapeError("cannot broadcast " + a.str() + " with " + b.str());
    }
    dims[i] = (da == 1) ? db : da;
  }
  return Shape(std::span<const std::size_t>(dims.data(), rank));
}

// Strides of `in` viewed inside the 4-D `out` box; broadcast axes get 0.
Dims4 broadcast_strides(const Shape& in, const Dims4& out) {
  const Dims4 d = pad4(in);
  Dims4 s = strides4(d);
  for (int i = 0; i < 4; ++i) {
    if (d[i] == 1 && out[i] != 1) s[i] = 0;
  }
  return s;
}

template <class F>
Tensor binary(OpKind kind, const Tensor& a, const Tensor& b, F f) {
  const double* pa = a.data();
  const double* pb = b.data();
  if (a.shape() == b.shape()) {
    const std::size_t n = a.size();
    Buffer out = alloc(n);
    double* po = out->data();
    for (std::size_t i = 0; i < n; ++i) po[i] = f(pa[i], pb[i]);
    return finish(kind, {&a, &b}, a.shape(), std::move(out));
  }
  const Shape shape = broadcast_shape(a.shape(), b.shape());
  Buffer out = alloc(shape.numel());
  double* po = out->data();
  const Dims4 od = pad4(shape);
  const Dims4 sa = broadcast_strides(a.shape(), od);
  const Dims4 sb = broadcast_strides(b.shape(), od);
  for (std::size_t i0 = 0; i0 < od[0]; ++i0) {
    for (std::size_t i1 = 0; i1 < od[1]; ++i1) {
      for (std::size_t i2 = 0; i2 < od[2]; ++i2) {
        const double* ra = pa + i0 * sa[0] + i1 * sa[1] + i2 * sa[2];
        const double* rb = pb + i0 * sb[0] + i1 * sb[1] + i2 * sb[2];
        if (sa[3] == 1 && sb[3] == 1) {
          for (std::size_t i3 = 0; i3 < od[3]; ++i3) *po++ = f(ra[i3], rb[i3]);
        } else {
          for (std::size_t i3 = 0; i3 < od[3]; ++i3) {
            *po++ = f(ra[i3 * sa[3]], rb[i3 * sb[3]]);
          }
        }
      }
    }
  }
  return finish(kind, {&a, &b}, shape, std::move(out));
}

template <class F>
Tensor unary(OpKind kind, const Tensor& a, F f, const OpAttr& attr = {}) {
  const std::size_t n = a.size();
  Buffer out = alloc(n);
  const double* pa = a.data();
  double* po = out->data();
  for (std::size_t i = 0; i < n; ++i) po[i] = f(pa[i]);
  return finish(kind, {&a}, a.shape(), std::move(out), attr);
}

// Sums `in` (4-D dims `id`) into `out` (4-D dims `od`, each 1 or equal).
void reduce_into(const double* in, const Dims4& id, double* out, const Dims4& od) {
  Dims4 os = strides4(od);
  for (int i = 0; i < 4; ++i) {
    if (od[i] == 1) os[i] = 0;
  }
  for (std::size_t i0 = 0; i0 < id[0]; ++i0) {
    for (std::size_t i1 = 0; i1 < id[1]; ++i1) {
      for (std::size_t i2 = 0; i2 < id[2]; ++i2) {
        double* ro = out + i0 * os[0] + i1 * os[1] + i2 * os[2];
        if (os[3] == 0) {
          double acc = 0.0;
          for (std::size_t i3 = 0; i3 < id[3]; ++i3) acc += in[i3];
          ro[0] += acc;
        } else {
          for (std::size_t i3 = 0; i3 < id[3]; ++i3) ro[i3] += in[i3];
        }
        in += id[3];
      }
    }
  }
}

std::uint32_t axes_mask(const Shape& shape, std::span<const std::size_t> axes) {
  if (axes.empty()) return (1u << shape.rank()) - 1u;
  std::uint32_t mask = 0;
  for (std::size_t ax : axes) {
    if (ax >= shape.rank()) {
      throw AxisError("axis " + std::to_string(ax) + " invalid for shape " + shape.str());
    }
    mask |= 1u << ax;
  }
  return mask;
}

// Output shapes of a reduction: kept-dims variant and final variant.
void reduced_shapes(const Shape& in, std::uint32_t mask, Shape* keep, Shape* out) {
  std::array<std::size_t, 4> k{};
  std::array<std::size_t, 4> o{};
  std::size_t orank = 0;
  for (std::size_t i = 0; i < in.rank(); ++i) {
    const bool reduced = mask & (1u << i);
    k[i] = reduced ? 1 : in[i];
    if (!reduced) o[orank++] = in[i];
  }
  *keep = Shape(std::span<const std::size_t>(k.data(), in.rank()));
  *out = Shape(std::span<const std::size_t>(o.data(), orank));
}

Buffer sum_kernel(const Tensor& a, const Shape& keep) {
  Buffer out = alloc(keep.numel());
  if (a.size() == 0) return out;
  reduce_into(a.data(), pad4(a.shape()), out->data(), pad4(keep));
  return out;
}

// (outer, extent, inner) factorisation around `axis`.
void split_axis(const Shape& s, std::size_t axis, std::size_t* outer, std::size_t* inner) {
  *outer = 1;
  *inner = 1;
  for (std::size_t i = 0; i < axis; ++i) *outer *= s[i];
  for (std::size_t i = axis + 1; i < s.rank(); ++i) *inner *= s[i];
}

// Vectorized exp/log over aligned scratch padded to whole packets, so every
// element takes the same code path regardless of its position.
template <class F>
void packet_apply(const double* in, double* out, std::size_t n, F f) {
  constexpr std::size_t kBlock = 16;
  const auto padded = static_cast<Eigen::Index>((n + kBlock - 1) / kBlock * kBlock);
  thread_local Eigen::ArrayXd src;
  thread_local Eigen::ArrayXd dst;
  if (src.size() < padded) {
    src.resize(padded);
    dst.resize(padded);
  }
  std::copy_n(in, n, src.data());
  std::fill(src.data() + n, src.data() + padded, 0.0);
  dst.head(padded) = f(src.head(padded));
  std::copy_n(dst.data(), n, out);
}

void vexp(const double* in, double* out, std::size_t n) {
  // The packet kernel clamps its argument; libm handles the subnormal range.
  std::vector<std::pair<std::size_t, double>> tiny;
  for (std::size_t i = 0; i < n; ++i) {
    if (in[i] < -708.0) tiny.emplace_back(i, std::exp(in[i]));
  }
  packet_apply(in, out, n, [](const auto& x) { return x.exp(); });
  for (const auto& [i, v] : tiny) out[i] = v;
}

void vlog(const double* in, double* out, std::size_t n) {
  packet_apply(in, out, n, [](const auto& x) { return x.log(); });
}

// exp(-|x|) for every element.
std::vector<double> exp_neg_abs(const Tensor& a, double factor) {
  const std::size_t n = a.size();
  std::vector<double> e(n);
  const double* pa = a.data();
  for (std::size_t i = 0; i < n; ++i) e[i] = -factor * std::abs(pa[i]);
  vexp(e.data(), e.data(), n);
  return e;
}

}  // namespace

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(OpKind::kAdd, a, b, [](double x, double y) { return x + y; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(OpKind::kSub, a, b, [](double x, double y) { return x - y; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(OpKind::kMul, a, b, [](double x, double y) { return x * y; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary(OpKind::kDiv, a, b, [](double x, double y) { return x / y; });
}

Tensor neg(const Tensor& a) {
  return unary(OpKind::kNeg, a, [](double x) { return -x; });
}

Tensor exp(const Tensor& a) {
  Buffer out = alloc(a.size());
  vexp(a.data(), out->data(), a.size());
  return finish(OpKind::kExp, {&a}, a.shape(), std::move(out));
}

Tensor log(const Tensor& a) {
  for (double v : a.values()) {
    if (!(v > 0.0)) throw DomainError("log of non-positive value " + std::to_string(v));
  }
  Buffer out = alloc(a.size());
  vlog(a.data(), out->data(), a.size());
  return finish(OpKind::kLog, {&a}, a.shape(), std::move(out));
}

Tensor tanh(const Tensor& a) {
  const std::size_t n = a.size();
  const std::vector<double> e = exp_neg_abs(a, 2.0);
  Buffer out = alloc(n);
  const double* pa = a.data();
  double* po = out->data();
  for (std::size_t i = 0; i < n; ++i) {
    const double x = pa[i];
    if (std::abs(x) < 0.04) {
      // Taylor series; the closed form below cancels badly near zero.
      const double x2 = x * x;
      po[i] = x * (1.0 + x2 * (-1.0 / 3 + x2 * (2.0 / 15 + x2 * (-17.0 / 315 + x2 * 62.0 / 2835))));
    } else {
      const double t = (1.0 - e[i]) / (1.0 + e[i]);
      po[i] = x < 0 ? -t : t;
    }
  }
  return finish(OpKind::kTanh, {&a}, a.shape(), std::move(out));
}

Tensor sigmoid(const Tensor& a) {
  const std::size_t n = a.size();
  const std::vector<double> e = exp_neg_abs(a, 1.0);
  Buffer out = alloc(n);
  const double* pa = a.data();
  double* po = out->data();
  for (std::size_t i = 0; i < n; ++i) {
    const double r = 1.0 / (1.0 + e[i]);
    po[i] = pa[i] >= 0 ? r : e[i] * r;
  }
  return finish(OpKind::kSigmoid, {&a}, a.shape(), std::move(out));
}

Tensor softplus(const Tensor& a) {
  const std::size_t n = a.size();
  const std::vector<double> e = exp_neg_abs(a, 1.0);
  std::vector<double> l(n);
  for (std::size_t i = 0; i < n; ++i) l[i] = 1.0 + e[i];
  vlog(l.data(), l.data(), n);
  Buffer out = alloc(n);
  const double* pa = a.data();
  double* po = out->data();
  for (std::size_t i = 0; i < n; ++i) {
    const double ei = e[i];
    // log1p(e) by series when 1 + e would round away most of e.
    const double lp =
        ei < 1e-3 ? ei * (1.0 - ei * (0.5 - ei * (1.0 / 3 - ei * (0.25 - ei * 0.2)))) : l[i];
    po[i] = std::max(pa[i], 0.0) + lp;
  }
  return finish(OpKind::kSoftplus, {&a}, a.shape(), std::move(out));
}

Tensor square(const Tensor& a) {
  return unary(OpKind::kSquare, a, [](double x) { return x * x; });
}

Tensor sqrt(const Tensor& a) {
  for (double v : a.values()) {
    if (!(v > 0.0)) throw DomainError("sqrt of non-positive value " + std::to_string(v));
  }
  return unary(OpKind::kSqrt, a, [](double x) { return std::sqrt(x); });
}

Tensor relu(const Tensor& a) {
  return unary(OpKind::kRelu, a, [](double x) { return x > 0.0 ? x : 0.0; });
}

Tensor scale(const Tensor& a, double c) {
  OpAttr attr;
  attr.a = c;
  return unary(OpKind::kScale, a, [c](double x) { return c * x; }, attr);
}

Tensor add_scalar(const Tensor& a, double c) {
  OpAttr attr;
  attr.a = c;
  return unary(OpKind::kAddScalar, a, [c](double x) { return x + c; }, attr);
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  if (lo > hi) throw DomainError("clamp with lo > hi");
  OpAttr attr;
  attr.a = lo;
  attr.b = hi;
  return unary(OpKind::kClamp, a, [lo, hi](double x) { return std::clamp(x, lo, hi); }, attr);
}

Tensor elementwise(UnaryKind kind, const Tensor& a) {
  switch (kind) {
    case UnaryKind::kExp: return exp(a);
    case UnaryKind::kLog: return log(a);
    case UnaryKind::kTanh: return tanh(a);
    case UnaryKind::kSigmoid: return sigmoid(a);
    case UnaryKind::kSoftplus: return softplus(a);
    case UnaryKind::kSquare: return square(a);
    case UnaryKind::kSqrt: return sqrt(a);
    case UnaryKind::kNeg: return neg(a);
    case UnaryKind::kRelu: return relu(a);
  }
  throw Error("unknown unary kind");
}

Tensor elementwise(BinaryKind kind, const Tensor& a, const Tensor& b) {
  switch (kind) {
    case BinaryKind::kAdd: return add(a, b);
    case BinaryKind::kSub: return sub(a, b);
    case BinaryKind::kMul: return mul(a, b);
    case BinaryKind::kDiv: return div(a, b);
  }
  throw Error("unknown binary kind");
}

Tensor matmul(const Tensor& a, const Tensor& b, bool transpose_a, bool transpose_b) {
  if (a.rank() != 2 || b.rank() != 2) {
    throw ShapeError("matmul expects 2-D operands, got " + a.shape().str() + " and " +
                     b.shape().str());
  }
  const std::size_t m = transpose_a ? a.dim(1) : a.dim(0);
  const std::size_t k = transpose_a ? a.dim(0) : a.dim(1);
  const std::size_t kb = transpose_b ? b.dim(1) : b.dim(0);
  const std::size_t n = transpose_b ? b.dim(0) : b.dim(1);
  if (k != kb) {
    throw ShapeError("matmul inner dimensions differ: " + a.shape().str() + " vs " +
                     b.shape().str());
  }
  Buffer out = alloc(m * n);
  Eigen::Map<const RowMatrix> ma(a.data(), a.dim(0), a.dim(1));
  Eigen::Map<const RowMatrix> mb(b.data(), b.dim(0), b.dim(1));
  Eigen::Map<RowMatrix> mo(out->data(), m, n);
  if (k == 0) {
    mo.setZero();
  } else if (!transpose_a && !transpose_b) {
    mo.noalias() = ma * mb;
  } else if (!transpose_a && transpose_b) {
    mo.noalias() = ma * mb.transpose();
  } else if (transpose_a && !transpose_b) {
    mo.noalias() = ma.transpose() * mb;
  } else {
    mo.noalias() = ma.transpose() * mb.transpose();
  }
  OpAttr attr;
  attr.flag_a = transpose_a;
  attr.flag_b = transpose_b;
  return finish(OpKind::kMatMul, {&a, &b}, Shape{m, n}, std::move(out), attr);
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw ShapeError("transpose expects a 2-D tensor");
  const std::size_t m = a.dim(0);
  const std::size_t n = a.dim(1);
  Buffer out = alloc(m * n);
  const double* pa = a.data();
  double* po = out->data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) po[j * m + i] = pa[i * n + j];
  }
  return finish(OpKind::kTranspose, {&a}, Shape{n, m}, std::move(out));
}

Tensor sum(const Tensor& a) { return sum(a, std::span<const std::size_t>{}, false); }

Tensor sum(const Tensor& a, std::initializer_list<std::size_t> axes, bool keepdims) {
  return sum(a, std::span<const std::size_t>(axes.begin(), axes.size()), keepdims);
}

Tensor sum(const Tensor& a, std::span<const std::size_t> axes, bool keepdims) {
  const std::uint32_t mask = axes_mask(a.shape(), axes);
  Shape keep;
  Shape out_shape;
  reduced_shapes(a.shape(), mask, &keep, &out_shape);
  OpAttr attr;
  attr.axes = mask;
  attr.flag_a = keepdims;
  return finish(OpKind::kSum, {&a}, keepdims ? keep : out_shape, sum_kernel(a, keep), attr);
}

Tensor mean(const Tensor& a) {
  if (a.size() == 0) throw EmptyReductionError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor mean(const Tensor& a, std::initializer_list<std::size_t> axes, bool keepdims) {
  const std::uint32_t mask =
      axes_mask(a.shape(), std::span<const std::size_t>(axes.begin(), axes.size()));
  std::size_t count = 1;
  for (std::size_t i = 0; i < a.rank(); ++i) {
    if (mask & (1u << i)) count *= a.dim(i);
  }
  if (count == 0) throw EmptyReductionError("mean over an empty set of elements");
  return scale(sum(a, axes, keepdims), 1.0 / static_cast<double>(count));
}

Tensor l2_norm(const Tensor& a, std::initializer_list<std::size_t> axes) {
  const std::uint32_t mask =
      axes_mask(a.shape(), std::span<const std::size_t>(axes.begin(), axes.size()));
  Shape keep;
  Shape out_shape;
  reduced_shapes(a.shape(), mask, &keep, &out_shape);
  Buffer out = alloc(keep.numel());
  if (a.size() != 0) {
    std::vector<double> sq(a.size());
    const double* pa = a.data();
    for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = pa[i] * pa[i];
    reduce_into(sq.data(), pad4(a.shape()), out->data(), pad4(keep));
  }
  for (double& v : *out) v = std::sqrt(v);
  OpAttr attr;
  attr.axes = mask;
  return finish(OpKind::kNorm, {&a}, out_shape, std::move(out), attr);
}

Tensor reduce(ReduceKind kind, const Tensor& a, std::span<const std::size_t> axes) {
  switch (kind) {
    case ReduceKind::kSum:
      return sum(a, axes, false);
    case ReduceKind::kMean: {
      const std::uint32_t mask = axes_mask(a.shape(), axes);
      std::size_t count = 1;
      for (std::size_t i = 0; i < a.rank(); ++i) {
        if (mask & (1u << i)) count *= a.dim(i);
      }
      if (count == 0) throw EmptyReductionError("mean over an empty set of elements");
      return scale(sum(a, axes, false), 1.0 / static_cast<double>(count));
    }
    case ReduceKind::kL2Norm: {
      if (axes.empty()) return l2_norm(a);
      if (axes.size() == 1) return l2_norm(a, {axes[0]});
      if (axes.size() == 2) return l2_norm(a, {axes[0], axes[1]});
      if (axes.size() == 3) return l2_norm(a, {axes[0], axes[1], axes[2]});
      return l2_norm(a, {axes[0], axes[1], axes[2], axes[3]});
    }
  }
  throw Error("unknown reduce kind");
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape.numel() != a.size()) {
    throw ShapeError("cannot reshape " + a.shape().str() + " to " + shape.str());
  }
  Tape* tape = active_tape({&a});
  // Storage is shared; only the shape changes.
  Buffer data = TensorFactory::storage(a);
  if (tape == nullptr) return TensorFactory::make(shape, std::move(data));
  const Tensor* in[] = {&a};
  return tape->record(OpKind::kReshape, in, shape, std::move(data), {});
}

Tensor broadcast_to(const Tensor& a, Shape shape) {
  if (broadcast_shape(a.shape(), shape) != shape) {
    throw ShapeError("cannot broadcast " + a.shape().str() + " to " + shape.str());
  }
  if (a.shape() == shape) {
    return finish(OpKind::kBroadcastTo, {&a}, shape,
                  std::make_shared<std::vector<double>>(a.values().begin(), a.values().end()));
  }
  const Dims4 od = pad4(shape);
  const Dims4 sa = broadcast_strides(a.shape(), od);
  Buffer out = alloc(shape.numel());
  double* po = out->data();
  const double* pa = a.data();
  for (std::size_t i0 = 0; i0 < od[0]; ++i0) {
    for (std::size_t i1 = 0; i1 < od[1]; ++i1) {
      for (std::size_t i2 = 0; i2 < od[2]; ++i2) {
        const double* ra = pa + i0 * sa[0] + i1 * sa[1] + i2 * sa[2];
        for (std::size_t i3 = 0; i3 < od[3]; ++i3) *po++ = ra[i3 * sa[3]];
      }
    }
  }
  return finish(OpKind::kBroadcastTo, {&a}, shape, std::move(out));
}

Tensor sum_to(const Tensor& a, Shape shape) {
  if (broadcast_shape(shape, a.shape()) != a.shape()) {
    throw ShapeError("cannot sum " + a.shape().str() + " down to " + shape.str());
  }
  Buffer out;
  if (a.shape() == shape) {
    out = std::make_shared<std::vector<double>>(a.values().begin(), a.values().end());
  } else {
    out = alloc(shape.numel());
    reduce_into(a.data(), pad4(a.shape()), out->data(), pad4(shape));
  }
  return finish(OpKind::kSumTo, {&a}, shape, std::move(out));
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t start, std::size_t extent) {
  if (axis >= a.rank()) throw AxisError("slice axis out of range for " + a.shape().str());
  if (start + extent > a.dim(axis)) {
    throw ShapeError("slice [" + std::to_string(start) + ", " +
                     std::to_string(start + extent) + ") exceeds " + a.shape().str());
  }
  std::size_t outer = 0;
  std::size_t inner = 0;
  split_axis(a.shape(), axis, &outer, &inner);
  Shape shape = a.shape();
  shape[axis] = extent;
  Buffer out = alloc(shape.numel());
  const std::size_t n = a.dim(axis);
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(a.data() + (o * n + start) * inner, extent * inner,
                out->data() + o * extent * inner);
  }
  OpAttr attr;
  attr.axis = axis;
  attr.start = start;
  attr.extent = extent;
  return finish(OpKind::kSlice, {&a}, shape, std::move(out), attr);
}

Tensor pad(const Tensor& a, std::size_t axis, std::size_t before, std::size_t after) {
  if (axis >= a.rank()) throw AxisError("pad axis out of range for " + a.shape().str());
  std::size_t outer = 0;
  std::size_t inner = 0;
  split_axis(a.shape(), axis, &outer, &inner);
  Shape shape = a.shape();
  const std::size_t n = a.dim(axis);
  shape[axis] = before + n + after;
  Buffer out = alloc(shape.numel());
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(a.data() + o * n * inner, n * inner,
                out->data() + (o * shape[axis] + before) * inner);
  }
  OpAttr attr;
  attr.axis = axis;
  attr.start = before;
  attr.after = after;
  return finish(OpKind::kPad, {&a}, shape, std::move(out), attr);
}

Tensor concat(std::initializer_list<Tensor> parts, std::size_t axis) {
  return concat(std::span<const Tensor>(parts.begin(), parts.size()), axis);
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  const Shape& first = parts[0].shape();
  if (axis >= first.rank()) throw AxisError("concat axis out of range for " + first.str());
  Shape shape = first;
  shape[axis] = 0;
  for (const Tensor& p : parts) {
    if (p.rank() != first.rank()) throw ShapeError("concat rank mismatch");
    for (std::size_t i = 0; i < first.rank(); ++i) {
      if (i != axis && p.dim(i) != first[i]) {
        throw ShapeError("concat shape mismatch: " + first.str() + " vs " + p.shape().str());
      }
    }
    shape[axis] += p.dim(axis);
  }
  std::size_t outer = 0;
  std::size_t inner = 0;
  split_axis(first, axis, &outer, &inner);
  Buffer out = alloc(shape.numel());
  const std::size_t row = shape[axis] * inner;
  std::size_t offset = 0;
  for (const Tensor& p : parts) {
    const std::size_t chunk = p.dim(axis) * inner;
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(p.data() + o * chunk, chunk, out->data() + o * row + offset);
    }
    offset += chunk;
  }

  check_finite(*out);
  Tape* tape = nullptr;
  for (const Tensor& p : parts) {
    if (!p.taped()) continue;
    if (tape != nullptr && tape != p.tape()) {
      throw AutodiffError("operation mixes tensors from different tapes");
    }
    tape = p.tape();
  }
  if (tape == nullptr || !tape->recording()) return TensorFactory::make(shape, std::move(out));
  std::vector<const Tensor*> inputs;
  inputs.reserve(parts.size());
  for (const Tensor& p : parts) inputs.push_back(&p);
  OpAttr attr;
  attr.axis = axis;
  return tape->record(OpKind::kConcat, inputs, shape, std::move(out), attr);
}

}  // namespace vrads
