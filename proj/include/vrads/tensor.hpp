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

// Dense 64-bit tensors and the reverse-mode differentiation tape.
//
// A Tensor is an immutable value (shape + shared row-major storage) that may
// additionally refer to a node on a Tape. Operations whose inputs live on a
// recording tape append a node describing how to differentiate them. The
// gradient routine emits its adjoint computations as ordinary operations, so
// with create_graph enabled the returned gradients are themselves taped and
// can be differentiated again.
//
// Taped tensors hold a raw pointer to their tape and must not outlive it.

#ifndef VRADS_TENSOR_HPP_
#define VRADS_TENSOR_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace vrads {

class Shape {
 public:
  static constexpr std::size_t kMaxRank = 4;

  Shape() = default;
  Shape(std::initializer_list<std::size_t> dims);
  explicit Shape(std::span<const std::size_t> dims);

  std::size_t rank() const { return rank_; }
  std::size_t operator[](std::size_t i) const { return dims_[i]; }
  std::size_t& operator[](std::size_t i) { return dims_[i]; }
  std::size_t numel() const;

  const std::size_t* begin() const { return dims_.data(); }
  const std::size_t* end() const { return dims_.data() + rank_; }

  bool operator==(const Shape& other) const;
  bool operator!=(const Shape& other) const { return !(*this == other); }

  std::string str() const;

 private:
  std::array<std::size_t, kMaxRank> dims_{};
  std::uint8_t rank_ = 0;
};

class Tape;
struct TensorFactory;

class Tensor {
 public:
  // Rank-0 tensor holding 0.
  Tensor();
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double v);
  static Tensor full(Shape shape, double v);
  static Tensor zeros(Shape shape) { return full(shape, 0.0); }
  static Tensor ones(Shape shape) { return full(shape, 1.0); }
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.rank(); }
  std::size_t dim(std::size_t axis) const { return shape_[axis]; }
  std::size_t size() const { return data_->size(); }

  std::span<const double> values() const { return *data_; }
  const double* data() const { return data_->data(); }
  double item() const;
  double at(std::initializer_list<std::size_t> index) const;

  // Copy-on-write access; only allowed for tensors that are not on a tape.
  std::vector<double>& mutable_values();

  bool taped() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  std::int32_t node() const { return node_; }

  // Same values, no tape association.
  Tensor detach() const;

 private:
  friend class Tape;
  friend struct TensorFactory;
  Tensor(Shape shape, std::shared_ptr<std::vector<double>> data, Tape* tape,
         std::int32_t node);

  Shape shape_;
  std::shared_ptr<std::vector<double>> data_;
  Tape* tape_ = nullptr;
  std::int32_t node_ = -1;
};

enum class OpKind : std::uint8_t {
  kLeaf,
  kConstant,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kExp,
  kLog,
  kTanh,
  kSigmoid,
  kSoftplus,
  kSquare,
  kSqrt,
  kRelu,
  kScale,
  kAddScalar,
  kClamp,
  kMatMul,
  kTranspose,
  kSum,
  kNorm,
  kBroadcastTo,
  kSumTo,
  kReshape,
  kSlice,
  kPad,
  kConcat,
};

struct OpAttr {
  double a = 0.0;
  double b = 0.0;
  std::uint32_t axes = 0;  // bit mask of reduced axes
  std::size_t axis = 0;
  std::size_t start = 0;
  std::size_t extent = 0;
  std::size_t after = 0;
  bool flag_a = false;
  bool flag_b = false;
};

struct TapeNode {
  OpKind kind = OpKind::kLeaf;
  std::vector<std::int32_t> inputs;
  OpAttr attr;
  Shape shape;
  std::shared_ptr<std::vector<double>> value;
};

// Append-only record of differentiable operations. Node ids increase in
// creation order, so every node's inputs have smaller ids. Single-threaded.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Registers `value` as a differentiable input and returns its taped view.
  Tensor leaf(const Tensor& value);

  bool recording() const { return recording_; }
  std::size_t size() const { return nodes_.size(); }
  const TapeNode& node(std::int32_t id) const { return nodes_[id]; }
  Tensor tensor_at(std::int32_t id) const;

  // Appends an operation node. Untaped inputs become constant nodes.
  Tensor record(OpKind kind, std::span<const Tensor* const> inputs, Shape shape,
                std::shared_ptr<std::vector<double>> value, const OpAttr& attr);

  // Disables recording for its lifetime; operations return untaped results.
  class Pause {
   public:
    explicit Pause(Tape& tape) : tape_(tape), saved_(tape.recording_) {
      tape_.recording_ = false;
    }
    ~Pause() { tape_.recording_ = saved_; }
    Pause(const Pause&) = delete;
    Pause& operator=(const Pause&) = delete;

   private:
    Tape& tape_;
    bool saved_;
  };

 private:
  std::int32_t constant(const Tensor& t);

  std::vector<TapeNode> nodes_;
  bool recording_ = true;
};

// d(scalar)/d(wrt[i]). With create_graph the results are recorded on the tape
// and may be differentiated again; otherwise they are plain values. Inputs
// the scalar does not depend on receive zero gradients.
std::vector<Tensor> grad(const Tensor& scalar, std::span<const Tensor> wrt,
                         bool create_graph = false);

inline std::vector<Tensor> grad(const Tensor& scalar,
                                std::initializer_list<Tensor> wrt,
                                bool create_graph = false) {
  return grad(scalar, std::span<const Tensor>(wrt.begin(), wrt.size()),
              create_graph);
}

}  // namespace vrads

#endif  // VRADS_TENSOR_HPP_
