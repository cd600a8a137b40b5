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

#include "vrads/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vrads/errors.hpp"

namespace vrads {

Shape::Shape(std::initializer_list<std::size_t> dims)
    : Shape(std::span<const std::size_t>(dims.begin(), dims.size())) {}

Shape::Shape(std::span<const std::size_t> dims) {
  if (dims.size() > kMaxRank) {
    throw ShapeError("rank " + std::to_string(dims.size()) + " exceeds maximum of 4");
  }
  std::copy(dims.begin(), dims.end(), dims_.begin());
  rank_ = static_cast<std::uint8_t>(dims.size());
}

std::size_t Shape::numel() const {
  std::size_t n = 1;
  for (std::size_t i = 0; i < rank_; ++i) n *= dims_[i];
  return n;
}

bool Shape::operator==(const Shape& other) const {
  if (rank_ != other.rank_) return false;
  for (std::size_t i = 0; i < rank_; ++i) {
    if (dims_[i] != other.dims_[i]) return false;
  }
  return true;
}

std::string Shape::str() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < rank_; ++i) {
    if (i) os << 'x';
    os << dims_[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor() : data_(std::make_shared<std::vector<double>>(1, 0.0)) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(shape), data_(std::make_shared<std::vector<double>>(std::move(values))) {
  if (shape_.numel() != data_->size()) {
    throw ShapeError("shape " + shape_.str() + " holds " +
                     std::to_string(shape_.numel()) + " values, got " +
                     std::to_string(data_->size()));
  }
  for (double v : *data_) {
    if (!std::isfinite(v)) throw NumericError("tensor constructed with non-finite value");
  }
}

Tensor::Tensor(Shape shape, std::shared_ptr<std::vector<double>> data, Tape* tape,
               std::int32_t node)
    : shape_(shape), data_(std::move(data)), tape_(tape), node_(node) {}

Tensor Tensor::scalar(double v) { return Tensor(Shape{}, {v}); }

Tensor Tensor::full(Shape shape, double v) {
  return Tensor(shape, std::vector<double>(shape.numel(), v));
}

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor(Shape{n}, std::move(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t m = rows.size();
  const std::size_t n = m ? rows.begin()->size() : 0;
  std::vector<double> values;
  values.reserve(m * n);
  for (const auto& row : rows) {
    if (row.size() != n) throw ShapeError("ragged matrix literal");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Tensor(Shape{m, n}, std::move(values));
}

double Tensor::item() const {
  if (size() != 1) {
    throw ShapeError("item() on tensor of shape " + shape_.str());
  }
  return (*data_)[0];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
  if (index.size() != shape_.rank()) throw ShapeError("index rank mismatch");
  std::size_t offset = 0;
  std::size_t axis = 0;
  for (std::size_t i : index) {
    if (i >= shape_[axis]) throw ShapeError("index out of range");
    offset = offset * shape_[axis] + i;
    ++axis;
  }
  return (*data_)[offset];
}

std::vector<double>& Tensor::mutable_values() {
  if (tape_ != nullptr) throw AutodiffError("cannot mutate a taped tensor");
  if (data_.use_count() > 1) data_ = std::make_shared<std::vector<double>>(*data_);
  return *data_;
}

Tensor Tensor::detach() const { return Tensor(shape_, data_, nullptr, -1); }

Tensor Tape::leaf(const Tensor& value) {
  TapeNode n;
  n.kind = OpKind::kLeaf;
  n.shape = value.shape();
  n.value = value.data_;
  nodes_.push_back(std::move(n));
  const auto id = static_cast<std::int32_t>(nodes_.size() - 1);
  return Tensor(value.shape(), value.data_, this, id);
}

Tensor Tape::tensor_at(std::int32_t id) const {
  const TapeNode& n = nodes_[id];
  return Tensor(n.shape, n.value, const_cast<Tape*>(this), id);
}

std::int32_t Tape::constant(const Tensor& t) {
  TapeNode n;
  n.kind = OpKind::kConstant;
  n.shape = t.shape();
  n.value = t.data_;
  nodes_.push_back(std::move(n));
  return static_cast<std::int32_t>(nodes_.size() - 1);
}

Tensor Tape::record(OpKind kind, std::span<const Tensor* const> inputs, Shape shape,
                    std::shared_ptr<std::vector<double>> value, const OpAttr& attr) {
  std::vector<std::int32_t> ids;
  ids.reserve(inputs.size());
  for (const Tensor* t : inputs) {
    if (t->tape_ == this) {
      ids.push_back(t->node_);
    } else if (t->tape_ == nullptr) {
      ids.push_back(constant(*t));
    } else {
      throw AutodiffError("operation mixes tensors from different tapes");
    }
  }
  TapeNode n;
  n.kind = kind;
  n.inputs = std::move(ids);
  n.attr = attr;
  n.shape = shape;
  n.value = value;
  nodes_.push_back(std::move(n));
  const auto id = static_cast<std::int32_t>(nodes_.size() - 1);
  return Tensor(shape, std::move(value), this, id);
}

}  // namespace vrads
