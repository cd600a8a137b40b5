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

// Internal helpers shared by the forward operations and the gradient sweep.

#ifndef VRADS_SRC_TENSOR_INTERNAL_HPP_
#define VRADS_SRC_TENSOR_INTERNAL_HPP_

#include <memory>
#include <vector>

#include "vrads/tensor.hpp"

namespace vrads {

struct TensorFactory {
  static Tensor make(Shape shape, std::shared_ptr<std::vector<double>> data) {
    return Tensor(shape, std::move(data), nullptr, -1);
  }
  static const std::shared_ptr<std::vector<double>>& storage(const Tensor& t) {
    return t.data_;
  }
};

}  // namespace vrads

#endif  // VRADS_SRC_TENSOR_INTERNAL_HPP_
