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

// Shared helpers for unit tests: random tensors and finite-difference checks.

#ifndef VRADS_TESTS_TEST_UTIL_HPP_
#define VRADS_TESTS_TEST_UTIL_HPP_

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "vrads/batch.hpp"
#include "vrads/nn.hpp"
#include "vrads/tensor.hpp"

namespace vrads::testing {

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(shape.numel());
  for (double& x : v) x = u(rng);
  return Tensor(shape, std::move(v));
}

using ScalarFn = std::function<Tensor(const std::vector<Tensor>&)>;

// Largest relative error |ad - fd| / (|fd| + 1e-8) between tape gradients of
// `f` and central differences with step `h`, over every input coordinate.
inline double max_grad_error(const ScalarFn& f, const std::vector<Tensor>& inputs,
                             double h = 1e-5) {
  Tape tape;
  std::vector<Tensor> leaves;
  for (const Tensor& t : inputs) leaves.push_back(tape.leaf(t));
  const std::vector<Tensor> g = grad(f(leaves), leaves);
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      std::vector<Tensor> plus = inputs;
      std::vector<Tensor> minus = inputs;
      plus[k].mutable_values()[i] += h;
      minus[k].mutable_values()[i] -= h;
      const double fd = (f(plus).item() - f(minus).item()) / (2.0 * h);
      const double ad = g[k].values()[i];
      worst = std::max(worst, std::abs(ad - fd) / (std::abs(fd) + 1e-8));
    }
  }
  return worst;
}

// Sequences with random lengths in [min_len, max_len], standard normal values
// and roughly 30% missing indicators.
inline std::vector<Sequence> random_sequences(std::size_t n, std::size_t min_len,
                                              std::size_t max_len, std::size_t channels,
                                              std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Sequence> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    Sequence& s = out[i];
    s.visit_id = "v" + std::to_string(i);
    s.label = static_cast<int>(i % 2);
    s.length = len(rng);
    s.channels = channels;
    for (std::size_t k = 0; k < s.length * channels; ++k) {
      s.values.push_back(normal(rng));
      s.indicators.push_back(u(rng) < 0.3 ? 1.0 : 0.0);
    }
  }
  return out;
}

// Central-difference check of d loss / d params for every parameter entry;
// returns the largest relative error. `loss` must read parameters through
// the given context (nullptr for the plain evaluation).
template <class Loss>
double max_param_grad_error(const ParamList& params, Loss loss, double h = 1e-5) {
  Tape tape;
  Context ctx(tape, params);
  const std::vector<Tensor> g = grad(loss(&ctx), ctx.leaves(params));
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (std::size_t i = 0; i < params[k]->value.size(); ++i) {
      const Tensor saved = params[k]->value;
      params[k]->value.mutable_values()[i] += h;
      const double up = loss(nullptr).item();
      params[k]->value = saved;
      params[k]->value.mutable_values()[i] -= h;
      const double down = loss(nullptr).item();
      params[k]->value = saved;
      const double fd = (up - down) / (2 * h);
      worst = std::max(worst, std::abs(g[k].values()[i] - fd) / (std::abs(fd) + 1e-8));
    }
  }
  return worst;
}

}  // namespace vrads::testing

#endif  // VRADS_TESTS_TEST_UTIL_HPP_
