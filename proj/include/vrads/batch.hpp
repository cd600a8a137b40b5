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

// Preprocessed sequences and padded mini-batches.

#ifndef VRADS_BATCH_HPP_
#define VRADS_BATCH_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vrads/tensor.hpp"

namespace vrads {

// One visit after preprocessing: `length` steps of `channels` imputed values
// and matching missing indicators, both row-major [length x channels].
struct Sequence {
  std::string visit_id;
  int domain = 0;
  int label = 0;
  std::size_t length = 0;
  std::size_t channels = 0;
  std::vector<double> values;
  std::vector<double> indicators;

  // Stable 64-bit key used to derive per-sequence randomness.
  std::uint64_t key() const;
};

// Right-padded batch. The model input at each step is the concatenation
// [values, indicators], so D = 2 * value_dim. Padded steps are all zero.
struct SequenceBatch {
  std::size_t batch = 0;
  std::size_t steps = 0;
  std::size_t value_dim = 0;
  std::vector<int> labels;
  std::vector<int> domains;
  std::vector<std::size_t> lengths;
  std::vector<std::uint64_t> keys;

  std::vector<Tensor> x;           // steps x [batch x D]
  std::vector<Tensor> step_mask;   // steps x [batch x 1]
  std::vector<Tensor> target;      // steps x [batch x value_dim]
  std::vector<Tensor> recon_mask;  // steps x [batch x value_dim]: observed and valid
  std::vector<Tensor> end_mask;    // steps x [batch x 1]: 1 at the last valid step
  std::vector<bool> any_end;       // steps: some sequence ends here

  std::size_t input_dim() const { return 2 * value_dim; }
  // Dense [batch x steps x D] view of the inputs.
  Tensor values_tensor() const;
  // Dense [batch x steps] validity mask.
  Tensor mask_tensor() const;
};

SequenceBatch make_batch(std::span<const Sequence* const> seqs);
SequenceBatch make_batch(const std::vector<Sequence>& seqs);

// Shuffles with `seed` (no shuffle when seed is 0 and shuffle is false) and
// cuts into padded batches of at most `batch_size`.
std::vector<SequenceBatch> make_batches(const std::vector<Sequence>& seqs,
                                        std::size_t batch_size, bool shuffle,
                                        std::uint64_t seed);

// Inverse of make_batch for the valid region.
std::vector<Sequence> unbatch(const SequenceBatch& b);

}  // namespace vrads

#endif  // VRADS_BATCH_HPP_
