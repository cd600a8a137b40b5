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

// Helpers shared by the framework training jobs.

#ifndef VRADS_SRC_FRAMEWORKS_COMMON_HPP_
#define VRADS_SRC_FRAMEWORKS_COMMON_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vrads/batch.hpp"
#include "vrads/cv.hpp"
#include "vrads/frameworks.hpp"
#include "vrads/nn.hpp"
#include "vrads/trainer.hpp"

namespace vrads::detail {

// Component indices used to derive per-pass noise streams.
enum NoiseComponent : std::uint64_t {
  kNoiseSource = 0,
  kNoiseTarget = 1,
  kNoiseGlobal1 = 0,
  kNoiseGlobal2 = 1,
  kNoiseLocal1 = 2,
  kNoiseLocal2 = 3,
};

ParamList concat_params(std::initializer_list<ParamList> lists);

// One gradient step of `opt` on `loss`, differentiated with respect to the
// optimizer's parameters. Returns the loss value.
double descend(NAdam& opt, const std::function<Tensor(const Context*)>& loss, double clip_norm);

NoiseSpec noise_for(const FrameworkConfig& config, std::uint64_t seed, std::size_t epoch,
                    Group g, std::size_t repeat);

// Both domains shuffled independently; the epoch holds
// max(1, min(n1, n2) / batch_size) pairs.
struct PairedBatches {
  std::vector<SequenceBatch> first;
  std::vector<SequenceBatch> second;
};

PairedBatches paired_batches(const std::vector<Sequence>& a, const std::vector<Sequence>& b,
                             std::size_t batch_size, std::uint64_t seed, std::size_t epoch);

std::vector<double> predict_with(const Vrnn& encoder, const DenseLayer& head,
                                 const std::vector<Sequence>& seqs);

std::vector<int> labels_of(const std::vector<Sequence>& seqs);

void check_trainable(const std::vector<Sequence>& seqs, const std::string& what);
void check_dims(const VrnnConfig& c, const std::vector<Sequence>& seqs, const std::string& what);

TrainConfig single_config(const FrameworkConfig& config);

void critic_update(NAdam& opt, Critic& critic, const FrameworkConfig& config,
                   const std::function<Tensor(const Context*)>& loss);

}  // namespace vrads::detail

#endif  // VRADS_SRC_FRAMEWORKS_COMMON_HPP_
