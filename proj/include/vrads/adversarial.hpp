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

// Sequence critic and Wasserstein losses with gradient penalty.

#ifndef VRADS_ADVERSARIAL_HPP_
#define VRADS_ADVERSARIAL_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "vrads/nn.hpp"
#include "vrads/tensor.hpp"

namespace vrads {

// LSTM over a latent sequence; the last valid hidden state is mapped to a
// scalar score.
struct Critic {
  LstmCell lstm;
  DenseLayer head;

  std::size_t latent() const { return lstm.input_size(); }
  ParamList params();
};

Critic make_critic(const std::string& name, std::size_t latent, std::size_t hidden,
                   const Initializer& init, std::uint64_t seed);

struct GpConfig {
  enum class Mode { kGradientPenalty, kWeightClip };
  double lambda = 10.0;
  Mode mode = Mode::kGradientPenalty;
  double clip = 0.01;
};

GpConfig::Mode parse_critic_mode(const std::string& s);

// Scores [batch] for z_seq [batch x steps x latent] under mask [batch x steps].
// Every sequence needs at least one valid step.
Tensor critic_score(const Critic& c, const Tensor& z_seq, const Tensor& mask,
                    const Context* ctx = nullptr);

// eps * real + (1 - eps) * fake with one eps in [0, 1] per sequence.
Tensor interpolate(const Tensor& real, const Tensor& fake, const std::vector<double>& eps);

// lambda * mean_b (||d score_b / d x_hat_b|| - 1)^2 with the norm over each
// sequence's valid entries. Needs a context whose tape can be differentiated
// again; without one the value is computed on a private tape and detached.
Tensor gradient_penalty(const Critic& c, const Tensor& x_hat, const Tensor& mask,
                        const GpConfig& gp, const Context* ctx = nullptr);

// Pads the time axis of a [batch x steps x latent] tensor (and its mask) with
// zeros up to `steps`.
Tensor pad_steps(const Tensor& z_seq, std::size_t steps);
Tensor pad_mask(const Tensor& mask, std::size_t steps);

// mean D(fake) - mean D(real) + penalty. The penalty uses the first
// min(batch_real, batch_fake) sequences of each side, aligned in time, and
// `eps` must hold at least that many draws. Weight-clip mode drops the penalty.
Tensor critic_loss(const Critic& c, const Tensor& z_real, const Tensor& mask_real,
                   const Tensor& z_fake, const Tensor& mask_fake, const GpConfig& gp,
                   const std::vector<double>& eps, const Context* ctx = nullptr);

// mean score(a) - mean score(b).
Tensor wasserstein_gap(const Critic& c, const Tensor& z_a, const Tensor& mask_a,
                       const Tensor& z_b, const Tensor& mask_b, const Context* ctx = nullptr);

// Uniform(0, 1) draws for the interpolation.
std::vector<double> draw_eps(std::size_t n, std::uint64_t seed);

// Clamps every critic parameter to [-bound, bound] in place.
void clip_weights(Critic& c, double bound);

}  // namespace vrads

#endif  // VRADS_ADVERSARIAL_HPP_
