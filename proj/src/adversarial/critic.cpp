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

#include "vrads/adversarial.hpp"

#include <algorithm>
#include <cmath>

#include "vrads/errors.hpp"
#include "vrads/ops.hpp"
#include "vrads/rng.hpp"

namespace vrads {
namespace {

// Index of the last valid step per row; throws on rows with none.
std::vector<std::size_t> last_steps(const Tensor& mask) {
  if (mask.rank() != 2) throw ShapeError("mask must be [batch x steps], got " + mask.shape().str());
  const std::size_t batch = mask.dim(0);
  const std::size_t steps = mask.dim(1);
  std::vector<std::size_t> last(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    std::size_t n = 0;
    for (std::size_t t = 0; t < steps; ++t) {
      if (mask.values()[b * steps + t] > 0.0) n = t + 1;
    }
    if (n == 0) throw DataError("sequence " + std::to_string(b) + " has no valid step");
    last[b] = n - 1;
  }
  return last;
}

Tensor masked(const Tensor& z_seq, const Tensor& mask) {
  return z_seq * reshape(mask, {mask.dim(0), mask.dim(1), 1});
}

Tensor head_rows(const Tensor& a, std::size_t n) {
  return a.dim(0) == n ? a : slice(a, 0, 0, n);
}

}  // namespace

ParamList Critic::params() {
  ParamList out;
  lstm.collect(out);
  head.collect(out);
  return out;
}

Critic make_critic(const std::string& name, std::size_t latent, std::size_t hidden,
                   const Initializer& init, std::uint64_t seed) {
  if (latent == 0 || hidden == 0) throw ConfigError("critic sizes must be positive");
  Initializer local = init;
  local.seed = mix_seed({seed, init.seed});
  Critic c;
  c.lstm = make_lstm(name + ".lstm", latent, hidden, local);
  c.head = make_dense(name + ".head", hidden, 1, Activation::kLinear, local);
  return c;
}

GpConfig::Mode parse_critic_mode(const std::string& s) {
  if (s == "gradient-penalty") return GpConfig::Mode::kGradientPenalty;
  if (s == "weight-clip") return GpConfig::Mode::kWeightClip;
  throw ConfigError("unknown critic mode '" + s + "'");
}

Tensor critic_score(const Critic& c, const Tensor& z_seq, const Tensor& mask,
                    const Context* ctx) {
  if (z_seq.rank() != 3 || z_seq.dim(2) != c.latent()) {
    throw ShapeError("critic input must be [batch x steps x " + std::to_string(c.latent()) +
                     "], got " + z_seq.shape().str());
  }
  if (mask.shape() != Shape{z_seq.dim(0), z_seq.dim(1)}) {
    throw ShapeError("critic mask " + mask.shape().str() + " does not match input " +
                     z_seq.shape().str());
  }
  const std::size_t batch = z_seq.dim(0);
  const std::size_t latent = z_seq.dim(2);
  const std::vector<std::size_t> last = last_steps(mask);
  const std::size_t steps = *std::max_element(last.begin(), last.end()) + 1;

  LstmState state = lstm_zero_state(batch, c.lstm.hidden_size());
  Tensor pooled;
  for (std::size_t t = 0; t < steps; ++t) {
    const Tensor x = reshape(slice(z_seq, 1, t, 1), {batch, latent});
    state = lstm_step(c.lstm, x, state, ctx);
    std::vector<double> end(batch, 0.0);
    bool any = false;
    for (std::size_t b = 0; b < batch; ++b) {
      if (last[b] == t) {
        end[b] = 1.0;
        any = true;
      }
    }
    if (!any) continue;
    const Tensor term = state.h * Tensor(Shape{batch, 1}, std::move(end));
    pooled = pooled.size() == 0 ? term : pooled + term;
  }
  return reshape(dense_forward(c.head, pooled, ctx), {batch});
}

Tensor interpolate(const Tensor& real, const Tensor& fake, const std::vector<double>& eps) {
  if (real.shape() != fake.shape()) {
    throw ShapeError("interpolation operands " + real.shape().str() + " and " +
                     fake.shape().str() + " differ");
  }
  if (real.rank() == 0 || eps.size() != real.dim(0)) {
    throw ShapeError("one interpolation weight per sequence is required");
  }
  for (double e : eps) {
    if (!(e >= 0.0 && e <= 1.0)) throw DomainError("interpolation weight outside [0, 1]");
  }
  std::vector<std::size_t> dims(real.rank(), 1);
  dims[0] = eps.size();
  const Shape col{std::span<const std::size_t>(dims)};
  const Tensor e(col, eps);
  std::vector<double> rest(eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i) rest[i] = 1.0 - eps[i];
  return real * e + fake * Tensor(col, std::move(rest));
}

Tensor gradient_penalty(const Critic& c, const Tensor& x_hat, const Tensor& mask,
                        const GpConfig& gp, const Context* ctx) {
  if (gp.lambda < 0.0) throw ConfigError("penalty weight must be non-negative");
  if (ctx == nullptr) {
    Tape tape;
    const Context local(tape, {});
    return gradient_penalty(c, x_hat, mask, gp, &local).detach();
  }
  const Tensor x = x_hat.taped() ? x_hat : ctx->tape().leaf(x_hat);
  const Tensor total = sum(critic_score(c, x, mask, ctx));
  // Sequences do not interact, so the gradient of the batch sum holds every
  // per-sequence input gradient.
  const Tensor g = grad(total, {x}, /*create_graph=*/true)[0];
  const Tensor norm = l2_norm(masked(g, mask), {1, 2});
  return gp.lambda * mean(square(norm - 1.0));
}

Tensor pad_steps(const Tensor& z_seq, std::size_t steps) {
  if (z_seq.dim(1) > steps) throw ShapeError("cannot pad to fewer steps");
  return z_seq.dim(1) == steps ? z_seq : pad(z_seq, 1, 0, steps - z_seq.dim(1));
}

Tensor pad_mask(const Tensor& mask, std::size_t steps) {
  if (mask.dim(1) > steps) throw ShapeError("cannot pad to fewer steps");
  return mask.dim(1) == steps ? mask : pad(mask, 1, 0, steps - mask.dim(1));
}

Tensor critic_loss(const Critic& c, const Tensor& z_real, const Tensor& mask_real,
                   const Tensor& z_fake, const Tensor& mask_fake, const GpConfig& gp,
                   const std::vector<double>& eps, const Context* ctx) {
  if (z_real.size() == 0 || z_fake.size() == 0) throw DataError("critic loss on an empty batch");
  const Tensor loss = mean(critic_score(c, z_fake, mask_fake, ctx)) -
                      mean(critic_score(c, z_real, mask_real, ctx));
  if (gp.mode == GpConfig::Mode::kWeightClip || gp.lambda == 0.0) return loss;

  const std::size_t n = std::min(z_real.dim(0), z_fake.dim(0));
  const std::size_t steps = std::max(z_real.dim(1), z_fake.dim(1));
  if (eps.size() < n) throw ShapeError("not enough interpolation weights");
  const Tensor mr = pad_mask(head_rows(mask_real, n), steps).detach();
  const Tensor mf = pad_mask(head_rows(mask_fake, n), steps).detach();
  // Padded steps are zeroed so they cannot leak into the interpolation.
  const Tensor real = pad_steps(masked(head_rows(z_real, n), head_rows(mask_real, n)), steps);
  const Tensor fake = pad_steps(masked(head_rows(z_fake, n), head_rows(mask_fake, n)), steps);
  std::vector<double> joint(n * steps);
  for (std::size_t i = 0; i < joint.size(); ++i) {
    joint[i] = std::max(mr.values()[i], mf.values()[i]);
  }
  const std::vector<double> e(eps.begin(), eps.begin() + static_cast<std::ptrdiff_t>(n));
  const Tensor x_hat = interpolate(real.detach(), fake.detach(), e);
  return loss + gradient_penalty(c, x_hat, Tensor(Shape{n, steps}, std::move(joint)), gp, ctx);
}

Tensor wasserstein_gap(const Critic& c, const Tensor& z_a, const Tensor& mask_a,
                       const Tensor& z_b, const Tensor& mask_b, const Context* ctx) {
  if (z_a.size() == 0 || z_b.size() == 0) throw DataError("Wasserstein gap on an empty batch");
  return mean(critic_score(c, z_a, mask_a, ctx)) - mean(critic_score(c, z_b, mask_b, ctx));
}

std::vector<double> draw_eps(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out(n);
  for (double& e : out) e = rng.uniform();
  return out;
}

void clip_weights(Critic& c, double bound) {
  for (Param* p : c.params()) p->value = clamp(p->value.detach(), -bound, bound);
}

}  // namespace vrads
