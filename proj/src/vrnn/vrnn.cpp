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

#include "vrads/vrnn.hpp"

#include <cmath>
#include <numbers>

#include "vrads/errors.hpp"
#include "vrads/ops.hpp"
#include "vrads/rng.hpp"

namespace vrads {
namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

void check_dist(const LatentDist& d) {
  if (d.mu.shape() != d.sigma.shape()) {
    throw ShapeError("distribution mu " + d.mu.shape().str() + " and sigma " +
                     d.sigma.shape().str() + " differ");
  }
  for (double s : d.sigma.values()) {
    if (!(s > 0.0)) throw DomainError("distribution scale must be positive");
  }
}

}  // namespace

ParamList Vrnn::encoder_params() {
  ParamList out;
  phi_x.collect(out);
  phi_z.collect(out);
  prior.collect(out);
  enc.collect(out);
  rec.collect(out);
  return out;
}

ParamList Vrnn::decoder_params() {
  ParamList out;
  dec.collect(out);
  return out;
}

ParamList Vrnn::classifier_params() {
  ParamList out;
  clf.collect(out);
  return out;
}

ParamList Vrnn::vrnn_params() {
  ParamList out = encoder_params();
  dec.collect(out);
  return out;
}

ParamList Vrnn::all_params() {
  ParamList out = vrnn_params();
  clf.collect(out);
  return out;
}

Vrnn make_vrnn(const VrnnConfig& c, const std::string& name, std::uint64_t seed) {
  if (c.input_dim == 0 || c.recon_dim == 0 || c.hidden == 0 || c.latent == 0 ||
      c.feature_width == 0) {
    throw ConfigError("VRNN sizes must be positive");
  }
  Initializer init = c.init;
  init.seed = mix_seed({seed, c.init.seed});
  Vrnn v;
  v.config = c;
  const std::size_t f = c.feature_width;
  v.phi_x = make_dense(name + ".phi_x", c.input_dim, f, Activation::kTanh, init);
  v.phi_z = make_dense(name + ".phi_z", c.latent, f, Activation::kTanh, init);
  v.prior = make_gaussian_head(name + ".prior", c.hidden, c.trunk, c.latent, init);
  v.enc = make_gaussian_head(name + ".enc", f + c.hidden, c.trunk, c.latent, init);
  v.dec = make_gaussian_head(name + ".dec", f + c.hidden, c.trunk, c.recon_dim, init);
  v.rec = make_lstm(name + ".rec", 2 * f, c.hidden, init, c.forget_bias);
  v.clf = make_dense(name + ".clf", c.latent, 1, Activation::kLinear, init);
  for (GaussianHead* h : {&v.prior, &v.enc, &v.dec}) h->floor = c.sigma_floor;
  return v;
}

std::vector<Tensor> draw_noise(const SequenceBatch& b, std::size_t latent,
                               const NoiseSpec& spec) {
  std::vector<std::vector<double>> steps(b.steps, std::vector<double>(b.batch * latent, 0.0));
  if (spec.sample) {
    for (std::size_t i = 0; i < b.batch; ++i) {
      Rng rng(mix_seed({spec.seed, spec.epoch, b.keys[i], spec.tag}));
      for (std::size_t t = 0; t < b.steps; ++t) {
        for (std::size_t j = 0; j < latent; ++j) steps[t][i * latent + j] = rng.normal();
      }
    }
  }
  std::vector<Tensor> out;
  out.reserve(b.steps);
  for (auto& s : steps) out.emplace_back(Shape{b.batch, latent}, std::move(s));
  return out;
}

LatentDist prior_step(const Vrnn& v, const LstmState& state, const Context* ctx) {
  return gaussian_forward(v.prior, state.h, ctx);
}

LatentDist infer_step(const Vrnn& v, const Tensor& x, const LstmState& state,
                      const Context* ctx) {
  const Tensor fx = dense_forward(v.phi_x, x, ctx);
  return gaussian_forward(v.enc, concat({fx, state.h}, 1), ctx);
}

Tensor reparam_sample(const LatentDist& d, const Tensor& noise) {
  if (noise.shape() != d.mu.shape()) {
    throw ShapeError("noise " + noise.shape().str() + " does not match " + d.mu.shape().str());
  }
  return d.mu + d.sigma * noise;
}

LstmState recurrence_step(const Vrnn& v, const Tensor& x, const Tensor& z,
                          const LstmState& state, const Context* ctx) {
  const Tensor fx = dense_forward(v.phi_x, x, ctx);
  const Tensor fz = dense_forward(v.phi_z, z, ctx);
  return lstm_step(v.rec, concat({fx, fz}, 1), state, ctx);
}

LatentDist decode_step(const Vrnn& v, const Tensor& z, const LstmState& state,
                       const Context* ctx) {
  const Tensor fz = dense_forward(v.phi_z, z, ctx);
  return gaussian_forward(v.dec, concat({fz, state.h}, 1), ctx);
}

Tensor kl_elements(const LatentDist& q, const LatentDist& p) {
  const Tensor var_ratio = square(q.sigma / p.sigma);
  const Tensor mean_term = square((q.mu - p.mu) / p.sigma);
  // log(sp/sq) + (sq^2 + (mq-mp)^2) / (2 sp^2) - 1/2
  return log(p.sigma) - log(q.sigma) + 0.5 * (var_ratio + mean_term) - 0.5;
}

Tensor kl_diag_gaussian(const LatentDist& q, const LatentDist& p) {
  check_dist(q);
  check_dist(p);
  if (q.mu.shape() != p.mu.shape()) throw ShapeError("KL operands differ in shape");
  const Tensor e = kl_elements(q, p);
  return sum(e, {e.rank() - 1});
}

Tensor nll_elements(const Tensor& x, const LatentDist& d) {
  return log(d.sigma) + 0.5 * square((x - d.mu) / d.sigma) + kHalfLog2Pi;
}

Tensor gaussian_nll(const Tensor& x, const LatentDist& d, const Tensor& mask) {
  check_dist(d);
  if (x.shape() != d.mu.shape()) throw ShapeError("NLL target does not match distribution");
  const Tensor e = nll_elements(x, d) * mask;
  return sum(e, {e.rank() - 1});
}

VrnnPass run_vrnn(const Vrnn& v, const SequenceBatch& b, const NoiseSpec& noise,
                  const Context* ctx, PassOptions options) {
  const VrnnConfig& c = v.config;
  if (b.steps == 0) throw DataError("batch has no valid steps");
  if (b.input_dim() != c.input_dim) {
    throw ShapeError("batch input width " + std::to_string(b.input_dim()) +
                     " does not match model width " + std::to_string(c.input_dim));
  }
  if (options.elbo && b.value_dim != c.recon_dim) {
    throw ShapeError("batch value width does not match decoder width");
  }
  const std::vector<Tensor> eps =
      noise.sample ? draw_noise(b, c.latent, noise) : std::vector<Tensor>{};

  VrnnPass pass;
  LstmState state = lstm_zero_state(b.batch, c.hidden);
  std::vector<Tensor> kl_terms;
  std::vector<Tensor> nll_terms;
  std::vector<Tensor> last_terms;
  for (std::size_t t = 0; t < b.steps; ++t) {
    const Tensor fx = dense_forward(v.phi_x, b.x[t], ctx);
    const LatentDist q = gaussian_forward(v.enc, concat({fx, state.h}, 1), ctx);
    const Tensor z = noise.sample ? reparam_sample(q, eps[t]) : q.mu;
    const Tensor fz = dense_forward(v.phi_z, z, ctx);
    if (options.elbo) {
      const LatentDist p = gaussian_forward(v.prior, state.h, ctx);
      kl_terms.push_back(sum(kl_elements(q, p) * b.step_mask[t]));
      const LatentDist dx = gaussian_forward(v.dec, concat({fz, state.h}, 1), ctx);
      nll_terms.push_back(sum(nll_elements(b.target[t], dx) * b.recon_mask[t]));
    }
    if (b.any_end[t]) last_terms.push_back(z * b.end_mask[t]);
    if (options.keep_z) pass.z.push_back(z);
    if (t + 1 < b.steps) state = lstm_step(v.rec, concat({fx, fz}, 1), state, ctx);
  }
  auto total = [](const std::vector<Tensor>& terms) {
    Tensor acc = terms[0];
    for (std::size_t i = 1; i < terms.size(); ++i) acc = acc + terms[i];
    return acc;
  };
  pass.z_last = total(last_terms);
  if (options.elbo) {
    pass.kl = total(kl_terms);
    pass.nll = total(nll_terms);
    pass.elbo = scale(pass.kl + pass.nll, 1.0 / static_cast<double>(b.batch));
  }
  return pass;
}

Tensor elbo_loss(const Vrnn& v, const SequenceBatch& b, const NoiseSpec& noise,
                 const Context* ctx) {
  return run_vrnn(v, b, noise, ctx).elbo;
}

EncodedSequence encode_sequence(const Vrnn& v, const SequenceBatch& b, const NoiseSpec& noise,
                                const Context* ctx) {
  PassOptions opts;
  opts.elbo = false;
  opts.keep_z = true;
  VrnnPass pass = run_vrnn(v, b, noise, ctx, opts);
  const std::size_t latent = v.config.latent;
  std::vector<Tensor> cols;
  cols.reserve(pass.z.size());
  for (const Tensor& z : pass.z) cols.push_back(reshape(z, {b.batch, 1, latent}));
  return {concat(cols, 1), pass.z_last};
}

Tensor classifier_logits(const DenseLayer& head, const Tensor& z_last, const Context* ctx) {
  return dense_forward(head, z_last, ctx);
}

std::vector<double> classify(const DenseLayer& head, const Tensor& z_last) {
  const Tensor p = sigmoid(classifier_logits(head, z_last));
  return {p.values().begin(), p.values().end()};
}

Tensor bce_with_logits(const Tensor& logits, const std::vector<int>& labels) {
  if (logits.size() != labels.size()) throw ShapeError("one label per logit is required");
  if (labels.empty()) throw EmptyReductionError("BCE over an empty batch");
  std::vector<double> y(labels.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw DataError("label " + std::to_string(labels[i]) + " is not 0 or 1");
    }
    y[i] = labels[i];
  }
  const Tensor yt(logits.shape(), std::move(y));
  // log(1 + e^l) - y l equals -[y log p + (1 - y) log(1 - p)] with p = sigmoid(l).
  return mean(softplus(logits) - logits * yt);
}

Tensor clf_loss(const DenseLayer& head, const Tensor& z_last, const std::vector<int>& labels,
                const Context* ctx) {
  return bce_with_logits(classifier_logits(head, z_last, ctx), labels);
}

double bce_from_probabilities(const std::vector<double>& p, const std::vector<int>& labels) {
  if (p.size() != labels.size()) throw ShapeError("one label per probability is required");
  if (p.empty()) throw EmptyReductionError("BCE over an empty batch");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw DataError("label " + std::to_string(labels[i]) + " is not 0 or 1");
    }
    const double q = std::clamp(p[i], 1e-12, 1.0 - 1e-12);
    acc -= labels[i] == 1 ? std::log(q) : std::log(1.0 - q);
  }
  return acc / static_cast<double>(p.size());
}

std::vector<double> predict(const Vrnn& v, const DenseLayer& head,
                            const std::vector<Sequence>& seqs, std::size_t batch_size) {
  std::vector<double> out;
  out.reserve(seqs.size());
  PassOptions opts;
  opts.elbo = false;
  for (const SequenceBatch& b : make_batches(seqs, batch_size, false, 0)) {
    const VrnnPass pass = run_vrnn(v, b, NoiseSpec{}, nullptr, opts);
    const std::vector<double> p = classify(head, pass.z_last);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

}  // namespace vrads
