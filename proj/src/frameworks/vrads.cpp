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

// Adversarial domain separation: a global VRNN shared by both domains,
// kept apart from per-domain local VRNNs by an orthogonality penalty and
// aligned across domains by a critic. With no locals it is the shared
// adversarial VRNN (VRADA-style).

#include <algorithm>
#include <cmath>
#include <utility>

#include "common.hpp"
#include "vrads/errors.hpp"
#include "vrads/ops.hpp"
#include "vrads/rng.hpp"

namespace vrads {
namespace {

using detail::descend;

PassOptions latent_only() {
  PassOptions o;
  o.elbo = false;
  o.keep_z = true;
  return o;
}

void check_state(const VradsState& s) {
  const bool shared = s.mode == SeparationMode::kShared;
  if (shared != s.locals.empty() || (!shared && s.locals.size() != 2)) {
    throw ConfigError(std::string("mode ") + mode_name(s.mode) + " needs " +
                      (shared ? "no" : "two") + " local VRNNs");
  }
}

class VradsJob : public TrainJob {
 public:
  VradsJob(VradsState& s, const DomainData& train, const DomainData& val,
           const FrameworkConfig& config)
      : s_(s),
        train_(train),
        config_(config),
        seed_(mix_seed({config.train.seed, 0xad5ULL, static_cast<std::uint64_t>(s.mode)})),
        opt_dis_(s_.critic.params(), {config.train.lr_dis}),
        opt_vrnn_(s_.vrnn_side_params(), {config.train.lr_vrnn}),
        opt_clf_(detail::concat_params({s_.global.encoder_params(), s_.global.classifier_params()}),
                 {config.train.lr_clf}) {
    for (std::size_t d = 0; d < 2; ++d) {
      val_.insert(val_.end(), val[d].begin(), val[d].end());
    }
    val_labels_ = detail::labels_of(val_);
  }

  std::size_t begin_epoch(std::size_t epoch) override {
    epoch_ = epoch;
    batches_ = detail::paired_batches(train_[0], train_[1], config_.train.batch_size, seed_, epoch);
    return batches_.first.size();
  }

  bool has_group(Group g) const override { return g != Group::kCritic || s_.alpha != 0.0; }

  void update(Group g, std::size_t batch, std::size_t repeat) override {
    const SequenceBatch& b1 = batches_.first[batch];
    const SequenceBatch& b2 = batches_.second[batch];
    const NoiseSpec noise = detail::noise_for(config_, seed_, epoch_, g, repeat);
    switch (g) {
      case Group::kCritic: {
        const std::vector<double> eps =
            draw_eps(std::min(b1.batch, b2.batch), mix_seed({seed_, epoch_, batch, repeat, 0xe9}));
        const GpConfig gp = config_.gp();
        detail::critic_update(opt_dis_, s_.critic, config_, [&](const Context* ctx) {
          return vrads_critic_loss(s_, b1, b2, noise, gp, eps, ctx);
        });
        break;
      }
      case Group::kVrnn:
        descend(opt_vrnn_, [&](const Context* ctx) { return vrads_separation_loss(s_, b1, b2, noise, ctx); },
                config_.train.clip_norm);
        break;
      case Group::kClassifier:
        descend(opt_clf_, [&](const Context* ctx) { return vrads_classifier_loss(s_, b1, b2, noise, ctx); },
                0.0);
        break;
    }
  }

  double validation_loss() override {
    return bce_from_probabilities(predict(s_.global, s_.classifier(), val_), val_labels_);
  }

  ParamList params() override {
    return detail::concat_params(
        {s_.vrnn_side_params(), s_.global.classifier_params(), s_.critic.params()});
  }

  NamedTensors optimizer_state() const override {
    NamedTensors out = opt_dis_.state("opt.dis.");
    for (auto& e : opt_vrnn_.state("opt.vrnn.")) out.push_back(std::move(e));
    for (auto& e : opt_clf_.state("opt.clf.")) out.push_back(std::move(e));
    return out;
  }

  void load_optimizer_state(const NamedTensors& state) override {
    opt_dis_.load_state("opt.dis.", state);
    opt_vrnn_.load_state("opt.vrnn.", state);
    opt_clf_.load_state("opt.clf.", state);
  }

 private:
  VradsState& s_;
  const DomainData& train_;
  FrameworkConfig config_;
  std::uint64_t seed_;
  NAdam opt_dis_;
  NAdam opt_vrnn_;
  NAdam opt_clf_;
  std::vector<Sequence> val_;
  std::vector<int> val_labels_;
  detail::PairedBatches batches_;
  std::size_t epoch_ = 0;
};

// Noise-free last latents in input order.
std::vector<double> last_latents(const Vrnn& v, const std::vector<Sequence>& seqs) {
  std::vector<double> out;
  PassOptions opts;
  opts.elbo = false;
  for (const SequenceBatch& b : make_batches(seqs, 64, false, 0)) {
    const Tensor z = run_vrnn(v, b, NoiseSpec{}, nullptr, opts).z_last;
    out.insert(out.end(), z.values().begin(), z.values().end());
  }
  return out;
}

std::vector<double> critic_scores(const Critic& c, const Vrnn& enc,
                                  const std::vector<Sequence>& seqs) {
  std::vector<double> out;
  for (const SequenceBatch& b : make_batches(seqs, 64, false, 0)) {
    const VrnnPass p = run_vrnn(enc, b, NoiseSpec{}, nullptr, latent_only());
    const Tensor s = critic_score(c, stack_latents(p, b.batch, enc.config.latent), b.mask_tensor());
    out.insert(out.end(), s.values().begin(), s.values().end());
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) throw EmptyReductionError("mean of no values");
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

}  // namespace

const char* mode_name(SeparationMode m) {
  switch (m) {
    case SeparationMode::kShared:
      return "shared";
    case SeparationMode::kFixed:
      return "fixed";
    case SeparationMode::kReleased:
      return "released";
  }
  return "?";
}

ParamList VradsState::vrnn_side_params() {
  ParamList out = global.vrnn_params();
  if (mode == SeparationMode::kReleased) {
    for (Vrnn& l : locals) {
      for (Param* p : l.vrnn_params()) out.push_back(p);
    }
  }
  return out;
}

VradsState make_vrads_state(const std::vector<Vrnn>& locals, SeparationMode mode,
                            const FrameworkConfig& config, std::uint64_t seed) {
  VradsState s;
  s.mode = mode;
  s.alpha = config.train.alpha;
  s.beta = mode == SeparationMode::kShared ? 0.0 : config.train.beta;
  for (std::size_t d = 0; d < locals.size(); ++d) {
    s.locals.push_back(clone_vrnn(locals[d], "local" + std::to_string(d + 1)));
  }
  check_state(s);
  s.global = make_vrnn(config.vrnn, "global", mix_seed({seed, 0x61ULL}));
  s.critic = make_critic("critic", config.vrnn.latent, config.train.critic_hidden, config.vrnn.init,
                         mix_seed({seed, 0xc7ULL}));
  for (const Vrnn& l : s.locals) {
    if (l.config.input_dim != config.vrnn.input_dim || l.config.latent != config.vrnn.latent) {
      throw ShapeError("local VRNN sizes do not match the global VRNN");
    }
  }
  return s;
}

Tensor diff_loss(const Tensor& zg1, const Tensor& zl1, const Tensor& zg2, const Tensor& zl2) {
  if (zg1.rank() != 2 || zg2.rank() != 2) throw ShapeError("latent matrices must be 2-D");
  if (zg1.shape() != zl1.shape() || zg2.shape() != zl2.shape()) {
    throw ShapeError("global and local latents differ in shape: " + zg1.shape().str() + " vs " +
                     zl1.shape().str() + ", " + zg2.shape().str() + " vs " + zl2.shape().str());
  }
  return sum(square(matmul(zg1, zl1, true, false))) + sum(square(matmul(zg2, zl2, true, false)));
}

Tensor vrads_separation_loss(const VradsState& s, const SequenceBatch& b1, const SequenceBatch& b2,
                             const NoiseSpec& noise, const Context* ctx) {
  check_state(s);
  const std::size_t latent = s.global.config.latent;
  PassOptions gopts;
  gopts.keep_z = s.alpha != 0.0;
  const VrnnPass g1 = run_vrnn(s.global, b1, derive_noise(noise, detail::kNoiseGlobal1), ctx, gopts);
  const VrnnPass g2 = run_vrnn(s.global, b2, derive_noise(noise, detail::kNoiseGlobal2), ctx, gopts);
  Tensor loss = g1.elbo + g2.elbo;
  if (s.mode != SeparationMode::kShared) {
    const bool released = s.mode == SeparationMode::kReleased;
    PassOptions lopts;
    lopts.elbo = released;
    // Fixed locals are constants; released ones train through the context.
    const Context* lctx = released ? ctx : nullptr;
    const VrnnPass l1 =
        run_vrnn(s.locals[0], b1, derive_noise(noise, detail::kNoiseLocal1), lctx, lopts);
    const VrnnPass l2 =
        run_vrnn(s.locals[1], b2, derive_noise(noise, detail::kNoiseLocal2), lctx, lopts);
    if (released) loss = loss + (l1.elbo + l2.elbo);
    if (s.alpha != 0.0) {
      loss = loss + s.alpha * wasserstein_gap(s.critic, stack_latents(g1, b1.batch, latent),
                                              b1.mask_tensor(), stack_latents(g2, b2.batch, latent),
                                              b2.mask_tensor(), ctx);
    }
    if (s.beta != 0.0) loss = loss + s.beta * diff_loss(g1.z_last, l1.z_last, g2.z_last, l2.z_last);
    return loss;
  }
  if (s.alpha != 0.0) {
    loss = loss + s.alpha * wasserstein_gap(s.critic, stack_latents(g1, b1.batch, latent),
                                            b1.mask_tensor(), stack_latents(g2, b2.batch, latent),
                                            b2.mask_tensor(), ctx);
  }
  return loss;
}

Tensor vrads_classifier_loss(const VradsState& s, const SequenceBatch& b1, const SequenceBatch& b2,
                             const NoiseSpec& noise, const Context* ctx) {
  PassOptions opts;
  opts.elbo = false;
  const Tensor z1 =
      run_vrnn(s.global, b1, derive_noise(noise, detail::kNoiseGlobal1), ctx, opts).z_last;
  const Tensor z2 =
      run_vrnn(s.global, b2, derive_noise(noise, detail::kNoiseGlobal2), ctx, opts).z_last;
  return clf_loss(s.classifier(), z1, b1.labels, ctx) + clf_loss(s.classifier(), z2, b2.labels, ctx);
}

Tensor vrads_critic_loss(const VradsState& s, const SequenceBatch& b1, const SequenceBatch& b2,
                         const NoiseSpec& noise, const GpConfig& gp, const std::vector<double>& eps,
                         const Context* ctx) {
  const std::size_t latent = s.global.config.latent;
  const VrnnPass g1 = run_vrnn(s.global, b1, derive_noise(noise, detail::kNoiseGlobal1), nullptr,
                               latent_only());
  const VrnnPass g2 = run_vrnn(s.global, b2, derive_noise(noise, detail::kNoiseGlobal2), nullptr,
                               latent_only());
  return critic_loss(s.critic, stack_latents(g1, b1.batch, latent), b1.mask_tensor(),
                     stack_latents(g2, b2.batch, latent), b2.mask_tensor(), gp, eps, ctx);
}

VradsRun train_vrads(const VradsState& init, const DomainData& train, const DomainData& val,
                     const FrameworkConfig& config, const TrainOptions& options) {
  config.validate();
  check_state(init);
  for (std::size_t d = 0; d < 2; ++d) {
    const std::string dom = "domain " + std::to_string(d + 1);
    detail::check_trainable(train[d], "training data of " + dom);
    if (val[d].empty()) throw DataError("validation data of " + dom + " is empty");
    detail::check_dims(init.global.config, train[d], "training data of " + dom);
  }
  VradsRun run;
  run.state = init;
  std::vector<ParamList> frozen;
  if (run.state.mode == SeparationMode::kFixed) {
    for (std::size_t d = 0; d < 2; ++d) {
      frozen.push_back(run.state.locals[d].all_params());
      run.frozen.push_back({"local" + std::to_string(d + 1), hash_params(frozen.back()), 0});
    }
  }
  VradsJob job(run.state, train, val, config);
  run.result = vrads::train(job, config.train, options);
  for (std::size_t i = 0; i < frozen.size(); ++i) run.frozen[i].after = hash_params(frozen[i]);
  return run;
}

VradsRun train_vrada_style(const DomainData& train, const DomainData& val,
                           const FrameworkConfig& config, std::uint64_t seed,
                           const TrainOptions& options) {
  return train_vrads(make_vrads_state({}, SeparationMode::kShared, config, seed), train, val,
                     config, options);
}

double ladder_reduction_gap(const DomainData& train, const FrameworkConfig& config,
                            std::uint64_t seed) {
  FrameworkConfig c = config;
  c.train.beta = 0.0;
  const std::vector<Vrnn> locals = {make_vrnn(c.vrnn, "l1", mix_seed({seed, 1})),
                                    make_vrnn(c.vrnn, "l2", mix_seed({seed, 2}))};
  const VradsState fixed = make_vrads_state(locals, SeparationMode::kFixed, c, seed);
  VradsState shared = make_vrads_state({}, SeparationMode::kShared, c, seed);
  const detail::PairedBatches pb =
      detail::paired_batches(train[0], train[1], c.train.batch_size, seed, 0);
  const SequenceBatch& b1 = pb.first.at(0);
  const SequenceBatch& b2 = pb.second.at(0);
  NoiseSpec noise;
  noise.sample = c.train.sample_noise;
  noise.seed = seed;
  const double rung2 = vrads_separation_loss(shared, b1, b2, noise).item();
  double gap = std::abs(vrads_separation_loss(fixed, b1, b2, noise).item() - rung2);
  shared.alpha = 0.0;
  const double elbos = elbo_loss(shared.global, b1, derive_noise(noise, detail::kNoiseGlobal1)).item() +
                       elbo_loss(shared.global, b2, derive_noise(noise, detail::kNoiseGlobal2)).item();
  gap = std::max(gap, std::abs(vrads_separation_loss(shared, b1, b2, noise).item() - elbos));
  return gap;
}

double global_local_cosine(const VradsState& s, const DomainData& data) {
  check_state(s);
  if (s.locals.empty()) throw ConfigError("no local VRNNs to compare against");
  const std::size_t latent = s.global.config.latent;
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t d = 0; d < 2; ++d) {
    const std::vector<double> g = last_latents(s.global, data[d]);
    const std::vector<double> l = last_latents(s.locals[d], data[d]);
    for (std::size_t i = 0; i < data[d].size(); ++i) {
      double dot = 0.0;
      double ng = 0.0;
      double nl = 0.0;
      for (std::size_t j = 0; j < latent; ++j) {
        const double a = g[i * latent + j];
        const double b = l[i * latent + j];
        dot += a * b;
        ng += a * a;
        nl += b * b;
      }
      acc += std::abs(dot) / std::max(std::sqrt(ng * nl), 1e-12);
      ++n;
    }
  }
  if (n == 0) throw EmptyReductionError("no sequences to compare");
  return acc / static_cast<double>(n);
}

double critic_gap(const Critic& c, const Vrnn& enc_a, const std::vector<Sequence>& a,
                  const Vrnn& enc_b, const std::vector<Sequence>& b) {
  return mean_of(critic_scores(c, enc_a, a)) - mean_of(critic_scores(c, enc_b, b));
}

}  // namespace vrads
