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

// Adversarial domain unification: a target encoder learns to map target
// visits onto the latent space of a frozen, pretrained source VRNN.

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

// Noise-free-or-sampled source latents; never on a tape.
Tensor source_latents(const AduState& s, const SequenceBatch& b, const NoiseSpec& noise) {
  const VrnnPass p = run_vrnn(s.source, b, derive_noise(noise, detail::kNoiseSource), nullptr,
                              latent_only());
  return stack_latents(p, b.batch, s.source.config.latent);
}

class AduJob : public TrainJob {
 public:
  AduJob(AduState& s, const DomainData& train, const DomainData& val, const FrameworkConfig& config)
      : s_(s),
        src_(train[s.source_domain - 1]),
        tgt_(train[2 - s.source_domain]),
        config_(config),
        seed_(mix_seed({config.train.seed, 0xad0ULL})),
        opt_dis_(s_.critic.params(), {config.train.lr_dis}),
        opt_vrnn_(s_.target.encoder_params(), {config.train.lr_vrnn}),
        opt_clf_(detail::concat_params({s_.target.encoder_params(), s_.target.classifier_params()}),
                 {config.train.lr_clf}) {
    for (const Sequence& x : val[s.source_domain - 1]) val_src_.push_back(x);
    for (const Sequence& x : val[2 - s.source_domain]) val_tgt_.push_back(x);
    val_labels_ = detail::labels_of(val_src_);
    for (int y : detail::labels_of(val_tgt_)) val_labels_.push_back(y);
  }

  std::size_t begin_epoch(std::size_t epoch) override {
    epoch_ = epoch;
    batches_ = detail::paired_batches(src_, tgt_, config_.train.batch_size, seed_, epoch);
    return batches_.first.size();
  }

  bool has_group(Group) const override { return true; }

  void update(Group g, std::size_t batch, std::size_t repeat) override {
    const SequenceBatch& bs = batches_.first[batch];
    const SequenceBatch& bt = batches_.second[batch];
    const NoiseSpec noise = detail::noise_for(config_, seed_, epoch_, g, repeat);
    switch (g) {
      case Group::kCritic: {
        const std::vector<double> eps =
            draw_eps(std::min(bs.batch, bt.batch), mix_seed({seed_, epoch_, batch, repeat, 0xe9}));
        const GpConfig gp = config_.gp();
        detail::critic_update(opt_dis_, s_.critic, config_, [&](const Context* ctx) {
          return adu_critic_loss(s_, bs, bt, noise, gp, eps, ctx);
        });
        break;
      }
      case Group::kVrnn:
        descend(opt_vrnn_, [&](const Context* ctx) { return adu_unification_loss(s_, bt, noise, ctx); },
                config_.train.clip_norm);
        break;
      case Group::kClassifier:
        descend(opt_clf_, [&](const Context* ctx) { return adu_classifier_loss(s_, bs, bt, noise, ctx); },
                0.0);
        break;
    }
  }

  double validation_loss() override {
    std::vector<double> p = predict(s_.source, s_.classifier(), val_src_);
    for (double q : predict(s_.target, s_.classifier(), val_tgt_)) p.push_back(q);
    return bce_from_probabilities(p, val_labels_);
  }

  ParamList params() override {
    return detail::concat_params(
        {s_.target.encoder_params(), s_.target.classifier_params(), s_.critic.params()});
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
  AduState& s_;
  const std::vector<Sequence>& src_;
  const std::vector<Sequence>& tgt_;
  FrameworkConfig config_;
  std::uint64_t seed_;
  NAdam opt_dis_;
  NAdam opt_vrnn_;
  NAdam opt_clf_;
  std::vector<Sequence> val_src_;
  std::vector<Sequence> val_tgt_;
  std::vector<int> val_labels_;
  detail::PairedBatches batches_;
  std::size_t epoch_ = 0;
};

}  // namespace

ParamList AduState::frozen_params() {
  return detail::concat_params({source.all_params(), target.decoder_params()});
}

AduState make_adu_state(const Vrnn& source, int source_domain, const FrameworkConfig& config,
                        std::uint64_t seed) {
  if (source_domain != 1 && source_domain != 2) throw ConfigError("source domain must be 1 or 2");
  AduState s;
  s.source = clone_vrnn(source, "source");
  s.target = clone_vrnn(source, "target");
  s.critic = make_critic("critic", source.config.latent, config.train.critic_hidden,
                         source.config.init, mix_seed({seed, 0xc7ULL}));
  s.alpha = config.train.alpha;
  s.source_domain = source_domain;
  return s;
}

Tensor adu_unification_loss(const AduState& s, const SequenceBatch& target, const NoiseSpec& noise,
                            const Context* ctx) {
  PassOptions opts;
  opts.keep_z = s.alpha != 0.0;
  const VrnnPass p =
      run_vrnn(s.target, target, derive_noise(noise, detail::kNoiseTarget), ctx, opts);
  if (s.alpha == 0.0) return p.elbo;
  const Tensor z = stack_latents(p, target.batch, s.target.config.latent);
  const Tensor adv = -mean(critic_score(s.critic, z, target.mask_tensor(), ctx));
  return p.elbo + s.alpha * adv;
}

Tensor adu_classifier_loss(const AduState& s, const SequenceBatch& source,
                           const SequenceBatch& target, const NoiseSpec& noise,
                           const Context* ctx) {
  PassOptions opts;
  opts.elbo = false;
  const Tensor zs =
      run_vrnn(s.source, source, derive_noise(noise, detail::kNoiseSource), nullptr, opts).z_last;
  const Tensor zt =
      run_vrnn(s.target, target, derive_noise(noise, detail::kNoiseTarget), ctx, opts).z_last;
  return clf_loss(s.classifier(), zs, source.labels, ctx) +
         clf_loss(s.classifier(), zt, target.labels, ctx);
}

Tensor adu_critic_loss(const AduState& s, const SequenceBatch& source, const SequenceBatch& target,
                       const NoiseSpec& noise, const GpConfig& gp, const std::vector<double>& eps,
                       const Context* ctx) {
  const Tensor zs = source_latents(s, source, noise);
  const VrnnPass pt = run_vrnn(s.target, target, derive_noise(noise, detail::kNoiseTarget),
                               nullptr, latent_only());
  const Tensor zt = stack_latents(pt, target.batch, s.target.config.latent);
  return critic_loss(s.critic, zs, source.mask_tensor(), zt, target.mask_tensor(), gp, eps, ctx);
}

AduRun train_adu(const AduState& init, const DomainData& train, const DomainData& val,
                 const FrameworkConfig& config, const TrainOptions& options) {
  config.validate();
  for (std::size_t d = 0; d < 2; ++d) {
    const std::string dom = "domain " + std::to_string(d + 1);
    detail::check_trainable(train[d], "training data of " + dom);
    if (val[d].empty()) throw DataError("validation data of " + dom + " is empty");
    detail::check_dims(init.source.config, train[d], "training data of " + dom);
  }
  AduRun run;
  run.state = init;
  const ParamList frozen_source = run.state.source.all_params();
  const ParamList frozen_dec = run.state.target.decoder_params();
  run.frozen = {{"source", hash_params(frozen_source), 0},
                {"target.dec", hash_params(frozen_dec), 0}};
  AduJob job(run.state, train, val, config);
  run.result = vrads::train(job, config.train, options);
  run.frozen[0].after = hash_params(frozen_source);
  run.frozen[1].after = hash_params(frozen_dec);
  return run;
}

}  // namespace vrads
