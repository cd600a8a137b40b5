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

// Single-VRNN training: the baselines, pretraining and fine-tuning.

#include <utility>

#include "common.hpp"
#include "vrads/errors.hpp"
#include "vrads/ops.hpp"
#include "vrads/rng.hpp"

namespace vrads {
namespace {

using detail::descend;

class VrnnJob : public TrainJob {
 public:
  VrnnJob(Vrnn& model, const std::vector<Sequence>& train, const std::vector<Sequence>& val,
          const FrameworkConfig& config, std::uint64_t seed)
      : m_(model),
        train_(train),
        val_(val),
        config_(config),
        seed_(seed),
        opt_vrnn_(m_.vrnn_params(), {config.train.lr_vrnn}),
        opt_clf_(detail::concat_params({m_.encoder_params(), m_.classifier_params()}),
                 {config.train.lr_clf}),
        val_labels_(detail::labels_of(val)) {}

  std::size_t begin_epoch(std::size_t epoch) override {
    epoch_ = epoch;
    batches_ = make_batches(train_, config_.train.batch_size, true, mix_seed({seed_, epoch, 0xb0}));
    return batches_.size();
  }

  bool has_group(Group g) const override { return g != Group::kCritic; }

  void update(Group g, std::size_t batch, std::size_t repeat) override {
    const SequenceBatch& b = batches_[batch];
    const NoiseSpec noise = detail::noise_for(config_, seed_, epoch_, g, repeat);
    if (g == Group::kVrnn) {
      descend(opt_vrnn_, [&](const Context* ctx) { return elbo_loss(m_, b, noise, ctx); },
              config_.train.clip_norm);
    } else if (g == Group::kClassifier) {
      descend(opt_clf_, [&](const Context* ctx) {
        PassOptions opts;
        opts.elbo = false;
        const VrnnPass pass = run_vrnn(m_, b, noise, ctx, opts);
        return clf_loss(m_.clf, pass.z_last, b.labels, ctx);
      }, 0.0);
    }
  }

  double validation_loss() override {
    return bce_from_probabilities(predict(m_, m_.clf, val_), val_labels_);
  }

  ParamList params() override { return m_.all_params(); }

  NamedTensors optimizer_state() const override {
    NamedTensors out = opt_vrnn_.state("opt.vrnn.");
    for (auto& e : opt_clf_.state("opt.clf.")) out.push_back(std::move(e));
    return out;
  }

  void load_optimizer_state(const NamedTensors& state) override {
    opt_vrnn_.load_state("opt.vrnn.", state);
    opt_clf_.load_state("opt.clf.", state);
  }

 private:
  Vrnn& m_;
  const std::vector<Sequence>& train_;
  const std::vector<Sequence>& val_;
  FrameworkConfig config_;
  std::uint64_t seed_;
  NAdam opt_vrnn_;
  NAdam opt_clf_;
  std::vector<int> val_labels_;
  std::vector<SequenceBatch> batches_;
  std::size_t epoch_ = 0;
};

VrnnRun run_single(Vrnn model, const std::vector<Sequence>& train,
                   const std::vector<Sequence>& val, const FrameworkConfig& config,
                   std::uint64_t seed, const TrainOptions& options) {
  config.validate();
  detail::check_trainable(train, "training data");
  if (val.empty()) throw DataError("validation data is empty");
  detail::check_dims(model.config, train, "training data");
  detail::check_dims(model.config, val, "validation data");
  VrnnRun run;
  run.model = std::move(model);
  VrnnJob job(run.model, train, val, config, seed);
  run.result = vrads::train(job, detail::single_config(config), options);
  return run;
}

}  // namespace

VrnnRun pretrain_vrnn(const std::vector<Sequence>& train, const std::vector<Sequence>& val,
                      const FrameworkConfig& config, const std::string& name, std::uint64_t seed,
                      const TrainOptions& options) {
  return run_single(make_vrnn(config.vrnn, name, seed), train, val, config,
                    mix_seed({seed, 0x5157ULL}), options);
}

VrnnRun fine_tune(const Vrnn& pretrained, const std::vector<Sequence>& train,
                  const std::vector<Sequence>& val, const FrameworkConfig& config,
                  std::uint64_t seed, const TrainOptions& options) {
  FrameworkConfig c = config;
  c.pretrain_epochs = config.train.epochs;
  return run_single(pretrained, train, val, c, mix_seed({seed, 0xf7ULL}), options);
}

}  // namespace vrads
