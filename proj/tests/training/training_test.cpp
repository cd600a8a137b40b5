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

// Training-run checks: short runs on small synthetic domains whose outcome
// is a trend or threshold rather than an exact value.

#include <gtest/gtest.h>

#include <cmath>
#include <iostream>
#include <numeric>
#include <random>

#include "vrads/adversarial.hpp"
#include "vrads/frameworks.hpp"
#include "vrads/ops.hpp"
#include "vrads/report.hpp"
#include "vrads/trainer.hpp"

namespace vrads {
namespace {

constexpr std::size_t kChannels = 3;

struct DomainShape {
  std::size_t signal_channel = 0;
  double signal = 1.2;
  std::array<double, kChannels> offset{};
};

// Label 1 raises one channel at every step; everything else is N(offset, 0.5).
std::vector<Sequence> synth(int domain, std::size_t n, const DomainShape& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.5);
  std::uniform_int_distribution<std::size_t> len(4, 8);
  std::vector<Sequence> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    Sequence& s = out[i];
    s.visit_id = "s" + std::to_string(domain) + "-" + std::to_string(seed) + "-" + std::to_string(i);
    s.domain = domain;
    s.label = static_cast<int>(i % 2);
    s.length = len(rng);
    s.channels = kChannels;
    for (std::size_t t = 0; t < s.length; ++t) {
      for (std::size_t c = 0; c < kChannels; ++c) {
        double x = shape.offset[c] + noise(rng);
        if (s.label == 1 && c == shape.signal_channel) x += shape.signal;
        s.values.push_back(x);
        s.indicators.push_back(0.0);
      }
    }
  }
  return out;
}

FrameworkConfig config(std::size_t epochs) {
  FrameworkConfig c;
  c.vrnn.input_dim = 2 * kChannels;
  c.vrnn.recon_dim = kChannels;
  c.vrnn.hidden = 8;
  c.vrnn.latent = 4;
  c.vrnn.feature_width = 8;
  c.vrnn.trunk = {8};
  c.train.epochs = epochs;
  c.train.batch_size = 16;
  c.train.eval_every = 5;
  c.train.critic_hidden = 6;
  return c;
}

std::vector<int> labels(const std::vector<Sequence>& s) {
  std::vector<int> y;
  for (const Sequence& q : s) y.push_back(q.label);
  return y;
}

double auc_of(const Vrnn& v, const DenseLayer& head, const std::vector<Sequence>& s) {
  return auc(labels(s), predict(v, head, s));
}

// Least-squares slope of y against its index.
double slope(const std::vector<double>& y) {
  const double n = static_cast<double>(y.size());
  const double mx = (n - 1.0) / 2.0;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    num += (static_cast<double>(i) - mx) * (y[i] - my);
    den += (static_cast<double>(i) - mx) * (static_cast<double>(i) - mx);
  }
  return num / den;
}

double mean_of(const std::vector<double>& y, std::size_t from, std::size_t to) {
  return std::accumulate(y.begin() + static_cast<std::ptrdiff_t>(from),
                         y.begin() + static_cast<std::ptrdiff_t>(to), 0.0) /
         static_cast<double>(to - from);
}

// Gap of a fresh critic trained to separate two latent sets, an estimate of
// their Wasserstein distance that does not depend on the run's own critic.
double probe_gap(const Vrnn& enc_a, const std::vector<Sequence>& a, const Vrnn& enc_b,
                 const std::vector<Sequence>& b) {
  const SequenceBatch ba = make_batch(a);
  const SequenceBatch bb = make_batch(b);
  const NoiseSpec none;
  const std::size_t steps = std::max(ba.steps, bb.steps);
  const Tensor za = pad_steps(encode_sequence(enc_a, ba, none).z_seq, steps);
  const Tensor zb = pad_steps(encode_sequence(enc_b, bb, none).z_seq, steps);
  const Tensor ma = pad_mask(ba.mask_tensor(), steps);
  const Tensor mb = pad_mask(bb.mask_tensor(), steps);
  Critic c = make_critic("probe", enc_a.config.latent, 8, {}, 99);
  const ParamList params = c.params();
  NAdam opt(params, {.lr = 3e-3});
  for (std::size_t k = 0; k < 300; ++k) {
    Tape tape;
    const Context ctx(tape, params);
    const std::vector<double> eps = draw_eps(std::min(a.size(), b.size()), k + 1);
    opt.step(grad(critic_loss(c, za, ma, zb, mb, {}, eps, &ctx), ctx.leaves(params)));
  }
  return std::abs(wasserstein_gap(c, za, ma, zb, mb).item());
}

TEST(TrainingRun, ElboDecreasesOnAFixedBatch) {
  const std::vector<Sequence> seqs = synth(1, 32, {}, 1);
  Vrnn v = make_vrnn(config(1).vrnn, "v", 3);
  const ParamList params = v.vrnn_params();
  NAdam opt(params, {.lr = 3e-3});
  const std::vector<SequenceBatch> batches = make_batches(seqs, 8, false, 0);
  std::vector<double> epoch_means;
  for (std::size_t epoch = 0; epoch < 50; ++epoch) {
    double total = 0.0;
    for (std::size_t i = 0; i < batches.size(); ++i) {
      Tape tape;
      const Context ctx(tape, params);
      NoiseSpec noise{.sample = true, .seed = 5, .epoch = epoch, .tag = i};
      const Tensor loss = elbo_loss(v, batches[i], noise, &ctx);
      total += loss.item();
      opt.step(grad(loss, ctx.leaves(params)));
    }
    epoch_means.push_back(total / static_cast<double>(batches.size()));
  }
  EXPECT_LT(slope(epoch_means), 0.0);
  EXPECT_LT(mean_of(epoch_means, 40, 50), mean_of(epoch_means, 0, 10));
}

TEST(TrainingRun, CriticSeparatesShiftedGaussians) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n01(0.0, 1.0);
  auto draw = [&](double mu) {
    std::vector<double> v(32 * 5 * 3);
    for (double& x : v) x = mu + n01(rng);
    return Tensor(Shape{32, 5, 3}, std::move(v));
  };
  const Tensor mask = Tensor::ones({32, 5});
  Critic c = make_critic("critic", 3, 8, {}, 6);
  const ParamList params = c.params();
  NAdam opt(params, {.lr = 1e-3});
  for (std::size_t k = 0; k < 200; ++k) {
    const Tensor real = draw(0.0);
    const Tensor fake = draw(3.0);
    Tape tape;
    const Context ctx(tape, params);
    opt.step(grad(critic_loss(c, real, mask, fake, mask, {}, draw_eps(32, k), &ctx),
                  ctx.leaves(params)));
  }
  EXPECT_GT(wasserstein_gap(c, draw(0.0), mask, draw(3.0), mask).item(), 0.0);
}

TEST(TrainingRun, PretrainSeparatesAnEasyDomain) {
  const std::vector<Sequence> train = synth(1, 64, {}, 11);
  const std::vector<Sequence> val = synth(1, 16, {}, 12);
  const VrnnRun run = pretrain_vrnn(train, val, config(160), "vrnn", 13);
  const double a = auc_of(run.model, run.model.clf, train);
  std::cout << "training AUC " << a << "\n";
  EXPECT_GT(a, 0.95);
}

TEST(TrainingRun, FineTuneOnSourceDataKeepsLossFalling) {
  const std::vector<Sequence> train = synth(1, 64, {}, 21);
  const VrnnRun base = pretrain_vrnn(train, train, config(20), "vrnn", 22);
  const VrnnRun tuned = fine_tune(base.model, train, train, config(40), 23);
  std::vector<double> loss;
  for (const EvalRecord& e : tuned.result.history) loss.push_back(e.val_loss);
  ASSERT_EQ(loss.size(), 8u);
  EXPECT_LE(slope(loss), 0.0);
  EXPECT_LE(loss.back(), loss.front());
}

TEST(TrainingRun, FineTuneBeatsTheFrozenSourceOnAShiftedTarget) {
  DomainShape target;
  target.signal_channel = 1;
  target.offset = {0.8, -0.5, 0.3};
  const std::vector<Sequence> src = synth(1, 64, {}, 31);
  const std::vector<Sequence> tgt_train = synth(2, 64, target, 32);
  const std::vector<Sequence> tgt_val = synth(2, 16, target, 33);
  const std::vector<Sequence> tgt_test = synth(2, 64, target, 34);
  const VrnnRun source = pretrain_vrnn(src, src, config(40), "vrnn", 35);
  const VrnnRun tuned = fine_tune(source.model, tgt_train, tgt_val, config(40), 36);
  const double before = auc_of(source.model, source.model.clf, tgt_test);
  const double after = auc_of(tuned.model, tuned.model.clf, tgt_test);
  std::cout << "target AUC frozen " << before << " fine-tuned " << after << "\n";
  EXPECT_GT(after, before + 0.1);
}

TEST(TrainingRun, AduShrinksTheCriticGap) {
  DomainShape shifted;
  shifted.offset = {1.5, 1.5, 1.5};
  const DomainData train = {synth(1, 64, {}, 41), synth(2, 64, shifted, 42)};
  const DomainData val = {synth(1, 16, {}, 43), synth(2, 16, shifted, 44)};
  FrameworkConfig c = config(100);
  const VrnnRun source = pretrain_vrnn(train[0], val[0], c, "source", 45);
  // On this toy problem the summed ELBO gradient swamps a unit-weight critic
  // term, and a critic at the default rate cannot follow the encoder.
  c.train.alpha = 100.0;
  c.train.lr_dis = 1e-3;
  c.train.critic_steps = 5;
  const AduState init = make_adu_state(source.model, 1, c, 46);
  const AduRun early = train_adu(init, train, val, c, {.halt_after_epoch = 10});
  const AduRun full = train_adu(init, train, val, c);
  const double own10 = std::abs(critic_gap(early.state.critic, early.state.source, train[0],
                                           early.state.target, train[1]));
  const double own_end = std::abs(
      critic_gap(full.state.critic, full.state.source, train[0], full.state.target, train[1]));
  const double g10 = probe_gap(early.state.source, train[0], early.state.target, train[1]);
  const double gend = probe_gap(full.state.source, train[0], full.state.target, train[1]);
  std::cout << "critic gap epoch 10 " << own10 << " final " << own_end << "; probe " << g10
            << " -> " << gend << "\n";
  EXPECT_LT(own_end, own10);
  EXPECT_LT(gend, g10);
  for (const FrozenCheck& f : full.frozen) EXPECT_TRUE(f.intact()) << f.component;
}

TEST(TrainingRun, VradsDecorrelatesGlobalAndLocalLatents) {
  DomainShape shifted;
  shifted.offset = {1.0, -1.0, 0.5};
  const DomainData train = {synth(1, 64, {}, 51), synth(2, 64, shifted, 52)};
  const DomainData val = {synth(1, 16, {}, 53), synth(2, 16, shifted, 54)};
  FrameworkConfig c = config(60);
  std::vector<Vrnn> locals;
  for (std::size_t d = 0; d < 2; ++d) {
    locals.push_back(pretrain_vrnn(train[d], val[d], config(20), "vrnn", 55 + d).model);
  }
  const VradsState init = make_vrads_state(locals, SeparationMode::kReleased, c, 57);
  const VradsRun early = train_vrads(init, train, val, c, {.halt_after_epoch = 10});
  const VradsRun full = train_vrads(init, train, val, c);
  const double c10 = global_local_cosine(early.state, train);
  const double cend = global_local_cosine(full.state, train);
  std::cout << "global/local |cosine| epoch 10 " << c10 << " final " << cend << "\n";
  EXPECT_LT(cend, c10);
}

TEST(TrainingRun, VradaLearnsAnAlignedPair) {
  const DomainData train = {synth(1, 64, {}, 61), synth(2, 64, {}, 62)};
  const DomainData val = {synth(1, 16, {}, 63), synth(2, 16, {}, 64)};
  std::vector<Sequence> test = synth(1, 32, {}, 65);
  const std::vector<Sequence> test2 = synth(2, 32, {}, 66);
  test.insert(test.end(), test2.begin(), test2.end());
  const VradsRun run = train_vrada_style(train, val, config(60), 67);
  const double a = auc_of(run.state.global, run.state.global.clf, test);
  std::cout << "vrada test AUC " << a << "\n";
  EXPECT_GT(a, 0.8);
}

}  // namespace
}  // namespace vrads
