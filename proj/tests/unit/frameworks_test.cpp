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

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <thread>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "vrads/errors.hpp"
#include "vrads/frameworks.hpp"
#include "vrads/ops.hpp"
#include "vrads/report.hpp"

namespace vrads {
namespace {

using testing::random_sequences;
using testing::random_tensor;

constexpr std::size_t kChannels = 3;

FrameworkConfig small_config() {
  FrameworkConfig c;
  c.vrnn.input_dim = 2 * kChannels;
  c.vrnn.recon_dim = kChannels;
  c.vrnn.hidden = 5;
  c.vrnn.latent = 4;
  c.vrnn.feature_width = 5;
  c.vrnn.trunk = {5};
  c.train.epochs = 2;
  c.train.batch_size = 8;
  c.train.eval_every = 1;
  c.train.critic_hidden = 4;
  return c;
}

std::vector<Sequence> domain_seqs(int domain, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Sequence> out = random_sequences(n, 2, 6, kChannels, rng);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].domain = domain;
    out[i].visit_id = "d" + std::to_string(domain) + "-" + std::to_string(i);
  }
  return out;
}

CvSplit small_split(std::uint64_t seed = 7) {
  CvSplit s;
  s.seed = seed;
  for (int d = 1; d <= 2; ++d) {
    std::vector<Sequence> all = domain_seqs(d, 28, seed * 10 + d);
    s.train[d - 1].assign(all.begin(), all.begin() + 16);
    s.val[d - 1].assign(all.begin() + 16, all.begin() + 22);
    s.test.insert(s.test.end(), all.begin() + 22, all.end());
  }
  return s;
}

NoiseSpec sampled(std::uint64_t seed) {
  NoiseSpec n;
  n.sample = true;
  n.seed = seed;
  n.epoch = 3;
  n.tag = 11;
  return n;
}

// Squared Frobenius norm of A^T B with explicit loops.
double frob_oracle(const Tensor& a, const Tensor& b) {
  const std::size_t n = a.dim(0);
  const std::size_t p = a.dim(1);
  const std::size_t q = b.dim(1);
  double acc = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < q; ++j) {
      double e = 0.0;
      for (std::size_t r = 0; r < n; ++r) e += a.values()[r * p + i] * b.values()[r * q + j];
      acc += e * e;
    }
  }
  return acc;
}

Tensor basis_rows(std::size_t n, std::size_t dim, std::size_t k) {
  std::vector<double> v(n * dim, 0.0);
  for (std::size_t r = 0; r < n; ++r) v[r * dim + k] = 1.0;
  return Tensor(Shape{n, dim}, std::move(v));
}

double critic_mean(const Critic& c, const Vrnn& v, const SequenceBatch& b, const NoiseSpec& n) {
  return mean(critic_score(c, encode_sequence(v, b, n).z_seq, b.mask_tensor())).item();
}

void zero(ParamList params) {
  for (Param* p : params) p->value = Tensor::zeros(p->value.shape());
}

// ----- variants ------------------------------------------------------------

TEST(Variants, NamesRoundTrip) {
  EXPECT_EQ(all_variants().size(), 10u);
  for (Variant v : all_variants()) EXPECT_EQ(parse_variant(variant_name(v)), v);
  EXPECT_THROW(parse_variant("vrads"), ConfigError);
  EXPECT_STREQ(variant_name(ladder_variants()[0]), "vrnn-both");
  EXPECT_STREQ(variant_name(ladder_variants()[3]), "vrads-released");
}

TEST(Variants, CloneRenamesWithoutChangingValues) {
  const Vrnn v = make_vrnn(small_config().vrnn, "src", 3);
  Vrnn c = clone_vrnn(v, "copy");
  Vrnn w = v;
  const ParamList a = w.all_params();
  const ParamList b = c.all_params();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(b[i]->name.substr(0, 5), "copy.");
    EXPECT_EQ(a[i]->name.substr(4), b[i]->name.substr(5));
    EXPECT_EQ(a[i]->value.values()[0], b[i]->value.values()[0]);
  }
}

// ----- diff loss ---------------------------------------------------------------

TEST(DiffLoss, OrthogonalColumnSpacesGiveZero) {
  // Global and local latents living on disjoint samples.
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor a = random_tensor({3, 4}, rng);
    const Tensor b = random_tensor({2, 4}, rng);
    const Tensor g = pad(a, 0, 0, 2);
    const Tensor l = pad(b, 0, 3, 0);
    EXPECT_EQ(diff_loss(g, l, l, g).item(), 0.0);
  }
}

TEST(DiffLoss, SampleWiseOrthogonalRowsAreNotEnough) {
  // Z_g^T Z_l couples every global feature with every local feature across
  // samples, so e1 rows against e2 rows give n^2 per domain.
  const Tensor g = basis_rows(5, 4, 0);
  const Tensor l = basis_rows(5, 4, 1);
  EXPECT_EQ(diff_loss(g, l, l, g).item(), 50.0);
}

TEST(DiffLoss, IdentityGivesDimension) {
  for (std::size_t d : {1u, 3u, 6u}) {
    std::vector<double> v(d * d, 0.0);
    for (std::size_t k = 0; k < d; ++k) v[k * d + k] = 1.0;
    const Tensor i(Shape{d, d}, std::move(v));
    EXPECT_EQ(diff_loss(i, i, Tensor::zeros({1, d}), Tensor::zeros({1, d})).item(),
              static_cast<double>(d));
  }
}

TEST(DiffLoss, MatchesDoubleLoopOracle) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n1 = 1 + rng() % 6;
    const std::size_t n2 = 1 + rng() % 6;
    const std::size_t d = 1 + rng() % 5;
    const Tensor g1 = random_tensor({n1, d}, rng);
    const Tensor l1 = random_tensor({n1, d}, rng);
    const Tensor g2 = random_tensor({n2, d}, rng);
    const Tensor l2 = random_tensor({n2, d}, rng);
    const double want = frob_oracle(g1, l1) + frob_oracle(g2, l2);
    EXPECT_NEAR(diff_loss(g1, l1, g2, l2).item(), want, 1e-12 * (1.0 + want));
  }
}

TEST(DiffLoss, NonNegativeAndHomogeneous) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> cdist(-3.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor g1 = random_tensor({4, 3}, rng);
    const Tensor l1 = random_tensor({4, 3}, rng);
    const Tensor g2 = random_tensor({5, 3}, rng);
    const Tensor l2 = random_tensor({5, 3}, rng);
    const double c = cdist(rng);
    const double base = diff_loss(g1, l1, g2, l2).item();
    EXPECT_GE(base, 0.0);
    EXPECT_NEAR(diff_loss(c * g1, l1, c * g2, l2).item(), c * c * base, 1e-10 * (1.0 + base));
  }
}

TEST(DiffLoss, ShapeMismatchThrows) {
  EXPECT_THROW(diff_loss(Tensor::zeros({3, 2}), Tensor::zeros({3, 3}), Tensor::zeros({1, 2}),
                         Tensor::zeros({1, 2})),
               ShapeError);
  EXPECT_THROW(diff_loss(Tensor::zeros({3, 2}), Tensor::zeros({3, 2}), Tensor::zeros({2, 2}),
                         Tensor::zeros({1, 2})),
               ShapeError);
}

// ----- ADU losses ------------------------------------------------------------------

struct AduFixture {
  FrameworkConfig config = small_config();
  AduState state;
  SequenceBatch src;
  SequenceBatch tgt;
  NoiseSpec noise = sampled(9);

  AduFixture() {
    state = make_adu_state(make_vrnn(config.vrnn, "pre", 4), 1, config, 5);
    // Give the target its own weights so source and target passes differ.
    Vrnn other = clone_vrnn(make_vrnn(config.vrnn, "pre", 8), "target");
    const ParamList from = other.encoder_params();
    const ParamList to = state.target.encoder_params();
    for (std::size_t i = 0; i < to.size(); ++i) to[i]->value = from[i]->value;
    src = make_batch(domain_seqs(1, 6, 21));
    tgt = make_batch(domain_seqs(2, 5, 22));
  }
};

TEST(AduLoss, AlphaZeroIsTargetElbo) {
  AduFixture f;
  f.state.alpha = 0.0;
  EXPECT_EQ(adu_unification_loss(f.state, f.tgt, f.noise).item(),
            elbo_loss(f.state.target, f.tgt, derive_noise(f.noise, 1)).item());
}

TEST(AduLoss, ZeroCriticAddsNothing) {
  AduFixture f;
  f.state.alpha = 2.5;
  zero(f.state.critic.params());
  EXPECT_EQ(adu_unification_loss(f.state, f.tgt, f.noise).item(),
            elbo_loss(f.state.target, f.tgt, derive_noise(f.noise, 1)).item());
}

TEST(AduLoss, UnificationRecomposes) {
  AduFixture f;
  f.state.alpha = 0.7;
  const NoiseSpec nt = derive_noise(f.noise, 1);
  const double want = elbo_loss(f.state.target, f.tgt, nt).item() -
                      0.7 * critic_mean(f.state.critic, f.state.target, f.tgt, nt);
  EXPECT_NEAR(adu_unification_loss(f.state, f.tgt, f.noise).item(), want, 1e-10);
}

TEST(AduLoss, ClassifierRecomposes) {
  AduFixture f;
  PassOptions o;
  o.elbo = false;
  const Tensor zs = run_vrnn(f.state.source, f.src, derive_noise(f.noise, 0), nullptr, o).z_last;
  const Tensor zt = run_vrnn(f.state.target, f.tgt, derive_noise(f.noise, 1), nullptr, o).z_last;
  const double want = bce_from_probabilities(classify(f.state.classifier(), zs), f.src.labels) +
                      bce_from_probabilities(classify(f.state.classifier(), zt), f.tgt.labels);
  EXPECT_NEAR(adu_classifier_loss(f.state, f.src, f.tgt, f.noise).item(), want, 1e-10);
}

TEST(AduLoss, UniformPredictionsGiveTwoLn2) {
  AduFixture f;
  zero(f.state.target.classifier_params());
  EXPECT_NEAR(adu_classifier_loss(f.state, f.src, f.tgt, f.noise).item(), 2.0 * std::numbers::ln2,
              1e-15);
}

TEST(AduLoss, PerfectPredictionsGiveZero) {
  AduFixture f;
  for (SequenceBatch* b : {&f.src, &f.tgt}) {
    for (int& y : b->labels) y = 1;
  }
  zero(f.state.target.classifier_params());
  f.state.target.clf.bias.value = Tensor(Shape{1}, std::vector<double>{60.0});
  EXPECT_LT(adu_classifier_loss(f.state, f.src, f.tgt, f.noise).item(), 1e-20);
}

ParamList concat_all(std::initializer_list<ParamList> lists) {
  ParamList out;
  for (const ParamList& l : lists) out.insert(out.end(), l.begin(), l.end());
  return out;
}

double abs_sum(const std::vector<Tensor>& g, std::size_t from, std::size_t to) {
  double acc = 0.0;
  for (std::size_t i = from; i < to; ++i) {
    for (double v : g[i].values()) acc += std::abs(v);
  }
  return acc;
}

TEST(AduLoss, SourceReceivesNoGradient) {
  AduFixture f;
  ParamList params = f.state.source.all_params();
  const std::size_t n_src = params.size();
  for (Param* p : f.state.target.encoder_params()) params.push_back(p);
  Tape tape;
  const Context ctx(tape, params);
  const Tensor loss = adu_classifier_loss(f.state, f.src, f.tgt, f.noise, &ctx) +
                      adu_unification_loss(f.state, f.tgt, f.noise, &ctx);
  const std::vector<Tensor> g = grad(loss, ctx.leaves(params));
  EXPECT_EQ(abs_sum(g, 0, n_src), 0.0);
  EXPECT_GT(abs_sum(g, n_src, g.size()), 0.0);
}

TEST(AduState, TargetStartsAsSourceCopy) {
  AduFixture f;
  const AduState s = make_adu_state(f.state.source, 2, f.config, 1);
  Vrnn a = s.source;
  Vrnn b = s.target;
  const ParamList pa = a.all_params();
  const ParamList pb = b.all_params();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    ASSERT_EQ(pa[i]->value.size(), pb[i]->value.size());
    for (std::size_t k = 0; k < pa[i]->value.size(); ++k) {
      EXPECT_EQ(pa[i]->value.values()[k], pb[i]->value.values()[k]);
    }
  }
  EXPECT_THROW(make_adu_state(f.state.source, 3, f.config, 1), ConfigError);
}

// ----- VR-ADS losses ------------------------------------------------------------

struct VradsFixture {
  FrameworkConfig config = small_config();
  std::vector<Vrnn> locals;
  SequenceBatch b1;
  SequenceBatch b2;
  NoiseSpec noise = sampled(13);

  VradsFixture() {
    locals = {make_vrnn(config.vrnn, "p1", 31), make_vrnn(config.vrnn, "p2", 32)};
    b1 = make_batch(domain_seqs(1, 6, 41));
    b2 = make_batch(domain_seqs(2, 6, 42));
  }

  VradsState state(SeparationMode mode, double alpha, double beta) const {
    FrameworkConfig c = config;
    c.train.alpha = alpha;
    c.train.beta = beta;
    const std::vector<Vrnn> l = mode == SeparationMode::kShared ? std::vector<Vrnn>{} : locals;
    return make_vrads_state(l, mode, c, 77);
  }

  double global_elbo(const VradsState& s) const {
    return elbo_loss(s.global, b1, derive_noise(noise, 0)).item() +
           elbo_loss(s.global, b2, derive_noise(noise, 1)).item();
  }

  double local_elbo(const VradsState& s) const {
    return elbo_loss(s.locals[0], b1, derive_noise(noise, 2)).item() +
           elbo_loss(s.locals[1], b2, derive_noise(noise, 3)).item();
  }

  double adv(const VradsState& s) const {
    return critic_mean(s.critic, s.global, b1, derive_noise(noise, 0)) -
           critic_mean(s.critic, s.global, b2, derive_noise(noise, 1));
  }

  double diff(const VradsState& s) const {
    const Tensor g1 = encode_sequence(s.global, b1, derive_noise(noise, 0)).z_last;
    const Tensor g2 = encode_sequence(s.global, b2, derive_noise(noise, 1)).z_last;
    const Tensor l1 = encode_sequence(s.locals[0], b1, derive_noise(noise, 2)).z_last;
    const Tensor l2 = encode_sequence(s.locals[1], b2, derive_noise(noise, 3)).z_last;
    return frob_oracle(g1, l1) + frob_oracle(g2, l2);
  }
};

TEST(VradsLoss, FixedWithoutWeightsIsGlobalElbo) {
  VradsFixture f;
  const VradsState s = f.state(SeparationMode::kFixed, 0.0, 0.0);
  EXPECT_NEAR(vrads_separation_loss(s, f.b1, f.b2, f.noise).item(), f.global_elbo(s), 1e-10);
}

TEST(VradsLoss, ReleasedMinusFixedIsLocalElbo) {
  VradsFixture f;
  for (double alpha : {0.0, 0.8}) {
    for (double beta : {0.0, 0.3}) {
      const VradsState fixed = f.state(SeparationMode::kFixed, alpha, beta);
      VradsState released = fixed;
      released.mode = SeparationMode::kReleased;
      const double gap = vrads_separation_loss(released, f.b1, f.b2, f.noise).item() -
                         vrads_separation_loss(fixed, f.b1, f.b2, f.noise).item();
      EXPECT_NEAR(gap, f.local_elbo(fixed), 1e-10);
    }
  }
}

TEST(VradsLoss, SeparationRecomposes) {
  VradsFixture f;
  const VradsState s = f.state(SeparationMode::kReleased, 0.6, 0.2);
  const double want = f.local_elbo(s) + f.global_elbo(s) + 0.6 * f.adv(s) + 0.2 * f.diff(s);
  EXPECT_NEAR(vrads_separation_loss(s, f.b1, f.b2, f.noise).item(), want, 1e-10);
}

TEST(VradsLoss, LadderReducesDefinitionally) {
  VradsFixture f;
  // beta = 0 on the fixed model leaves the shared adversarial VRNN's loss.
  const VradsState fixed = f.state(SeparationMode::kFixed, 0.9, 0.0);
  VradsState shared = f.state(SeparationMode::kShared, 0.9, 0.0);
  shared.global = fixed.global;
  shared.critic = fixed.critic;
  EXPECT_EQ(vrads_separation_loss(fixed, f.b1, f.b2, f.noise).item(),
            vrads_separation_loss(shared, f.b1, f.b2, f.noise).item());
  // alpha = 0 further leaves the pooled VRNN's ELBO (two equal-size batches
  // sum to twice the mean over the joined batch).
  shared.alpha = 0.0;
  NoiseSpec off;
  std::vector<Sequence> joined = unbatch(f.b1);
  for (const Sequence& x : unbatch(f.b2)) joined.push_back(x);
  EXPECT_NEAR(vrads_separation_loss(shared, f.b1, f.b2, off).item(),
              2.0 * elbo_loss(shared.global, make_batch(joined), off).item(), 1e-10);
}

TEST(VradsLoss, SharedModeHasNoBeta) {
  VradsFixture f;
  const VradsState s = f.state(SeparationMode::kShared, 0.5, 0.4);
  EXPECT_EQ(s.beta, 0.0);
  EXPECT_TRUE(s.locals.empty());
  EXPECT_NEAR(vrads_separation_loss(s, f.b1, f.b2, f.noise).item(),
              f.global_elbo(s) + 0.5 * f.adv(s), 1e-10);
  VradsState bad = s;
  bad.mode = SeparationMode::kFixed;
  EXPECT_THROW(vrads_separation_loss(bad, f.b1, f.b2, f.noise), ConfigError);
}

TEST(VradsLoss, ClassifierRecomposesAndBounds) {
  VradsFixture f;
  VradsState s = f.state(SeparationMode::kReleased, 1.0, 0.1);
  const Tensor z1 = encode_sequence(s.global, f.b1, derive_noise(f.noise, 0)).z_last;
  const Tensor z2 = encode_sequence(s.global, f.b2, derive_noise(f.noise, 1)).z_last;
  const double want = bce_from_probabilities(classify(s.classifier(), z1), f.b1.labels) +
                      bce_from_probabilities(classify(s.classifier(), z2), f.b2.labels);
  EXPECT_NEAR(vrads_classifier_loss(s, f.b1, f.b2, f.noise).item(), want, 1e-10);

  zero(s.global.classifier_params());
  EXPECT_NEAR(vrads_classifier_loss(s, f.b1, f.b2, f.noise).item(), 2.0 * std::numbers::ln2, 1e-15);

  for (SequenceBatch* b : {&f.b1, &f.b2}) {
    for (int& y : b->labels) y = 0;
  }
  s.global.clf.bias.value = Tensor(Shape{1}, std::vector<double>{-60.0});
  EXPECT_LT(vrads_classifier_loss(s, f.b1, f.b2, f.noise).item(), 1e-20);
}

TEST(VradsLoss, FixedLocalsReceiveNoGradient) {
  VradsFixture f;
  for (SeparationMode mode : {SeparationMode::kFixed, SeparationMode::kReleased}) {
    VradsState s = f.state(mode, 1.0, 0.5);
    ParamList params = concat_all({s.locals[0].vrnn_params(), s.locals[1].vrnn_params()});
    const std::size_t n_local = params.size();
    for (Param* p : s.global.vrnn_params()) params.push_back(p);
    Tape tape;
    const Context ctx(tape, params);
    const std::vector<Tensor> g =
        grad(vrads_separation_loss(s, f.b1, f.b2, f.noise, &ctx), ctx.leaves(params));
    if (mode == SeparationMode::kFixed) {
      EXPECT_EQ(abs_sum(g, 0, n_local), 0.0);
    } else {
      EXPECT_GT(abs_sum(g, 0, n_local), 0.0);
    }
    EXPECT_GT(abs_sum(g, n_local, g.size()), 0.0);
  }
}

TEST(VradsLoss, DecodersGetNoDiffGradient) {
  VradsFixture f;
  VradsState with = f.state(SeparationMode::kReleased, 0.0, 0.5);
  VradsState without = with;
  without.beta = 0.0;
  auto dec_grads = [&](VradsState& s) {
    ParamList params = concat_all({s.locals[0].decoder_params(), s.locals[1].decoder_params()});
    Tape tape;
    const Context ctx(tape, params);
    return grad(vrads_separation_loss(s, f.b1, f.b2, f.noise, &ctx), ctx.leaves(params));
  };
  const std::vector<Tensor> a = dec_grads(with);
  const std::vector<Tensor> b = dec_grads(without);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t k = 0; k < a[i].size(); ++k) {
      EXPECT_NEAR(a[i].values()[k], b[i].values()[k], 1e-12);
    }
  }
}

// ----- training ----------------------------------------------------------------

std::uint64_t hash_of(Vrnn v) { return hash_params(v.all_params()); }

TEST(Pretrain, ZeroEpochsReturnsInitialization) {
  FrameworkConfig c = small_config();
  c.train.epochs = 0;
  const CvSplit s = small_split();
  const VrnnRun run = pretrain_vrnn(s.train[0], s.val[0], c, "m", 5);
  EXPECT_EQ(hash_of(run.model), hash_of(make_vrnn(c.vrnn, "m", 5)));
  EXPECT_TRUE(run.result.history.empty());
}

TEST(Pretrain, DeterministicAndLearns) {
  const FrameworkConfig c = small_config();
  const CvSplit s = small_split();
  const VrnnRun a = pretrain_vrnn(s.train[0], s.val[0], c, "m", 5);
  const VrnnRun b = pretrain_vrnn(s.train[0], s.val[0], c, "m", 5);
  EXPECT_EQ(hash_of(a.model), hash_of(b.model));
  EXPECT_NE(hash_of(a.model), hash_of(make_vrnn(c.vrnn, "m", 5)));
  EXPECT_EQ(a.result.history.size(), 2u);
}

TEST(Pretrain, RejectsBadData) {
  const FrameworkConfig c = small_config();
  const CvSplit s = small_split();
  EXPECT_THROW(pretrain_vrnn({}, s.val[0], c, "m", 1), DataError);
  std::vector<Sequence> one = s.train[0];
  for (Sequence& x : one) x.label = 1;
  EXPECT_THROW(pretrain_vrnn(one, s.val[0], c, "m", 1), DataError);
  FrameworkConfig wide = c;
  wide.vrnn.input_dim = 8;
  wide.vrnn.recon_dim = 4;
  EXPECT_THROW(pretrain_vrnn(s.train[0], s.val[0], wide, "m", 1), ShapeError);
}

TEST(FineTune, ZeroEpochsIsIdentityAndDimsChecked) {
  FrameworkConfig c = small_config();
  const CvSplit s = small_split();
  const VrnnRun pre = pretrain_vrnn(s.train[0], s.val[0], c, "m", 5);
  c.train.epochs = 0;
  EXPECT_EQ(hash_of(fine_tune(pre.model, s.train[1], s.val[1], c, 3).model), hash_of(pre.model));
  c.train.epochs = 1;
  EXPECT_NE(hash_of(fine_tune(pre.model, s.train[1], s.val[1], c, 3).model), hash_of(pre.model));
  const Vrnn wide = make_vrnn([&] {
    VrnnConfig v = c.vrnn;
    v.input_dim = 8;
    v.recon_dim = 4;
    return v;
  }(), "w", 1);
  EXPECT_THROW(fine_tune(wide, s.train[1], s.val[1], c, 3), ShapeError);
}

TEST(TrainAdu, FrozenComponentsUnchanged) {
  const FrameworkConfig c = small_config();
  const CvSplit s = small_split();
  const VrnnRun pre = pretrain_vrnn(s.train[0], s.val[0], c, "m", 5);
  const AduState init = make_adu_state(pre.model, 1, c, 9);
  const AduRun run = train_adu(init, s.train, s.val, c);
  ASSERT_EQ(run.frozen.size(), 2u);
  for (const FrozenCheck& f : run.frozen) EXPECT_TRUE(f.intact()) << f.component;
  AduState before = init;
  AduState after = run.state;
  EXPECT_EQ(hash_params(before.frozen_params()), hash_params(after.frozen_params()));
  EXPECT_NE(hash_params(before.target.encoder_params()), hash_params(after.target.encoder_params()));
  EXPECT_NE(hash_params(before.critic.params()), hash_params(after.critic.params()));
  EXPECT_NE(hash_params(before.target.classifier_params()),
            hash_params(after.target.classifier_params()));
}

TEST(TrainVrads, FixedFreezesLocalsReleasedTrainsThem) {
  const FrameworkConfig c = small_config();
  const CvSplit s = small_split();
  const std::vector<Vrnn> locals = {make_vrnn(c.vrnn, "a", 1), make_vrnn(c.vrnn, "b", 2)};
  const VradsRun fixed = train_vrads(make_vrads_state(locals, SeparationMode::kFixed, c, 3),
                                     s.train, s.val, c);
  ASSERT_EQ(fixed.frozen.size(), 2u);
  for (const FrozenCheck& f : fixed.frozen) EXPECT_TRUE(f.intact()) << f.component;

  const VradsState init = make_vrads_state(locals, SeparationMode::kReleased, c, 3);
  const VradsRun released = train_vrads(init, s.train, s.val, c);
  EXPECT_TRUE(released.frozen.empty());
  EXPECT_NE(hash_of(released.state.locals[0]), hash_of(init.locals[0]));
  EXPECT_NE(hash_of(released.state.locals[1]), hash_of(init.locals[1]));
}

TEST(FitVariant, EveryVariantTrainsDeterministically) {
  FrameworkConfig c = small_config();
  c.train.epochs = 1;
  const CvSplit s = small_split();
  PretrainCache cache;
  for (Variant v : all_variants()) {
    FitOptions o;
    o.cache = &cache;
    Model a = fit_variant(v, s, c, o);
    Model b = fit_variant(v, s, c);
    EXPECT_EQ(hash_params(a.params()), hash_params(b.params())) << variant_name(v);
    for (const FrozenCheck& f : a.frozen) EXPECT_TRUE(f.intact()) << variant_name(v);
    const std::vector<double> p = predict(a, s.test);
    ASSERT_EQ(p.size(), s.test.size());
    for (double q : p) EXPECT_TRUE(q > 0.0 && q < 1.0);
  }
}

TEST(FitVariant, ComponentsMatchVariant) {
  FrameworkConfig c = small_config();
  c.train.epochs = 1;
  const CvSplit s = small_split();
  PretrainCache cache;
  FitOptions o;
  o.cache = &cache;
  const Model adu = fit_variant(Variant::kAdu21, s, c, o);
  ASSERT_EQ(adu.components.size(), 2u);
  EXPECT_EQ(adu.route[0], 1u);  // domain 1 is the target
  EXPECT_EQ(adu.route[1], 0u);
  EXPECT_EQ(adu.frozen.size(), 2u);
  const Model rel = fit_variant(Variant::kVradsReleased, s, c, o);
  EXPECT_EQ(rel.components.size(), 3u);
  EXPECT_TRUE(rel.critic.has_value());
  EXPECT_TRUE(rel.frozen.empty());
  const Model fixed = fit_variant(Variant::kVradsFixed, s, c, o);
  EXPECT_EQ(fixed.frozen.size(), 2u);
  const Model vrada = fit_variant(Variant::kVrada, s, c, o);
  EXPECT_EQ(vrada.components.size(), 1u);
  const Model d1 = fit_variant(Variant::kVrnnD1, s, c, o);
  EXPECT_FALSE(d1.critic.has_value());
  // The cached pretraining is the single-domain baseline.
  Vrnn cached = clone_vrnn(cache.get(s, 1, c).model, "vrnn");
  Model d1c = d1;
  EXPECT_EQ(hash_params(cached.all_params()), hash_params(d1c.components[0].vrnn.all_params()));
}

TEST(Predict, RoutesByDomain) {
  FrameworkConfig c = small_config();
  c.train.epochs = 1;
  const CvSplit s = small_split();
  const Model m = fit_variant(Variant::kAdu12, s, c);
  const std::vector<double> p = predict(m, s.test);
  const DenseLayer& head = m.component("target").vrnn.clf;
  for (int d = 1; d <= 2; ++d) {
    std::vector<Sequence> part;
    std::vector<double> got;
    for (std::size_t i = 0; i < s.test.size(); ++i) {
      if (s.test[i].domain != d) continue;
      part.push_back(s.test[i]);
      got.push_back(p[i]);
    }
    EXPECT_EQ(got, predict(m.component(d == 1 ? "source" : "target").vrnn, head, part));
  }
  std::vector<Sequence> bad = {s.test[0]};
  bad[0].domain = 3;
  EXPECT_THROW(predict(m, bad), DataError);
}

TEST(Model, SaveLoadRoundTrip) {
  FrameworkConfig c = small_config();
  c.train.epochs = 1;
  const CvSplit s = small_split();
  const std::string dir = (std::filesystem::temp_directory_path() / "vrads_model_rt").string();
  std::filesystem::remove_all(dir);
  for (Variant v : {Variant::kVradsReleased, Variant::kAdu12, Variant::kVrnnBoth}) {
    Model m = fit_variant(v, s, c);
    save_model(dir, m);
    const Model back = load_model(dir, v, c.vrnn, c.train.critic_hidden);
    EXPECT_EQ(predict(back, s.test), predict(m, s.test)) << variant_name(v);
  }
  EXPECT_TRUE(std::filesystem::exists(dir + "/local1.tensors"));
  EXPECT_TRUE(std::filesystem::exists(dir + "/critic.tensors"));
  EXPECT_TRUE(std::filesystem::exists(dir + "/classifier.tensors"));
  std::filesystem::remove_all(dir);
}

TEST(FitVariant, HaltAndResumeMatchesUninterrupted) {
  FrameworkConfig c = small_config();
  c.train.epochs = 3;
  const CvSplit s = small_split();
  const std::string dir = (std::filesystem::temp_directory_path() / "vrads_fit_resume").string();
  std::filesystem::remove_all(dir);
  FitOptions halt;
  halt.checkpoint_dir = dir;
  halt.halt_after_epoch = 1;
  const Model partial = fit_variant(Variant::kVradsFixed, s, c, halt);
  EXPECT_TRUE(partial.result.halted);
  FitOptions resume;
  resume.checkpoint_dir = dir;
  Model resumed = fit_variant(Variant::kVradsFixed, s, c, resume);
  EXPECT_EQ(resumed.result.resumed_from, 1u);
  Model fresh = fit_variant(Variant::kVradsFixed, s, c);
  EXPECT_EQ(hash_params(resumed.params()), hash_params(fresh.params()));
  std::filesystem::remove_all(dir);
}

TEST(PretrainCache, ConcurrentCallersShareOneRun) {
  FrameworkConfig c = small_config();
  c.train.epochs = 1;
  const CvSplit s = small_split();
  PretrainCache cache;
  std::vector<std::uint64_t> hashes(4);
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < hashes.size(); ++i) {
    threads.emplace_back([&, i] { hashes[i] = hash_of(cache.get(s, 2, c).model); });
  }
  for (std::thread& t : threads) t.join();
  for (std::uint64_t h : hashes) EXPECT_EQ(h, hashes[0]);
  CvSplit other = s;
  other.seed = s.seed + 1;
  EXPECT_NE(hash_of(cache.get(other, 2, c).model), hashes[0]);
}

TEST(Runner, ProducesTestPredictions) {
  FrameworkConfig c = small_config();
  c.train.epochs = 1;
  const CvSplit s = small_split();
  PretrainCache cache;
  const CvRunner r = make_runner(Variant::kVradsFixed, c, &cache);
  const std::vector<double> p = r(s);
  EXPECT_EQ(p.size(), s.test.size());
}

}  // namespace
}  // namespace vrads
