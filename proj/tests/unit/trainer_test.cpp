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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <tuple>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "vrads/errors.hpp"
#include "vrads/ops.hpp"
#include "vrads/trainer.hpp"

namespace vrads {
namespace {

namespace fs = std::filesystem;

// Scripted NAdam on one scalar, written from the update equations.
std::vector<double> nadam_oracle(double p, const std::vector<double>& gs, double lr) {
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double m = 0.0, v = 0.0;
  std::vector<double> out;
  for (std::size_t t = 1; t <= gs.size(); ++t) {
    const double g = gs[t - 1];
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = (b1 * m + (1 - b1) * g) / (1 - std::pow(b1, t + 1));
    const double vh = v / (1 - std::pow(b2, t));
    p -= lr * mh / (std::sqrt(vh) + eps);
    out.push_back(p);
  }
  return out;
}

TEST(NAdam, ZeroGradientLeavesParametersUnchanged) {
  Param p{"p", Tensor::vector({1.0, -2.0, 3.0})};
  NAdam opt({&p}, {0.1});
  const std::vector<Tensor> g = {Tensor::zeros(Shape{3})};
  for (int i = 0; i < 5; ++i) opt.step(g);
  EXPECT_EQ(p.value.values()[0], 1.0);
  EXPECT_EQ(p.value.values()[1], -2.0);
  EXPECT_EQ(p.value.values()[2], 3.0);
  EXPECT_EQ(opt.steps(), 5u);
}

TEST(NAdam, SingleStepMatchesHandOracle) {
  Param p{"p", Tensor::scalar(1.0)};
  NAdam opt({&p}, {0.1});
  opt.step(std::vector<Tensor>{Tensor::scalar(1.0)});
  // m = 0.1, v = 0.001, m_hat = 0.19 / 0.19 = 1, v_hat = 1.
  EXPECT_NEAR(p.value.item(), 1.0 - 0.1 / (1.0 + 1e-8), 1e-15);
  EXPECT_NEAR(p.value.item(), nadam_oracle(1.0, {1.0}, 0.1)[0], 1e-15);
}

TEST(NAdam, TrajectoryMatchesScriptedOracle) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> gs(40);
  for (double& g : gs) g = normal(rng);
  const std::vector<double> want = nadam_oracle(0.3, gs, 0.01);
  Param p{"p", Tensor::scalar(0.3)};
  NAdam opt({&p}, {0.01});
  for (std::size_t t = 0; t < gs.size(); ++t) {
    opt.step(std::vector<Tensor>{Tensor::scalar(gs[t])});
    EXPECT_NEAR(p.value.item(), want[t], 1e-14);
  }
}

TEST(NAdam, FirstStepIsSignTimesRate) {
  std::mt19937_64 rng(2);
  const Tensor g0 = testing::random_tensor(Shape{50}, rng, -3.0, 3.0);
  Param p{"p", Tensor::zeros(Shape{50})};
  NAdam opt({&p}, {0.02});
  opt.step(std::vector<Tensor>{g0});
  for (std::size_t i = 0; i < 50; ++i) {
    const double g = g0.values()[i];
    const double step = -p.value.values()[i];
    EXPECT_NEAR(step / (std::copysign(0.02, g)), 1.0, 0.01);
  }
}

TEST(NAdam, DeterministicAcrossInstances) {
  std::mt19937_64 rng(3);
  std::vector<Tensor> gs;
  for (int i = 0; i < 20; ++i) gs.push_back(testing::random_tensor(Shape{2, 3}, rng));
  Param a{"w", Tensor::full(Shape{2, 3}, 0.5)};
  Param b{"w", Tensor::full(Shape{2, 3}, 0.5)};
  NAdam oa({&a}, {0.003});
  NAdam ob({&b}, {0.003});
  for (const Tensor& g : gs) {
    oa.step(std::vector<Tensor>{g});
    ob.step(std::vector<Tensor>{g});
  }
  EXPECT_TRUE(std::equal(a.value.values().begin(), a.value.values().end(),
                         b.value.values().begin()));
}

TEST(NAdam, ErrorsLeaveStateUntouched) {
  Param p{"p", Tensor::vector({1.0, 2.0})};
  NAdam opt({&p}, {0.1});
  EXPECT_THROW(opt.step(std::vector<Tensor>{Tensor::zeros(Shape{3})}), ShapeError);
  EXPECT_THROW(opt.step(std::vector<Tensor>{}), ShapeError);
  Tensor bad = Tensor::vector({0.0, 0.0});
  bad.mutable_values()[1] = std::nan("");
  EXPECT_THROW(opt.step(std::vector<Tensor>{bad}), NumericError);
  EXPECT_EQ(opt.steps(), 0u);
  EXPECT_EQ(p.value.values()[0], 1.0);
  EXPECT_THROW(NAdam({&p}, {0.0}), ConfigError);
}

TEST(NAdam, MomentShapesFollowParameters) {
  Param a{"a", Tensor::zeros(Shape{4, 2})};
  Param b{"b", Tensor::zeros(Shape{7})};
  NAdam opt({&a, &b}, {0.1});
  EXPECT_EQ(opt.first_moments()[0].shape(), a.value.shape());
  EXPECT_EQ(opt.second_moments()[1].shape(), b.value.shape());
}

TEST(NAdam, StateRoundTripContinuesIdentically) {
  std::mt19937_64 rng(4);
  std::vector<Tensor> gs;
  for (int i = 0; i < 10; ++i) gs.push_back(testing::random_tensor(Shape{3}, rng));
  Param a{"w", Tensor::full(Shape{3}, 0.1)};
  NAdam oa({&a}, {0.01});
  for (int i = 0; i < 5; ++i) oa.step(std::vector<Tensor>{gs[i]});
  Param b{"w", a.value.detach()};
  NAdam ob({&b}, {0.01});
  ob.load_state("opt.", oa.state("opt."));
  EXPECT_EQ(ob.steps(), 5u);
  for (int i = 5; i < 10; ++i) {
    oa.step(std::vector<Tensor>{gs[i]});
    ob.step(std::vector<Tensor>{gs[i]});
  }
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(a.value.values()[k], b.value.values()[k]);
  EXPECT_THROW(ob.load_state("other.", oa.state("opt.")), DataError);
}

TEST(ClipGradNorm, RescalesOnlyAboveBound) {
  std::vector<Tensor> g = {Tensor::vector({3.0}), Tensor::vector({4.0})};
  EXPECT_EQ(clip_grad_norm(g, 10.0), 5.0);
  EXPECT_EQ(g[0].item(), 3.0);
  EXPECT_EQ(clip_grad_norm(g, 1.0), 5.0);
  EXPECT_NEAR(g[0].item(), 0.6, 1e-15);
  EXPECT_NEAR(g[1].item(), 0.8, 1e-15);
  std::vector<Tensor> h = {Tensor::vector({30.0, 40.0})};
  clip_grad_norm(h, 0.0);
  EXPECT_EQ(h[0].values()[1], 40.0);
}

TEST(Schedule, DocumentedOrderAndCycle) {
  using G = Group;
  EXPECT_EQ(update_order(0, true), (std::array<G, 3>{G::kCritic, G::kVrnn, G::kClassifier}));
  EXPECT_EQ(update_order(1, true), (std::array<G, 3>{G::kCritic, G::kClassifier, G::kVrnn}));
  for (std::size_t e = 0; e < 24; ++e) EXPECT_EQ(update_order(e, true), update_order(e + 6, true));
  for (std::size_t e = 0; e < 24; ++e) EXPECT_EQ(update_order(e, false), update_order(0, true));
}

TEST(Schedule, VisitsAllPermutationsEqually) {
  for (std::size_t k = 1; k <= 4; ++k) {
    for (std::size_t offset : {0u, 3u, 5u}) {
      std::map<std::array<Group, 3>, int> counts;
      for (std::size_t e = offset; e < offset + 6 * k; ++e) ++counts[update_order(e, true)];
      EXPECT_EQ(counts.size(), 6u);
      for (const auto& [perm, n] : counts) {
        EXPECT_EQ(n, static_cast<int>(k));
        EXPECT_TRUE(std::is_permutation(perm.begin(), perm.end(),
                                        update_order(0, true).begin()));
      }
    }
  }
}

std::vector<EvalRecord> history_of(std::vector<std::pair<std::size_t, double>> h) {
  std::vector<EvalRecord> out;
  for (auto [e, l] : h) out.push_back({e, l, {}});
  return out;
}

TEST(EarlyStop, Selection) {
  EXPECT_EQ(early_stop_select(history_of({{10, 3.0}, {20, 2.0}, {30, 1.0}})), 2u);
  EXPECT_EQ(early_stop_select(history_of({{10, 3.0}, {20, 1.0}, {30, 2.0}})), 1u);
  const auto tie = history_of({{10, 3.0}, {20, 1.0}, {30, 2.0}, {40, 1.0}});
  EXPECT_EQ(tie[early_stop_select(tie)].epoch, 20u);
  const auto unsorted = history_of({{40, 1.0}, {20, 1.0}});
  EXPECT_EQ(unsorted[early_stop_select(unsorted)].epoch, 20u);
  EXPECT_THROW(early_stop_select(std::vector<EvalRecord>{}), EmptyReductionError);
}

// Three quadratic parameter groups pulled toward noisy per-epoch targets.
class ToyJob : public TrainJob {
 public:
  explicit ToyJob(std::uint64_t seed, bool with_critic = true)
      : with_critic_(with_critic),
        a_{"a", Tensor::vector({1.0, -1.0})},
        b_{"b", Tensor::vector({0.5})},
        c_{"c", Tensor::vector({2.0, 0.0, -2.0})},
        opt_a_({&a_}, {0.05}),
        opt_b_({&b_}, {0.05}),
        opt_c_({&c_}, {0.05}),
        seed_(seed) {}

  std::size_t begin_epoch(std::size_t epoch) override {
    epoch_ = epoch;
    return 3;
  }
  bool has_group(Group g) const override { return with_critic_ || g != Group::kCritic; }
  void update(Group g, std::size_t batch, std::size_t repeat) override {
    log.emplace_back(epoch_, batch, g, repeat);
    std::mt19937_64 rng(seed_ * 1000003 + epoch_ * 101 + batch);
    std::normal_distribution<double> noise(0.0, 0.1);
    Param& p = g == Group::kCritic ? a_ : g == Group::kVrnn ? b_ : c_;
    NAdam& opt = g == Group::kCritic ? opt_a_ : g == Group::kVrnn ? opt_b_ : opt_c_;
    Tensor grad = p.value.detach();
    for (double& x : grad.mutable_values()) x = 2.0 * (x - 0.25) + noise(rng);
    opt.step(std::vector<Tensor>{grad});
  }
  double validation_loss() override {
    ++evals;
    double s = 0.0;
    for (const Param* p : {&a_, &b_, &c_}) {
      for (double x : p->value.values()) s += (x - 0.25) * (x - 0.25);
    }
    return scripted_losses.empty() ? s : scripted_losses[(evals - 1) % scripted_losses.size()];
  }
  ParamList params() override { return {&a_, &b_, &c_}; }
  NamedTensors optimizer_state() const override {
    NamedTensors s = opt_a_.state("opt.a.");
    for (auto& e : opt_b_.state("opt.b.")) s.push_back(e);
    for (auto& e : opt_c_.state("opt.c.")) s.push_back(e);
    return s;
  }
  void load_optimizer_state(const NamedTensors& s) override {
    opt_a_.load_state("opt.a.", s);
    opt_b_.load_state("opt.b.", s);
    opt_c_.load_state("opt.c.", s);
  }

  std::vector<std::tuple<std::size_t, std::size_t, Group, std::size_t>> log;
  std::vector<double> scripted_losses;
  int evals = 0;

 private:
  bool with_critic_;
  Param a_, b_, c_;
  NAdam opt_a_, opt_b_, opt_c_;
  std::uint64_t seed_;
  std::size_t epoch_ = 0;
};

TrainConfig toy_config(std::size_t epochs) {
  TrainConfig c;
  c.epochs = epochs;
  c.eval_every = 2;
  return c;
}

TEST(Train, ZeroEpochsLeavesParameters) {
  ToyJob job(1);
  const std::uint64_t before = hash_params(job.params());
  const TrainResult r = train(job, toy_config(0));
  EXPECT_EQ(hash_params(job.params()), before);
  EXPECT_TRUE(r.history.empty());
  EXPECT_TRUE(job.log.empty());
}

TEST(Train, FollowsRotatingScheduleAndCriticRepeats) {
  ToyJob job(1);
  TrainConfig c = toy_config(7);
  c.critic_steps = 2;
  train(job, c);
  ASSERT_EQ(job.log.size(), 7u * 3u * 4u);
  std::size_t i = 0;
  for (std::size_t e = 0; e < 7; ++e) {
    for (std::size_t b = 0; b < 3; ++b) {
      for (Group g : update_order(e, true)) {
        const std::size_t reps = g == Group::kCritic ? 2 : 1;
        for (std::size_t r = 0; r < reps; ++r) {
          EXPECT_EQ(job.log[i], std::make_tuple(e, b, g, r));
          ++i;
        }
      }
    }
  }
}

TEST(Train, DisabledRotationAndMissingGroups) {
  ToyJob job(1, /*with_critic=*/false);
  TrainConfig c = toy_config(4);
  c.rotate = false;
  train(job, c);
  ASSERT_EQ(job.log.size(), 4u * 3u * 2u);
  for (std::size_t k = 0; k < job.log.size(); ++k) {
    EXPECT_EQ(std::get<2>(job.log[k]), k % 2 == 0 ? Group::kVrnn : Group::kClassifier);
  }
}

TEST(Train, EveryGroupChangesAfterOneEpoch) {
  ToyJob job(1);
  const ParamList ps = job.params();
  std::vector<std::uint64_t> before;
  for (Param* p : ps) before.push_back(hash_params({p}));
  train(job, toy_config(1));
  for (std::size_t i = 0; i < ps.size(); ++i) EXPECT_NE(hash_params({ps[i]}), before[i]);
}

TEST(Train, EvaluatesOnScheduleAndRestoresBest) {
  ToyJob job(1);
  job.scripted_losses = {5.0, 2.0, 3.0, 2.0, 4.0};
  const TrainResult r = train(job, toy_config(9));
  ASSERT_EQ(r.history.size(), 5u);
  EXPECT_EQ(r.history[0].epoch, 2u);
  EXPECT_EQ(r.history[4].epoch, 9u);
  EXPECT_EQ(r.best_index, early_stop_select(r.history));
  EXPECT_EQ(r.history[r.best_index].epoch, 4u);
  // Replaying four epochs reproduces the restored parameters.
  ToyJob replay(1);
  train(replay, toy_config(4));
  EXPECT_EQ(hash_params(job.params()), hash_params(replay.params()));
}

TEST(Train, PatienceStopsEarly) {
  ToyJob job(1);
  job.scripted_losses = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  TrainConfig c = toy_config(20);
  c.patience = 2;
  const TrainResult r = train(job, c);
  EXPECT_TRUE(r.stopped_early);
  EXPECT_EQ(r.epochs_run, 6u);
  EXPECT_EQ(r.history.size(), 3u);
}

TEST(Train, ResumeOfEarlyStoppedRunStaysStopped) {
  const fs::path dir = fs::temp_directory_path() / "vrads_train_stopped";
  fs::remove_all(dir);
  fs::create_directories(dir);
  TrainOptions o;
  o.checkpoint_path = (dir / "state.bin").string();
  TrainConfig c = toy_config(20);
  c.patience = 2;
  ToyJob first(1);
  first.scripted_losses = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  const TrainResult a = train(first, c, o);
  ToyJob second(1);
  second.scripted_losses = first.scripted_losses;
  const TrainResult b = train(second, c, o);
  EXPECT_TRUE(b.stopped_early);
  EXPECT_EQ(b.history.size(), a.history.size());
  EXPECT_EQ(hash_params(second.params()), hash_params(first.params()));
  fs::remove_all(dir);
}

TEST(Train, ResumeAfterHaltMatchesUninterruptedRun) {
  const fs::path dir = fs::temp_directory_path() / "vrads_train_resume";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string ckpt = (dir / "state.bin").string();

  ToyJob full(7);
  const TrainResult want = train(full, toy_config(11));

  ToyJob first(7);
  TrainOptions halt;
  halt.checkpoint_path = ckpt;
  halt.halt_after_epoch = 5;
  const TrainResult part = train(first, toy_config(11), halt);
  EXPECT_TRUE(part.halted);
  ASSERT_TRUE(fs::exists(ckpt));

  // A fresh process rebuilds the job and resumes from the epoch-4 checkpoint.
  ToyJob second(7);
  TrainOptions resume;
  resume.checkpoint_path = ckpt;
  const TrainResult got = train(second, toy_config(11), resume);
  EXPECT_EQ(got.resumed_from, 4u);
  EXPECT_EQ(hash_params(second.params()), hash_params(full.params()));
  ASSERT_EQ(got.history.size(), want.history.size());
  for (std::size_t i = 0; i < want.history.size(); ++i) {
    EXPECT_EQ(got.history[i].epoch, want.history[i].epoch);
    EXPECT_EQ(got.history[i].val_loss, want.history[i].val_loss);
  }
}

TEST(TrainConfig, RejectsNonPositiveSettings) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.lr_clf = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.eval_every = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

}  // namespace
}  // namespace vrads
