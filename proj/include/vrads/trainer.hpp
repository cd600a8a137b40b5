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

// NAdam, the alternating three-optimizer schedule, early stopping and the
// resumable epoch loop shared by every training job.

#ifndef VRADS_TRAINER_HPP_
#define VRADS_TRAINER_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vrads/nn.hpp"
#include "vrads/tensor.hpp"

namespace vrads {

struct NAdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with a Nesterov look-ahead on the first moment. With t the step count
// after the update:
//   m <- b1 m + (1 - b1) g           v <- b2 v + (1 - b2) g^2
//   m_hat = (b1 m + (1 - b1) g) / (1 - b1^(t+1))
//   v_hat = v / (1 - b2^t)
//   p <- p - lr m_hat / (sqrt(v_hat) + eps)
// The formula is written out in docs/optimizer.md.
class NAdam {
 public:
  NAdam(ParamList params, NAdamConfig config);

  // Applies one update in place. Throws ShapeError on a shape mismatch and
  // NumericError on a non-finite gradient, before touching any parameter.
  void step(std::span<const Tensor> grads);

  std::size_t steps() const { return steps_; }
  const NAdamConfig& config() const { return config_; }
  const ParamList& params() const { return params_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }

  // Moments and step counter, keyed by `prefix` + parameter name.
  NamedTensors state(const std::string& prefix) const;
  void load_state(const std::string& prefix, const NamedTensors& tensors);

 private:
  ParamList params_;
  NAdamConfig config_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::size_t steps_ = 0;
};

// Rescales `grads` so their joint L2 norm is at most `max_norm`. Returns the
// norm before clipping. A non-positive bound disables clipping.
double clip_grad_norm(std::vector<Tensor>& grads, double max_norm);

enum class Group { kCritic = 0, kVrnn = 1, kClassifier = 2 };

const char* group_name(Group g);

// Update order inside each batch. With rotation the order walks the six
// permutations of (critic, vrnn, classifier) in lexicographic order, one per
// epoch; without it every epoch uses (critic, vrnn, classifier).
std::array<Group, 3> update_order(std::size_t epoch, bool rotate);

struct EvalRecord {
  std::size_t epoch = 0;  // epochs completed when the evaluation ran
  double val_loss = 0.0;
  NamedTensors checkpoint;  // may be empty when only the index is needed
};

// Index of the record with the smallest validation loss; ties go to the
// earliest epoch. Throws EmptyReductionError on an empty history.
std::size_t early_stop_select(std::span<const EvalRecord> history);

struct TrainConfig {
  double lr_dis = 1e-5;
  double lr_clf = 0.006;
  double lr_vrnn = 0.003;
  std::size_t batch_size = 32;
  std::size_t epochs = 160;
  std::size_t eval_every = 10;
  std::uint64_t seed = 1;
  std::size_t critic_steps = 1;
  double alpha = 1.0;
  double beta = 0.1;
  bool rotate = true;
  double clip_norm = 5.0;
  // Evaluations without improvement before training stops; 0 never stops.
  std::size_t patience = 0;
  double gp_lambda = 10.0;
  std::size_t critic_hidden = 30;
  bool sample_noise = true;

  // Throws ConfigError for non-positive rates or sizes.
  void validate() const;
};

// One model plus its optimizers, driven batch by batch by train().
class TrainJob {
 public:
  virtual ~TrainJob() = default;

  // Prepares the batches of `epoch` and returns how many there are.
  virtual std::size_t begin_epoch(std::size_t epoch) = 0;
  virtual bool has_group(Group g) const = 0;
  // One optimizer step of group `g` on batch `batch`; `repeat` counts
  // repeated critic steps on the same batch.
  virtual void update(Group g, std::size_t batch, std::size_t repeat) = 0;
  virtual double validation_loss() = 0;

  // Every model parameter, in a fixed order; checkpoints hold exactly these.
  virtual ParamList params() = 0;
  virtual NamedTensors optimizer_state() const = 0;
  virtual void load_optimizer_state(const NamedTensors& state) = 0;
};

struct TrainOptions {
  // When set, the state after every evaluation is written here, and an
  // existing file is resumed from.
  std::string checkpoint_path;
  // Stops after this many epochs as if the process had been killed; the
  // best checkpoint is not restored. 0 disables.
  std::size_t halt_after_epoch = 0;
};

struct TrainResult {
  std::vector<EvalRecord> history;  // checkpoints left empty
  std::size_t best_index = 0;
  std::size_t epochs_run = 0;       // including epochs restored from a checkpoint
  std::size_t resumed_from = 0;     // epoch the run resumed at, 0 for a fresh run
  bool stopped_early = false;
  bool halted = false;
};

// Runs the alternating schedule for config.epochs epochs, evaluating every
// eval_every epochs and after the last one. On return (unless halted) the
// job's parameters hold the best evaluated checkpoint. Zero epochs leave the
// parameters untouched.
TrainResult train(TrainJob& job, const TrainConfig& config, const TrainOptions& options = {});

}  // namespace vrads

#endif  // VRADS_TRAINER_HPP_
