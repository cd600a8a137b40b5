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
// The ten systems compared in the experiments: single-domain and pooled
// VRNNs, fine-tuning, a shared adversarial VRNN, adversarial domain
// unification (ADU) and adversarial domain separation (VR-ADS).

#ifndef VRADS_FRAMEWORKS_HPP_
#define VRADS_FRAMEWORKS_HPP_

#include <array>
#include <cstdint>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "vrads/adversarial.hpp"
#include "vrads/batch.hpp"
#include "vrads/cv.hpp"
#include "vrads/trainer.hpp"
#include "vrads/vrnn.hpp"

namespace vrads {

enum class Variant {
  kVrnnD1,
  kVrnnD2,
  kVrnnBoth,
  kFt12,
  kFt21,
  kVrada,
  kAdu12,
  kAdu21,
  kVradsFixed,
  kVradsReleased,
};

const std::array<Variant, 10>& all_variants();
// The four rungs of the ablation ladder, in order of added loss terms.
const std::array<Variant, 4>& ladder_variants();
const char* variant_name(Variant v);
Variant parse_variant(const std::string& s);

struct FrameworkConfig {
  VrnnConfig vrnn;
  TrainConfig train;
  // Epochs of single-VRNN training (baselines and pretraining); 0 uses train.epochs.
  std::size_t pretrain_epochs = 0;
  GpConfig::Mode critic_mode = GpConfig::Mode::kGradientPenalty;
  double critic_clip = 0.01;

  std::size_t single_epochs() const { return pretrain_epochs > 0 ? pretrain_epochs : train.epochs; }
  GpConfig gp() const;
  void validate() const;
};

// Copy of `v` whose parameter names carry the prefix `name` instead of the original one.
Vrnn clone_vrnn(const Vrnn& v, const std::string& name);

// Per-sequence latent path of a pass run with keep_z: [batch x steps x latent].
Tensor stack_latents(const VrnnPass& pass, std::size_t batch, std::size_t latent);

NoiseSpec derive_noise(const NoiseSpec& base, std::uint64_t component);

struct FrozenCheck {
  std::string component;
  std::uint64_t before = 0;
  std::uint64_t after = 0;

  bool intact() const { return before == after; }
};

// ----- single VRNN ------------------------------------------------------

// Trains a VRNN on one dataset: the ELBO updates theta_e and theta_d, the
// classifier loss updates theta_e and theta_c. Validation loss is the
// classifier cross-entropy on `val`.
struct VrnnRun {
  Vrnn model;
  TrainResult result;
};

VrnnRun pretrain_vrnn(const std::vector<Sequence>& train, const std::vector<Sequence>& val,
                      const FrameworkConfig& config, const std::string& name, std::uint64_t seed,
                      const TrainOptions& options = {});

// Continues training every parameter of `pretrained` on the target data.
VrnnRun fine_tune(const Vrnn& pretrained, const std::vector<Sequence>& train,
                  const std::vector<Sequence>& val, const FrameworkConfig& config,
                  std::uint64_t seed, const TrainOptions& options = {});

// ----- ADU ----------------------------------------------------------------

// `target` starts as a copy of `source`; only target.encoder_params() and the
// classifier (target.clf) train. target.dec is the frozen source decoder.
struct AduState {
  Vrnn source;
  Vrnn target;
  Critic critic;
  double alpha = 1.0;
  int source_domain = 1;

  DenseLayer& classifier() { return target.clf; }
  const DenseLayer& classifier() const { return target.clf; }
  ParamList frozen_params();
};

AduState make_adu_state(const Vrnn& source, int source_domain, const FrameworkConfig& config,
                        std::uint64_t seed);

// Target ELBO + alpha * (-mean critic score of the target latents).
Tensor adu_unification_loss(const AduState& s, const SequenceBatch& target,
                            const NoiseSpec& noise, const Context* ctx = nullptr);
// BCE of the classifier on frozen-source last latents plus BCE on target last latents.
Tensor adu_classifier_loss(const AduState& s, const SequenceBatch& source,
                           const SequenceBatch& target, const NoiseSpec& noise,
                           const Context* ctx = nullptr);
// Critic objective with source latents as the real side.
Tensor adu_critic_loss(const AduState& s, const SequenceBatch& source, const SequenceBatch& target,
                       const NoiseSpec& noise, const GpConfig& gp, const std::vector<double>& eps,
                       const Context* ctx = nullptr);

struct AduRun {
  AduState state;
  TrainResult result;
  std::vector<FrozenCheck> frozen;
};

// `train` and `val` are indexed by domain - 1.
AduRun train_adu(const AduState& init, const DomainData& train, const DomainData& val,
                 const FrameworkConfig& config, const TrainOptions& options = {});

// ----- VR-ADS and the shared adversarial VRNN ------------------------------

enum class SeparationMode { kShared, kFixed, kReleased };

const char* mode_name(SeparationMode m);

// kShared has no local VRNNs and is the VRADA-style model.
struct VradsState {
  std::vector<Vrnn> locals;  // empty for kShared, else domain 1 and domain 2
  Vrnn global;
  Critic critic;
  double alpha = 1.0;
  double beta = 0.1;
  SeparationMode mode = SeparationMode::kReleased;

  DenseLayer& classifier() { return global.clf; }
  const DenseLayer& classifier() const { return global.clf; }
  // Parameters updated by the VRNN-side optimizer.
  ParamList vrnn_side_params();
};

VradsState make_vrads_state(const std::vector<Vrnn>& locals, SeparationMode mode,
                            const FrameworkConfig& config, std::uint64_t seed);

// Squared Frobenius norms of Zg1^T Zl1 and Zg2^T Zl2, summed.
Tensor diff_loss(const Tensor& zg1, const Tensor& zl1, const Tensor& zg2, const Tensor& zl2);

// Local ELBOs (kReleased only) + global ELBOs on both batches
// + alpha * (mean D(zg1) - mean D(zg2)) + beta * diff_loss (not for kShared).
Tensor vrads_separation_loss(const VradsState& s, const SequenceBatch& b1,
                             const SequenceBatch& b2, const NoiseSpec& noise,
                             const Context* ctx = nullptr);
Tensor vrads_classifier_loss(const VradsState& s, const SequenceBatch& b1,
                             const SequenceBatch& b2, const NoiseSpec& noise,
                             const Context* ctx = nullptr);
// Critic objective with domain-1 global latents as the real side.
Tensor vrads_critic_loss(const VradsState& s, const SequenceBatch& b1, const SequenceBatch& b2,
                         const NoiseSpec& noise, const GpConfig& gp,
                         const std::vector<double>& eps, const Context* ctx = nullptr);

struct VradsRun {
  VradsState state;
  TrainResult result;
  std::vector<FrozenCheck> frozen;
};

VradsRun train_vrads(const VradsState& init, const DomainData& train, const DomainData& val,
                     const FrameworkConfig& config, const TrainOptions& options = {});
VradsRun train_vrada_style(const DomainData& train, const DomainData& val,
                           const FrameworkConfig& config, std::uint64_t seed,
                           const TrainOptions& options = {});

// Mean |cosine| between noise-free last latents of the global and each local encoder.
double global_local_cosine(const VradsState& s, const DomainData& data);
// Mean critic score of domain a minus domain b, noise-free latents.
double critic_gap(const Critic& c, const Vrnn& enc_a, const std::vector<Sequence>& a,
                  const Vrnn& enc_b, const std::vector<Sequence>& b);

// Largest deviation of the ablation ladder's definitional reductions on the
// first batch pair of `train`: the fixed model with beta = 0 against the
// shared model, and the shared model with alpha = 0 against the global ELBOs.
double ladder_reduction_gap(const DomainData& train, const FrameworkConfig& config,
                            std::uint64_t seed);

// ----- trained models -------------------------------------------------------

struct Component {
  std::string role;
  Vrnn vrnn;
};

// A trained system: every component VRNN, the critic when there is one, and
// which component encodes each domain and owns the classifier head.
struct Model {
  Variant variant = Variant::kVrnnBoth;
  VrnnConfig config;
  std::vector<Component> components;
  std::optional<Critic> critic;
  std::array<std::size_t, 2> route{0, 0};  // component encoding domain 1 / domain 2
  std::size_t head = 0;                    // component whose clf is the classifier
  std::vector<FrozenCheck> frozen;
  TrainResult result;

  const Component& component(const std::string& role) const;
  ParamList params();
};

// Positive-class probabilities, each sequence routed by its domain.
std::vector<double> predict(const Model& m, const std::vector<Sequence>& seqs);

// Component checkpoints: one named-tensor file per component plus the critic.
void save_model(const std::string& dir, Model& m);
Model load_model(const std::string& dir, Variant variant, const VrnnConfig& config,
                 std::size_t critic_hidden);

// Shares pretrained single-domain VRNNs between variants trained on the same
// split; keyed by split seed, fold and domain.
class PretrainCache {
 public:
  VrnnRun get(const CvSplit& split, int domain, const FrameworkConfig& config);

 private:
  using Key = std::tuple<std::uint64_t, std::size_t, int>;
  std::mutex mu_;
  std::map<Key, std::shared_future<VrnnRun>> runs_;
};

struct FitOptions {
  PretrainCache* cache = nullptr;
  // Per-component checkpoint files for resuming are written under this directory.
  std::string checkpoint_dir;
  std::size_t halt_after_epoch = 0;
};

// Trains `variant` on the split's training and validation parts.
Model fit_variant(Variant variant, const CvSplit& split, const FrameworkConfig& config,
                  const FitOptions& options = {});

// A cross-validation runner that fits `variant` and predicts the split's test set.
CvRunner make_runner(Variant variant, const FrameworkConfig& config, PretrainCache* cache);

}  // namespace vrads

#endif  // VRADS_FRAMEWORKS_HPP_
