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

// Variational recurrent network: per-step prior, posterior, decoder and LSTM
// recurrence, the sequence ELBO and a last-step classifier.

#ifndef VRADS_VRNN_HPP_
#define VRADS_VRNN_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "vrads/batch.hpp"
#include "vrads/nn.hpp"
#include "vrads/tensor.hpp"

namespace vrads {

struct VrnnConfig {
  std::size_t input_dim = 24;  // value channels + indicator channels
  std::size_t recon_dim = 12;  // value channels reconstructed by the decoder
  std::size_t hidden = 30;
  std::size_t latent = 50;
  std::size_t feature_width = 30;           // output width of phi_x and phi_z
  std::vector<std::size_t> trunk = {30};    // hidden widths of each Gaussian head
  double sigma_floor = 1e-6;
  double forget_bias = 0.0;
  Initializer init;
};

struct Vrnn {
  VrnnConfig config;
  DenseLayer phi_x;
  DenseLayer phi_z;
  GaussianHead prior;
  GaussianHead enc;
  GaussianHead dec;
  LstmCell rec;
  DenseLayer clf;

  // theta_e: everything that shapes the latent path.
  ParamList encoder_params();
  // theta_d: the decoder head.
  ParamList decoder_params();
  // theta_c: the classifier head.
  ParamList classifier_params();
  ParamList vrnn_params();  // encoder + decoder
  ParamList all_params();   // encoder + decoder + classifier
};

// `name` prefixes every parameter; `seed` fixes the initialization.
Vrnn make_vrnn(const VrnnConfig& config, const std::string& name, std::uint64_t seed);

// Reparameterization noise. When `sample` is false every draw is zero, so the
// latent path follows the posterior mean.
struct NoiseSpec {
  bool sample = false;
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;
  std::uint64_t tag = 0;
};

// Standard normal draws for step t, one independent stream per sequence key.
std::vector<Tensor> draw_noise(const SequenceBatch& b, std::size_t latent,
                               const NoiseSpec& spec);

LatentDist prior_step(const Vrnn& v, const LstmState& state, const Context* ctx = nullptr);
LatentDist infer_step(const Vrnn& v, const Tensor& x, const LstmState& state,
                      const Context* ctx = nullptr);
Tensor reparam_sample(const LatentDist& d, const Tensor& noise);
LstmState recurrence_step(const Vrnn& v, const Tensor& x, const Tensor& z,
                          const LstmState& state, const Context* ctx = nullptr);
LatentDist decode_step(const Vrnn& v, const Tensor& z, const LstmState& state,
                       const Context* ctx = nullptr);

// KL(q || p) for diagonal Gaussians, summed over the last axis: [batch].
Tensor kl_diag_gaussian(const LatentDist& q, const LatentDist& p);
// Elementwise KL terms, same shape as the inputs.
Tensor kl_elements(const LatentDist& q, const LatentDist& p);
// -sum_j mask_j log N(x_j | mu_j, sigma_j^2) per row: [batch].
Tensor gaussian_nll(const Tensor& x, const LatentDist& d, const Tensor& mask);
Tensor nll_elements(const Tensor& x, const LatentDist& d);

struct VrnnPass {
  Tensor kl;                // sum over sequences and valid steps
  Tensor nll;               // sum over sequences, valid steps and observed channels
  Tensor elbo;              // (kl + nll) / batch
  std::vector<Tensor> z;    // per step [batch x latent] (when requested)
  Tensor z_last;            // [batch x latent] at each sequence's last valid step
};

struct PassOptions {
  bool elbo = true;    // compute prior/decoder terms
  bool keep_z = false; // retain the latent sequence
};

VrnnPass run_vrnn(const Vrnn& v, const SequenceBatch& b, const NoiseSpec& noise,
                  const Context* ctx = nullptr, PassOptions options = {});

Tensor elbo_loss(const Vrnn& v, const SequenceBatch& b, const NoiseSpec& noise,
                 const Context* ctx = nullptr);

struct EncodedSequence {
  Tensor z_seq;   // [batch x steps x latent]
  Tensor z_last;  // [batch x latent]
};

EncodedSequence encode_sequence(const Vrnn& v, const SequenceBatch& b, const NoiseSpec& noise,
                                const Context* ctx = nullptr);

// Classifier logits [batch x 1] and probabilities [batch].
Tensor classifier_logits(const DenseLayer& head, const Tensor& z_last,
                         const Context* ctx = nullptr);
std::vector<double> classify(const DenseLayer& head, const Tensor& z_last);
// Mean binary cross-entropy computed from logits.
Tensor bce_with_logits(const Tensor& logits, const std::vector<int>& labels);
Tensor clf_loss(const DenseLayer& head, const Tensor& z_last, const std::vector<int>& labels,
                const Context* ctx = nullptr);
// Mean binary cross-entropy of probabilities, clamped to [1e-12, 1 - 1e-12].
double bce_from_probabilities(const std::vector<double>& p, const std::vector<int>& labels);

// Posterior-mean probabilities for every sequence in `seqs`.
std::vector<double> predict(const Vrnn& v, const DenseLayer& head,
                            const std::vector<Sequence>& seqs, std::size_t batch_size = 64);

}  // namespace vrads

#endif  // VRADS_VRNN_HPP_
