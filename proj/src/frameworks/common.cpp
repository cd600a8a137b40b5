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

#include "common.hpp"

#include <algorithm>
#include <cmath>

#include "vrads/errors.hpp"
#include "vrads/ops.hpp"
#include "vrads/rng.hpp"

namespace vrads {
namespace {

constexpr std::array<const char*, 10> kVariantNames = {
    "vrnn-d1", "vrnn-d2", "vrnn-both", "ft-12", "ft-21",
    "vrada", "adu-12", "adu-21", "vrads-fixed", "vrads-released",
};

void rename(Param& p, const std::string& name) {
  const std::size_t dot = p.name.find('.');
  p.name = dot == std::string::npos ? name : name + p.name.substr(dot);
}

}  // namespace

const std::array<Variant, 10>& all_variants() {
  static const std::array<Variant, 10> kAll = {
      Variant::kVrnnD1, Variant::kVrnnD2, Variant::kVrnnBoth,  Variant::kFt12,
      Variant::kFt21,   Variant::kVrada,  Variant::kAdu12,     Variant::kAdu21,
      Variant::kVradsFixed, Variant::kVradsReleased,
  };
  return kAll;
}

const std::array<Variant, 4>& ladder_variants() {
  static const std::array<Variant, 4> kLadder = {
      Variant::kVrnnBoth, Variant::kVrada, Variant::kVradsFixed, Variant::kVradsReleased};
  return kLadder;
}

const char* variant_name(Variant v) { return kVariantNames[static_cast<std::size_t>(v)]; }

Variant parse_variant(const std::string& s) {
  for (Variant v : all_variants()) {
    if (s == variant_name(v)) return v;
  }
  throw ConfigError("unknown variant '" + s + "'");
}

GpConfig FrameworkConfig::gp() const {
  GpConfig g;
  g.lambda = train.gp_lambda;
  g.mode = critic_mode;
  g.clip = critic_clip;
  return g;
}

void FrameworkConfig::validate() const {
  train.validate();
  if (vrnn.hidden == 0 || vrnn.latent == 0 || vrnn.feature_width == 0) {
    throw ConfigError("VRNN sizes must be positive");
  }
  if (!(critic_clip > 0.0)) throw ConfigError("critic_clip must be positive");
}

Vrnn clone_vrnn(const Vrnn& v, const std::string& name) {
  Vrnn out = v;
  for (Param* p : out.all_params()) rename(*p, name);
  return out;
}

Tensor stack_latents(const VrnnPass& pass, std::size_t batch, std::size_t latent) {
  if (pass.z.empty()) throw ShapeError("pass did not keep its latent path");
  std::vector<Tensor> cols;
  cols.reserve(pass.z.size());
  for (const Tensor& z : pass.z) cols.push_back(reshape(z, {batch, 1, latent}));
  return concat(cols, 1);
}

NoiseSpec derive_noise(const NoiseSpec& base, std::uint64_t component) {
  NoiseSpec out = base;
  out.tag = mix_seed({base.tag, component, 0x6e6f69ULL});
  return out;
}

namespace detail {

ParamList concat_params(std::initializer_list<ParamList> lists) {
  ParamList out;
  for (const ParamList& l : lists) out.insert(out.end(), l.begin(), l.end());
  return out;
}

double descend(NAdam& opt, const std::function<Tensor(const Context*)>& loss, double clip_norm) {
  Tape tape;
  const Context ctx(tape, opt.params());
  const Tensor l = loss(&ctx);
  std::vector<Tensor> g = grad(l, ctx.leaves(opt.params()));
  if (clip_norm > 0.0) clip_grad_norm(g, clip_norm);
  opt.step(g);
  return l.item();
}

NoiseSpec noise_for(const FrameworkConfig& config, std::uint64_t seed, std::size_t epoch,
                    Group g, std::size_t repeat) {
  NoiseSpec n;
  n.sample = config.train.sample_noise;
  n.seed = seed;
  n.epoch = epoch;
  n.tag = mix_seed({static_cast<std::uint64_t>(g), repeat});
  return n;
}

PairedBatches paired_batches(const std::vector<Sequence>& a, const std::vector<Sequence>& b,
                             std::size_t batch_size, std::uint64_t seed, std::size_t epoch) {
  PairedBatches out;
  out.first = make_batches(a, batch_size, true, mix_seed({seed, epoch, 1}));
  out.second = make_batches(b, batch_size, true, mix_seed({seed, epoch, 2}));
  const std::size_t n = std::max<std::size_t>(1, std::min(a.size(), b.size()) / batch_size);
  out.first.resize(std::min(n, out.first.size()));
  out.second.resize(std::min(n, out.second.size()));
  return out;
}

std::vector<double> predict_with(const Vrnn& encoder, const DenseLayer& head,
                                 const std::vector<Sequence>& seqs) {
  return predict(encoder, head, seqs);
}

std::vector<int> labels_of(const std::vector<Sequence>& seqs) {
  std::vector<int> out;
  out.reserve(seqs.size());
  for (const Sequence& s : seqs) out.push_back(s.label);
  return out;
}

void check_trainable(const std::vector<Sequence>& seqs, const std::string& what) {
  if (seqs.empty()) throw DataError(what + " is empty");
  bool pos = false;
  bool neg = false;
  for (const Sequence& s : seqs) {
    if (s.label != 0 && s.label != 1) throw DataError(what + " has a label other than 0 or 1");
    (s.label == 1 ? pos : neg) = true;
  }
  if (!pos || !neg) throw DataError(what + " holds a single class");
}

void check_dims(const VrnnConfig& c, const std::vector<Sequence>& seqs, const std::string& what) {
  for (const Sequence& s : seqs) {
    if (2 * s.channels != c.input_dim || s.channels != c.recon_dim) {
      throw ShapeError(what + " has " + std::to_string(s.channels) +
                       " channels but the model expects " + std::to_string(c.recon_dim));
    }
  }
}

TrainConfig single_config(const FrameworkConfig& config) {
  TrainConfig t = config.train;
  t.epochs = config.single_epochs();
  return t;
}

void critic_update(NAdam& opt, Critic& critic, const FrameworkConfig& config,
                   const std::function<Tensor(const Context*)>& loss) {
  descend(opt, loss, 0.0);
  if (config.critic_mode == GpConfig::Mode::kWeightClip) clip_weights(critic, config.critic_clip);
}

}  // namespace detail
}  // namespace vrads
