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

// Trained models, component checkpoints and the per-variant fitting recipe.

#include <filesystem>
#include <utility>

#include "common.hpp"
#include "vrads/errors.hpp"
#include "vrads/rng.hpp"

namespace vrads {
namespace {

namespace fs = std::filesystem;

struct ModelLayout {
  std::vector<std::string> roles;
  std::array<std::size_t, 2> route;
  std::size_t head;
  bool critic;
};

ModelLayout layout_of(Variant v) {
  switch (v) {
    case Variant::kVrnnD1:
    case Variant::kVrnnD2:
    case Variant::kVrnnBoth:
    case Variant::kFt12:
    case Variant::kFt21:
      return {{"vrnn"}, {0, 0}, 0, false};
    case Variant::kVrada:
      return {{"global"}, {0, 0}, 0, true};
    case Variant::kAdu12:
      return {{"source", "target"}, {0, 1}, 1, true};
    case Variant::kAdu21:
      return {{"source", "target"}, {1, 0}, 1, true};
    case Variant::kVradsFixed:
    case Variant::kVradsReleased:
      return {{"global", "local1", "local2"}, {0, 0}, 0, true};
  }
  throw ConfigError("unknown variant");
}

Model empty_model(Variant v, const VrnnConfig& config) {
  const ModelLayout l = layout_of(v);
  Model m;
  m.variant = v;
  m.config = config;
  m.route = l.route;
  m.head = l.head;
  return m;
}

FrameworkConfig sized_for(const FrameworkConfig& config, const CvSplit& split) {
  FrameworkConfig c = config;
  const std::vector<Sequence>& any = split.train[0].empty() ? split.train[1] : split.train[0];
  if (any.empty()) throw DataError("split has no training data");
  c.vrnn.recon_dim = any.front().channels;
  c.vrnn.input_dim = 2 * any.front().channels;
  return c;
}

std::string ckpt(const FitOptions& o, const std::string& stage) {
  if (o.checkpoint_dir.empty()) return {};
  fs::create_directories(o.checkpoint_dir);
  return (fs::path(o.checkpoint_dir) / (stage + ".ckpt")).string();
}

std::uint64_t pretrain_seed(const CvSplit& split, int domain, const FrameworkConfig& config) {
  return mix_seed({split.seed, split.fold, static_cast<std::uint64_t>(domain), config.train.seed, 0x9e});
}

std::vector<Sequence> joined(const DomainData& d) {
  std::vector<Sequence> out = d[0];
  out.insert(out.end(), d[1].begin(), d[1].end());
  return out;
}

}  // namespace

const Component& Model::component(const std::string& role) const {
  for (const Component& c : components) {
    if (c.role == role) return c;
  }
  throw ConfigError(std::string("model ") + variant_name(variant) + " has no component " + role);
}

ParamList Model::params() {
  ParamList out;
  for (Component& c : components) {
    for (Param* p : c.vrnn.all_params()) out.push_back(p);
  }
  if (critic) {
    for (Param* p : critic->params()) out.push_back(p);
  }
  return out;
}

std::vector<double> predict(const Model& m, const std::vector<Sequence>& seqs) {
  if (m.components.empty()) throw ConfigError("model has no components");
  const DenseLayer& head = m.components.at(m.head).vrnn.clf;
  std::vector<double> out(seqs.size());
  for (int d = 1; d <= 2; ++d) {
    std::vector<Sequence> part;
    std::vector<std::size_t> where;
    for (std::size_t i = 0; i < seqs.size(); ++i) {
      if (seqs[i].domain == d) {
        part.push_back(seqs[i]);
        where.push_back(i);
      }
    }
    if (part.empty()) continue;
    const std::vector<double> p = predict(m.components.at(m.route[d - 1]).vrnn, head, part);
    for (std::size_t k = 0; k < p.size(); ++k) out[where[k]] = p[k];
  }
  for (const Sequence& s : seqs) {
    if (s.domain != 1 && s.domain != 2) {
      throw DataError("visit " + s.visit_id + " has domain " + std::to_string(s.domain));
    }
  }
  return out;
}

void save_model(const std::string& dir, Model& m) {
  fs::create_directories(dir);
  for (Component& c : m.components) {
    save_tensors((fs::path(dir) / (c.role + ".tensors")).string(), snapshot(c.vrnn.vrnn_params()));
  }
  save_tensors((fs::path(dir) / "classifier.tensors").string(),
               snapshot(m.components.at(m.head).vrnn.classifier_params()));
  if (m.critic) save_tensors((fs::path(dir) / "critic.tensors").string(), snapshot(m.critic->params()));
}

Model load_model(const std::string& dir, Variant variant, const VrnnConfig& config,
                 std::size_t critic_hidden) {
  const ModelLayout l = layout_of(variant);
  Model m = empty_model(variant, config);
  for (const std::string& role : l.roles) {
    Component c{role, make_vrnn(config, role, 0)};
    restore(c.vrnn.vrnn_params(), load_tensors((fs::path(dir) / (role + ".tensors")).string()));
    m.components.push_back(std::move(c));
  }
  restore(m.components[m.head].vrnn.classifier_params(),
          load_tensors((fs::path(dir) / "classifier.tensors").string()));
  if (l.critic) {
    m.critic = make_critic("critic", config.latent, critic_hidden, config.init, 0);
    restore(m.critic->params(), load_tensors((fs::path(dir) / "critic.tensors").string()));
  }
  return m;
}

VrnnRun PretrainCache::get(const CvSplit& split, int domain, const FrameworkConfig& config) {
  const Key key{split.seed, split.fold, domain};
  std::promise<VrnnRun> promise;
  std::shared_future<VrnnRun> future;
  bool owner = false;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = runs_.find(key);
    if (it == runs_.end()) {
      future = promise.get_future().share();
      runs_.emplace(key, future);
      owner = true;
    } else {
      future = it->second;
    }
  }
  if (owner) {
    try {
      const FrameworkConfig c = sized_for(config, split);
      promise.set_value(pretrain_vrnn(split.train[domain - 1], split.val[domain - 1], c,
                                      "d" + std::to_string(domain),
                                      pretrain_seed(split, domain, config)));
    } catch (...) {
      promise.set_exception(std::current_exception());
    }
  }
  return future.get();
}

Model fit_variant(Variant variant, const CvSplit& split, const FrameworkConfig& config,
                  const FitOptions& options) {
  FrameworkConfig c = sized_for(config, split);
  c.validate();
  const std::uint64_t seed = mix_seed({split.seed, split.fold, static_cast<std::uint64_t>(variant),
                                       config.train.seed, 0xf17ULL});
  // Step-two jobs draw batch order and noise from here, so runs differ per split.
  c.train.seed = seed;
  TrainOptions last;
  last.checkpoint_path = ckpt(options, "main");
  last.halt_after_epoch = options.halt_after_epoch;

  // The same config and seeds as PretrainCache, so cached and direct runs agree.
  const FrameworkConfig config_sized = sized_for(config, split);
  auto pretrained_with = [&](int d, const TrainOptions& o) {
    if (options.cache != nullptr) return options.cache->get(split, d, config);
    return pretrain_vrnn(split.train[d - 1], split.val[d - 1], config_sized, "d" + std::to_string(d),
                         pretrain_seed(split, d, config), o);
  };
  auto pretrained = [&](int d) {
    TrainOptions o;
    o.checkpoint_path = ckpt(options, "pretrain-d" + std::to_string(d));
    return pretrained_with(d, o);
  };
  auto single_model = [&](VrnnRun run) {
    Model m = empty_model(variant, c.vrnn);
    m.components.push_back({"vrnn", clone_vrnn(run.model, "vrnn")});
    m.result = std::move(run.result);
    return m;
  };

  switch (variant) {
    case Variant::kVrnnD1:
    case Variant::kVrnnD2: {
      return single_model(pretrained_with(variant == Variant::kVrnnD1 ? 1 : 2, last));
    }
    case Variant::kVrnnBoth:
      return single_model(pretrain_vrnn(joined(split.train), joined(split.val), c, "vrnn", seed, last));
    case Variant::kFt12:
    case Variant::kFt21: {
      const int s = variant == Variant::kFt12 ? 1 : 2;
      const int t = 3 - s;
      const VrnnRun src = pretrained(s);
      return single_model(fine_tune(src.model, split.train[t - 1], split.val[t - 1], c, seed, last));
    }
    case Variant::kAdu12:
    case Variant::kAdu21: {
      const int s = variant == Variant::kAdu12 ? 1 : 2;
      const VrnnRun src = pretrained(s);
      AduRun run = train_adu(make_adu_state(src.model, s, c, seed), split.train, split.val, c, last);
      Model m = empty_model(variant, c.vrnn);
      m.components.push_back({"source", std::move(run.state.source)});
      m.components.push_back({"target", std::move(run.state.target)});
      m.critic = std::move(run.state.critic);
      m.frozen = std::move(run.frozen);
      m.result = std::move(run.result);
      return m;
    }
    case Variant::kVrada:
    case Variant::kVradsFixed:
    case Variant::kVradsReleased: {
      VradsRun run;
      if (variant == Variant::kVrada) {
        run = train_vrada_style(split.train, split.val, c, seed, last);
      } else {
        const SeparationMode mode =
            variant == Variant::kVradsFixed ? SeparationMode::kFixed : SeparationMode::kReleased;
        const std::vector<Vrnn> locals = {pretrained(1).model, pretrained(2).model};
        run = train_vrads(make_vrads_state(locals, mode, c, seed), split.train, split.val, c, last);
      }
      Model m = empty_model(variant, c.vrnn);
      m.components.push_back({"global", std::move(run.state.global)});
      for (std::size_t d = 0; d < run.state.locals.size(); ++d) {
        m.components.push_back({"local" + std::to_string(d + 1), std::move(run.state.locals[d])});
      }
      m.critic = std::move(run.state.critic);
      m.frozen = std::move(run.frozen);
      m.result = std::move(run.result);
      return m;
    }
  }
  throw ConfigError("unknown variant");
}

CvRunner make_runner(Variant variant, const FrameworkConfig& config, PretrainCache* cache) {
  return [variant, config, cache](const CvSplit& split) {
    FitOptions o;
    o.cache = cache;
    const Model m = fit_variant(variant, split, config, o);
    for (const FrozenCheck& f : m.frozen) {
      if (!f.intact()) throw Error("frozen component " + f.component + " changed during training");
    }
    return predict(m, split.test);
  };
}

}  // namespace vrads
