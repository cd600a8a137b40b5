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
#include <string>

#include "vrads/errors.hpp"
#include "vrads/trainer.hpp"

namespace vrads {
namespace {

constexpr const char* kModel = "model.";
constexpr const char* kBest = "best.";

NamedTensors with_prefix(const std::string& prefix, const NamedTensors& in) {
  NamedTensors out;
  out.reserve(in.size());
  for (const auto& [name, t] : in) out.emplace_back(prefix + name, t);
  return out;
}

// Entries of `in` whose name starts with `prefix`, with the prefix removed.
NamedTensors strip_prefix(const std::string& prefix, const NamedTensors& in) {
  NamedTensors out;
  for (const auto& [name, t] : in) {
    if (name.compare(0, prefix.size(), prefix) == 0) out.emplace_back(name.substr(prefix.size()), t);
  }
  return out;
}

void save_checkpoint(const std::string& path, TrainJob& job, std::size_t epoch, bool stopped,
                     const std::vector<EvalRecord>& history, const NamedTensors& best) {
  NamedTensors all = with_prefix(kModel, snapshot(job.params()));
  for (auto& e : job.optimizer_state()) all.push_back(std::move(e));
  for (auto& e : with_prefix(kBest, best)) all.push_back(std::move(e));
  all.emplace_back("meta.epoch", Tensor::scalar(static_cast<double>(epoch)));
  all.emplace_back("meta.stopped", Tensor::scalar(stopped ? 1.0 : 0.0));
  std::vector<double> h;
  for (const EvalRecord& r : history) {
    h.push_back(static_cast<double>(r.epoch));
    h.push_back(r.val_loss);
  }
  all.emplace_back("meta.history", Tensor(Shape{history.size(), 2}, std::move(h)));
  const std::string tmp = path + ".tmp";
  save_tensors(tmp, all);
  std::filesystem::rename(tmp, path);
}

const Tensor& find_entry(const NamedTensors& all, const std::string& name) {
  for (const auto& [n, t] : all) {
    if (n == name) return t;
  }
  throw DataError("checkpoint lacks " + name);
}

}  // namespace

const char* group_name(Group g) {
  switch (g) {
    case Group::kCritic:
      return "critic";
    case Group::kVrnn:
      return "vrnn";
    case Group::kClassifier:
      return "classifier";
  }
  return "?";
}

std::array<Group, 3> update_order(std::size_t epoch, bool rotate) {
  static constexpr std::array<std::array<Group, 3>, 6> kPerms = {{
      {Group::kCritic, Group::kVrnn, Group::kClassifier},
      {Group::kCritic, Group::kClassifier, Group::kVrnn},
      {Group::kVrnn, Group::kCritic, Group::kClassifier},
      {Group::kVrnn, Group::kClassifier, Group::kCritic},
      {Group::kClassifier, Group::kCritic, Group::kVrnn},
      {Group::kClassifier, Group::kVrnn, Group::kCritic},
  }};
  return rotate ? kPerms[epoch % kPerms.size()] : kPerms[0];
}

std::size_t early_stop_select(std::span<const EvalRecord> history) {
  if (history.empty()) throw EmptyReductionError("no evaluations to select from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < history.size(); ++i) {
    const EvalRecord& r = history[i];
    const EvalRecord& b = history[best];
    if (r.val_loss < b.val_loss || (r.val_loss == b.val_loss && r.epoch < b.epoch)) best = i;
  }
  return best;
}

void TrainConfig::validate() const {
  if (!(lr_dis > 0.0) || !(lr_clf > 0.0) || !(lr_vrnn > 0.0)) {
    throw ConfigError("learning rates must be positive");
  }
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (eval_every == 0) throw ConfigError("eval_every must be positive");
  if (critic_steps == 0) throw ConfigError("critic_steps must be positive");
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw ConfigError("alpha and beta must be non-negative");
  if (!(gp_lambda >= 0.0)) throw ConfigError("gp_lambda must be non-negative");
  if (critic_hidden == 0) throw ConfigError("critic_hidden must be positive");
  if (!std::isfinite(clip_norm)) throw ConfigError("clip_norm must be finite");
}

TrainResult train(TrainJob& job, const TrainConfig& config, const TrainOptions& options) {
  config.validate();
  TrainResult result;
  NamedTensors best;
  std::size_t start = 0;
  const ParamList params = job.params();

  if (!options.checkpoint_path.empty() && std::filesystem::exists(options.checkpoint_path)) {
    const NamedTensors all = load_tensors(options.checkpoint_path);
    restore(params, strip_prefix(kModel, all));
    job.load_optimizer_state(all);
    best = strip_prefix(kBest, all);
    start = static_cast<std::size_t>(find_entry(all, "meta.epoch").item());
    const Tensor& h = find_entry(all, "meta.history");
    if (h.rank() != 2 || h.dim(1) != 2) throw DataError("checkpoint history has a bad shape");
    for (std::size_t i = 0; i < h.dim(0); ++i) {
      result.history.push_back({static_cast<std::size_t>(h.at({i, 0})), h.at({i, 1}), {}});
    }
    result.resumed_from = start;
    result.stopped_early = find_entry(all, "meta.stopped").item() != 0.0;
  }

  std::size_t since_best = 0;
  if (!result.history.empty()) {
    result.best_index = early_stop_select(result.history);
    since_best = result.history.size() - 1 - result.best_index;
  }

  for (std::size_t epoch = start; epoch < config.epochs && !result.stopped_early; ++epoch) {
    const std::size_t batches = job.begin_epoch(epoch);
    const std::array<Group, 3> order = update_order(epoch, config.rotate);
    for (std::size_t b = 0; b < batches; ++b) {
      for (Group g : order) {
        if (!job.has_group(g)) continue;
        const std::size_t reps = g == Group::kCritic ? config.critic_steps : 1;
        for (std::size_t r = 0; r < reps; ++r) job.update(g, b, r);
      }
    }
    const std::size_t done = epoch + 1;
    result.epochs_run = done;

    if (done % config.eval_every == 0 || done == config.epochs) {
      const double loss = job.validation_loss();
      if (!std::isfinite(loss)) throw NumericError("validation loss is not finite");
      result.history.push_back({done, loss, {}});
      const std::size_t idx = early_stop_select(result.history);
      if (idx == result.history.size() - 1) {
        best = snapshot(params);
        since_best = 0;
      } else {
        ++since_best;
      }
      result.best_index = idx;
      result.stopped_early = config.patience > 0 && since_best >= config.patience && done < config.epochs;
      if (!options.checkpoint_path.empty()) {
        save_checkpoint(options.checkpoint_path, job, done, result.stopped_early, result.history, best);
      }
      if (result.stopped_early) break;
    }
    if (options.halt_after_epoch > 0 && done >= options.halt_after_epoch && done < config.epochs) {
      result.halted = true;
      return result;
    }
  }
  if (result.epochs_run < start) result.epochs_run = start;
  if (!best.empty()) restore(params, best);
  return result;
}

}  // namespace vrads
