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

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "vrads/cli.hpp"
#include "vrads/errors.hpp"
#include "vrads/nn.hpp"
#include "vrads/report.hpp"

namespace vrads {
namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("bad value '" + v + "' for " + key);
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("bad boolean '" + v + "' for " + key);
}

std::string show(bool b) { return b ? "true" : "false"; }
std::string show(double d) { return format_double(d); }
std::string show(std::size_t n) { return std::to_string(n); }

template <class T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ",";
    out += show(v[i]);
  }
  return out;
}

struct Key {
  const char* name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define VRADS_NUM(NAME, FIELD, TYPE)                                                     \
  Key {                                                                                  \
    NAME, [](RunConfig& c, const std::string& v) { c.FIELD = parse_number<TYPE>(NAME, v); }, \
        [](const RunConfig& c) { return show(static_cast<TYPE>(c.FIELD)); }              \
  }
#define VRADS_BOOL(NAME, FIELD)                                                    \
  Key {                                                                            \
    NAME, [](RunConfig& c, const std::string& v) { c.FIELD = parse_bool(NAME, v); }, \
        [](const RunConfig& c) { return show(c.FIELD); }                           \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> kKeys = {
      VRADS_NUM("seed", seed, std::uint64_t),
      VRADS_NUM("horizon_hours", cohort.horizon_hours, double),
      {"data_dir", [](RunConfig& c, const std::string& v) { c.data_dir = v; },
       [](const RunConfig& c) { return c.data_dir; }},
      VRADS_NUM("data.visits", cohort.visits, std::size_t),
      VRADS_NUM("data.visible_windows", cohort.visible_windows, std::size_t),
      VRADS_NUM("data.pool_factor", cohort.pool_factor, double),
      VRADS_NUM("data.pool_prevalence", cohort.pool_prevalence, double),
      VRADS_BOOL("data.full_geometry", benchmark.full_geometry),
      VRADS_BOOL("data.covariate_shift", benchmark.covariate_shift),
      VRADS_BOOL("data.systematic_bias", benchmark.systematic_bias),
      VRADS_NUM("data.separation", benchmark.separation, double),
      VRADS_NUM("model.hidden", framework.vrnn.hidden, std::size_t),
      VRADS_NUM("model.latent", framework.vrnn.latent, std::size_t),
      VRADS_NUM("model.feature_width", framework.vrnn.feature_width, std::size_t),
      {"model.trunk",
       [](RunConfig& c, const std::string& v) {
         c.framework.vrnn.trunk.clear();
         for (const std::string& w : split_list(v)) {
           c.framework.vrnn.trunk.push_back(parse_number<std::size_t>("model.trunk", w));
         }
       },
       [](const RunConfig& c) { return join(c.framework.vrnn.trunk); }},
      VRADS_NUM("model.sigma_floor", framework.vrnn.sigma_floor, double),
      VRADS_NUM("model.forget_bias", framework.vrnn.forget_bias, double),
      VRADS_NUM("train.lr_dis", framework.train.lr_dis, double),
      VRADS_NUM("train.lr_clf", framework.train.lr_clf, double),
      VRADS_NUM("train.lr_vrnn", framework.train.lr_vrnn, double),
      VRADS_NUM("train.batch_size", framework.train.batch_size, std::size_t),
      VRADS_NUM("train.epochs", framework.train.epochs, std::size_t),
      VRADS_NUM("train.pretrain_epochs", framework.pretrain_epochs, std::size_t),
      VRADS_NUM("train.eval_every", framework.train.eval_every, std::size_t),
      VRADS_NUM("train.seed", framework.train.seed, std::uint64_t),
      VRADS_NUM("train.critic_steps", framework.train.critic_steps, std::size_t),
      VRADS_NUM("train.alpha", framework.train.alpha, double),
      VRADS_NUM("train.beta", framework.train.beta, double),
      VRADS_BOOL("train.rotate", framework.train.rotate),
      VRADS_NUM("train.clip_norm", framework.train.clip_norm, double),
      VRADS_NUM("train.patience", framework.train.patience, std::size_t),
      VRADS_NUM("train.gp_lambda", framework.train.gp_lambda, double),
      VRADS_NUM("train.critic_hidden", framework.train.critic_hidden, std::size_t),
      VRADS_BOOL("train.sample_noise", framework.train.sample_noise),
      {"train.critic_mode",
       [](RunConfig& c, const std::string& v) { c.framework.critic_mode = parse_critic_mode(v); },
       [](const RunConfig& c) -> std::string {
         return c.framework.critic_mode == GpConfig::Mode::kWeightClip ? "weight-clip"
                                                                       : "gradient-penalty";
       }},
      VRADS_NUM("train.critic_clip", framework.critic_clip, double),
      VRADS_NUM("cv.folds", plan.folds, std::size_t),
      {"cv.seeds",
       [](RunConfig& c, const std::string& v) {
         c.plan.seeds.clear();
         for (const std::string& s : split_list(v)) {
           c.plan.seeds.push_back(parse_number<std::uint64_t>("cv.seeds", s));
         }
       },
       [](const RunConfig& c) { return join(c.plan.seeds); }},
      VRADS_NUM("cv.val_fraction", plan.val_fraction, double),
      VRADS_NUM("cv.fold", fold, std::size_t),
      {"variants",
       [](RunConfig& c, const std::string& v) {
         c.variants.clear();
         for (const std::string& s : split_list(v)) c.variants.push_back(parse_variant(s));
       },
       [](const RunConfig& c) {
         std::string out;
         for (std::size_t i = 0; i < c.variants.size(); ++i) {
           out += (i > 0 ? "," : "") + std::string(variant_name(c.variants[i]));
         }
         return out;
       }},
  };
  return kKeys;
}

#undef VRADS_NUM
#undef VRADS_BOOL

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  for (const Key& k : keys()) {
    if (key == k.name) {
      k.set(*this, value);
      if (key == "horizon_hours") {
        check_horizon(cohort.horizon_hours);
        horizon_set = true;
      }
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

std::string RunConfig::resolved() const {
  std::string out;
  for (const Key& k : keys()) out += std::string(k.name) + " = " + k.get(*this) + "\n";
  return out;
}

std::string RunConfig::hash() const {
  const std::string text = resolved();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return hex64(h);
}

void check_horizon(double hours) {
  const double k = (hours - 24.0) / 4.0;
  if (!(hours >= 24.0 && hours <= 48.0) || k != static_cast<double>(static_cast<int>(k))) {
    throw ConfigError("horizon must be 24 to 48 hours in steps of 4, got " + format_double(hours));
  }
}

void RunConfig::validate() const {
  check_horizon(cohort.horizon_hours);
  framework.validate();
  plan.validate();
  if (fold >= plan.folds) throw ConfigError("cv.fold must be below cv.folds");
  if (cohort.visits == 0 || cohort.visits % 2 != 0) {
    throw ConfigError("data.visits must be even and positive");
  }
  if (cohort.visible_windows == 0) throw ConfigError("data.visible_windows must be positive");
  if (framework.vrnn.trunk.empty()) throw ConfigError("model.trunk needs at least one width");
}

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::stringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace vrads
