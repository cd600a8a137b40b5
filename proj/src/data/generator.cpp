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
#include <string>

#include "vrads/data.hpp"
#include "vrads/errors.hpp"
#include "vrads/rng.hpp"

namespace vrads {
namespace {

using nlohmann::json;

double interval_of(const DomainSpec& spec, ChannelKind k) {
  switch (k) {
    case ChannelKind::kVital:
      return spec.vital_interval;
    case ChannelKind::kOxygen:
      return spec.oxygen_interval;
    case ChannelKind::kLab:
      return spec.lab_interval;
  }
  return spec.vital_interval;
}

std::string visit_name(const DomainSpec& spec, std::size_t i) {
  std::string digits = std::to_string(i);
  if (digits.size() < 6) digits.insert(0, 6 - digits.size(), '0');
  return spec.name + "-" + digits;
}

}  // namespace

const char* kind_name(ChannelKind k) {
  switch (k) {
    case ChannelKind::kVital:
      return "vital";
    case ChannelKind::kOxygen:
      return "oxygen";
    case ChannelKind::kLab:
      return "lab";
  }
  return "?";
}

ChannelKind parse_kind(const std::string& s) {
  if (s == "vital") return ChannelKind::kVital;
  if (s == "oxygen") return ChannelKind::kOxygen;
  if (s == "lab") return ChannelKind::kLab;
  throw ConfigError("unknown channel kind '" + s + "'");
}

void DomainSpec::validate() const {
  if (channels.empty()) throw ConfigError("domain " + name + " declares no channels");
  if (subgroups.empty()) throw ConfigError("domain " + name + " declares no subgroups");
  double total = 0.0;
  for (const Subgroup& g : subgroups) {
    if (!(g.weight >= 0.0)) throw ConfigError("subgroup weights must be non-negative");
    if (g.offsets.size() != channels.size()) {
      throw ConfigError("subgroup offsets must list one value per channel");
    }
    total += g.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("subgroup weights must sum to 1");
  for (double iv : {vital_interval, oxygen_interval, lab_interval}) {
    if (!(iv > 0.0)) throw ConfigError("sampling intervals must be positive");
  }
  for (const ChannelSpec& c : channels) {
    if (!(c.sd > 0.0) || !(c.noise_sd >= 0.0) || !(c.scale != 0.0)) {
      throw ConfigError("channel " + c.name + " has a non-positive sd or zero scale");
    }
  }
  if (!(prevalence > 0.0 && prevalence < 1.0)) throw ConfigError("prevalence must lie in (0, 1)");
  if (!(severity_sd > 0.0) || !(ou_sd >= 0.0) || !(ou_hours > 0.0) || !(ramp_hours > 0.0)) {
    throw ConfigError("severity_sd, ou_hours and ramp_hours must be positive");
  }
  if (!(ramp_weight >= 0.0 && ramp_weight <= 1.0)) throw ConfigError("ramp_weight must lie in [0, 1]");
  if (!(min_stay_hours > 0.0) || !(max_stay_hours >= min_stay_hours) ||
      !(negative_max_stay_hours >= min_stay_hours)) {
    throw ConfigError("stay bounds must satisfy 0 < min <= max");
  }
}

json to_json(const DomainSpec& s) {
  json channels = json::array();
  for (const ChannelSpec& c : s.channels) {
    channels.push_back({{"name", c.name},       {"kind", kind_name(c.kind)}, {"mean", c.mean},
                        {"sd", c.sd},           {"loading", c.loading},      {"noise_sd", c.noise_sd},
                        {"offset", c.offset},   {"scale", c.scale}});
  }
  json groups = json::array();
  for (const Subgroup& g : s.subgroups) groups.push_back({{"weight", g.weight}, {"offsets", g.offsets}});
  return {{"name", s.name},
          {"domain", s.domain},
          {"channels", channels},
          {"subgroups", groups},
          {"vital_interval", s.vital_interval},
          {"oxygen_interval", s.oxygen_interval},
          {"lab_interval", s.lab_interval},
          {"prevalence", s.prevalence},
          {"separation", s.separation},
          {"severity_sd", s.severity_sd},
          {"ramp_weight", s.ramp_weight},
          {"ramp_hours", s.ramp_hours},
          {"ou_sd", s.ou_sd},
          {"ou_hours", s.ou_hours},
          {"min_stay_hours", s.min_stay_hours},
          {"max_stay_hours", s.max_stay_hours},
          {"negative_max_stay_hours", s.negative_max_stay_hours},
          {"seed", s.seed}};
}

DomainSpec domain_spec_from_json(const json& j) {
  try {
    DomainSpec s;
    s.name = j.at("name").get<std::string>();
    s.domain = j.at("domain").get<int>();
    for (const json& c : j.at("channels")) {
      ChannelSpec ch;
      ch.name = c.at("name").get<std::string>();
      ch.kind = parse_kind(c.at("kind").get<std::string>());
      ch.mean = c.at("mean").get<double>();
      ch.sd = c.at("sd").get<double>();
      ch.loading = c.at("loading").get<double>();
      ch.noise_sd = c.at("noise_sd").get<double>();
      ch.offset = c.at("offset").get<double>();
      ch.scale = c.at("scale").get<double>();
      s.channels.push_back(ch);
    }
    for (const json& g : j.at("subgroups")) {
      s.subgroups.push_back({g.at("weight").get<double>(), g.at("offsets").get<std::vector<double>>()});
    }
    s.vital_interval = j.at("vital_interval").get<double>();
    s.oxygen_interval = j.at("oxygen_interval").get<double>();
    s.lab_interval = j.at("lab_interval").get<double>();
    s.prevalence = j.at("prevalence").get<double>();
    s.separation = j.at("separation").get<double>();
    s.severity_sd = j.at("severity_sd").get<double>();
    s.ramp_weight = j.at("ramp_weight").get<double>();
    s.ramp_hours = j.at("ramp_hours").get<double>();
    s.ou_sd = j.at("ou_sd").get<double>();
    s.ou_hours = j.at("ou_hours").get<double>();
    s.min_stay_hours = j.at("min_stay_hours").get<double>();
    s.max_stay_hours = j.at("max_stay_hours").get<double>();
    s.negative_max_stay_hours = j.at("negative_max_stay_hours").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed domain spec: ") + e.what());
  }
}

std::vector<RawEventStream> generate_domain(const DomainSpec& spec, std::size_t n_visits) {
  spec.validate();
  if (n_visits == 0) throw ConfigError("generate_domain needs at least one visit");
  std::vector<RawEventStream> out(n_visits);
  const std::size_t nc = spec.channels.size();
  for (std::size_t i = 0; i < n_visits; ++i) {
    Rng rng(mix_seed({spec.seed, static_cast<std::uint64_t>(spec.domain), i}));
    RawEventStream& v = out[i];
    v.visit_id = visit_name(spec, i);
    v.domain = spec.domain;
    v.label = rng.uniform() < spec.prevalence ? 1 : 0;

    double u = rng.uniform();
    v.subgroup = static_cast<int>(spec.subgroups.size()) - 1;
    for (std::size_t g = 0; g < spec.subgroups.size(); ++g) {
      if (u < spec.subgroups[g].weight) {
        v.subgroup = static_cast<int>(g);
        break;
      }
      u -= spec.subgroups[g].weight;
    }
    v.severity = rng.normal(v.label == 1 ? spec.separation : 0.0, spec.severity_sd);
    const double max_stay = v.label == 1 ? spec.max_stay_hours : spec.negative_max_stay_hours;
    v.end_minute = 60.0 * rng.uniform(spec.min_stay_hours, max_stay);
    if (v.label == 1) v.onset_minute = v.end_minute;

    // Measurement times: one renewal process per kind; a measurement records
    // every channel of that kind.
    std::vector<std::pair<double, ChannelKind>> times;
    for (ChannelKind k : {ChannelKind::kVital, ChannelKind::kOxygen, ChannelKind::kLab}) {
      const double iv = interval_of(spec, k);
      for (double t = rng.uniform(0.0, iv); t <= v.end_minute; t += rng.exponential(iv)) {
        times.emplace_back(t, k);
      }
    }
    std::stable_sort(times.begin(), times.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    const double tau = 60.0 * spec.ou_hours;
    const double ramp = 60.0 * spec.ramp_hours;
    const std::vector<double>& offsets = spec.subgroups[v.subgroup].offsets;
    double ou = rng.normal(0.0, spec.ou_sd);
    double last_t = 0.0;
    for (const auto& [t, kind] : times) {
      const double decay = std::exp(-(t - last_t) / tau);
      ou = ou * decay + spec.ou_sd * std::sqrt(1.0 - decay * decay) * rng.normal();
      last_t = t;
      const double kappa =
          (1.0 - spec.ramp_weight) + spec.ramp_weight * std::exp(-(v.end_minute - t) / ramp);
      const double h = v.severity * kappa + ou;
      for (std::size_t c = 0; c < nc; ++c) {
        const ChannelSpec& ch = spec.channels[c];
        if (ch.kind != kind) continue;
        const double clean = ch.mean + ch.sd * (offsets[c] + ch.loading * h);
        const double x = clean + ch.sd * ch.noise_sd * rng.normal();
        v.events.push_back({c, t, ch.scale * x + ch.offset});
      }
    }
  }
  return out;
}

namespace {

ChannelSpec channel(std::string name, ChannelKind kind, double mean, double sd, double loading) {
  ChannelSpec c;
  c.name = std::move(name);
  c.kind = kind;
  c.mean = mean;
  c.sd = sd;
  c.loading = loading;
  return c;
}

std::vector<ChannelSpec> desk_channels() {
  using K = ChannelKind;
  return {channel("heart_rate", K::kVital, 85.0, 12.0, 0.6),
          channel("sbp", K::kVital, 120.0, 15.0, -0.6),
          channel("fio2", K::kOxygen, 0.3, 0.08, 0.5),
          channel("wbc", K::kLab, 9.0, 3.0, 0.6),
          channel("lactate", K::kLab, 1.5, 0.6, 0.7),
          channel("creatinine", K::kLab, 1.1, 0.4, 0.5),
          channel("platelets", K::kLab, 220.0, 60.0, -0.5),
          channel("bun", K::kLab, 18.0, 6.0, 0.0)};
}

std::vector<ChannelSpec> full_channels() {
  using K = ChannelKind;
  return {channel("heart_rate", K::kVital, 85.0, 12.0, 0.6),
          channel("sbp", K::kVital, 120.0, 15.0, -0.6),
          channel("dbp", K::kVital, 70.0, 10.0, -0.4),
          channel("map", K::kVital, 85.0, 11.0, -0.5),
          channel("resp_rate", K::kVital, 18.0, 4.0, 0.5),
          channel("temperature", K::kVital, 37.0, 0.6, 0.3),
          channel("spo2", K::kVital, 96.0, 2.0, -0.3),
          channel("fio2", K::kOxygen, 0.3, 0.08, 0.5),
          channel("oxygen_flow", K::kOxygen, 2.0, 1.5, 0.4),
          channel("wbc", K::kLab, 9.0, 3.0, 0.6),
          channel("lactate", K::kLab, 1.5, 0.6, 0.7),
          channel("creatinine", K::kLab, 1.1, 0.4, 0.5),
          channel("platelets", K::kLab, 220.0, 60.0, -0.5),
          channel("bun", K::kLab, 18.0, 6.0, 0.0),
          channel("bilirubin", K::kLab, 0.8, 0.4, 0.3),
          channel("sodium", K::kLab, 139.0, 3.0, 0.0),
          channel("potassium", K::kLab, 4.1, 0.5, 0.1),
          channel("glucose", K::kLab, 120.0, 30.0, 0.2),
          channel("bicarbonate", K::kLab, 24.0, 3.0, -0.3)};
}

// Subgroup offsets: a cyclic pattern of +-0.8 sd on alternate channels.
std::vector<Subgroup> subgroups(std::size_t channels, const std::vector<double>& weights,
                                bool shifted) {
  std::vector<Subgroup> out;
  for (std::size_t g = 0; g < weights.size(); ++g) {
    Subgroup s;
    s.weight = weights[g];
    s.offsets.assign(channels, 0.0);
    if (shifted) {
      for (std::size_t c = 0; c < channels; ++c) {
        const double sign = (c + g) % 2 == 0 ? 1.0 : -1.0;
        s.offsets[c] = g == 0 ? 0.0 : sign * 0.8 * static_cast<double>(g);
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

std::vector<DomainSpec> make_benchmark(const BenchmarkOptions& o) {
  std::vector<DomainSpec> out(2);
  for (int d = 0; d < 2; ++d) {
    DomainSpec& s = out[d];
    s.name = "d" + std::to_string(d + 1);
    s.domain = d + 1;
    s.channels = o.full_geometry ? full_channels() : desk_channels();
    s.separation = o.separation;
    s.seed = o.seed;
    const std::vector<double> weights =
        !o.covariate_shift ? std::vector<double>{0.5, 0.3, 0.2}
        : d == 0           ? std::vector<double>{0.6, 0.3, 0.1}
                           : std::vector<double>{0.15, 0.35, 0.5};
    s.subgroups = subgroups(s.channels.size(), weights, o.covariate_shift);
    if (o.systematic_bias && d == 1) {
      // Mayo-like: vitals every 44 minutes, labs every 38.1 hours.
      s.vital_interval = 44.0;
      s.oxygen_interval = 44.0;
      s.lab_interval = 2286.0;
      for (ChannelSpec& c : s.channels) {
        if (c.name == "bun") c.offset = 1.5 * c.sd;
      }
    }
  }
  return out;
}

DomainSpec easy_domain(std::uint64_t seed, bool full_geometry) {
  BenchmarkOptions o;
  o.full_geometry = full_geometry;
  o.covariate_shift = false;
  o.systematic_bias = false;
  o.separation = 4.0;
  o.seed = seed;
  DomainSpec s = make_benchmark(o)[0];
  s.ramp_weight = 0.0;
  s.ou_sd = 0.3;
  // Frequent measurements so every window carries the signal.
  s.vital_interval = 44.0;
  s.oxygen_interval = 44.0;
  for (ChannelSpec& c : s.channels) c.noise_sd = 0.3;
  return s;
}

}  // namespace vrads
