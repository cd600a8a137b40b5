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

// Synthetic two-domain visit generator and the preprocessing pipeline that
// turns raw event streams into fixed-step sequences.

#ifndef VRADS_DATA_HPP_
#define VRADS_DATA_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "vrads/batch.hpp"

namespace vrads {

enum class ChannelKind { kVital, kOxygen, kLab };

const char* kind_name(ChannelKind k);
ChannelKind parse_kind(const std::string& s);

struct ChannelSpec {
  std::string name;
  ChannelKind kind = ChannelKind::kVital;
  double mean = 0.0;
  double sd = 1.0;
  double loading = 0.0;   // response to the latent health state, in sd units
  double noise_sd = 0.5;  // measurement noise, in sd units
  double offset = 0.0;    // additive measurement offset (systematic bias)
  double scale = 1.0;     // multiplicative measurement scale
};

struct Subgroup {
  double weight = 1.0;
  std::vector<double> offsets;  // per channel, in sd units
};

struct DomainSpec {
  std::string name = "d1";
  int domain = 1;
  std::vector<ChannelSpec> channels;
  std::vector<Subgroup> subgroups;
  // Mean minutes between measurements of each kind.
  double vital_interval = 244.0;
  double oxygen_interval = 244.0;
  double lab_interval = 2868.0;
  double prevalence = 0.5;
  // Latent severity: positives N(separation, severity_sd), negatives N(0, severity_sd).
  double separation = 3.0;
  double severity_sd = 1.0;
  // Share of the severity signal that only appears close to the endpoint.
  double ramp_weight = 0.4;
  double ramp_hours = 24.0;
  // Ornstein-Uhlenbeck noise on the latent state.
  double ou_sd = 0.5;
  double ou_hours = 12.0;
  // Positives' onset and negatives' stream end, in hours after admission.
  double min_stay_hours = 24.0;
  double max_stay_hours = 168.0;
  double negative_max_stay_hours = 240.0;
  std::uint64_t seed = 1;

  // Throws ConfigError on weights that do not sum to 1, non-positive
  // intervals, mismatched offset vectors and similar.
  void validate() const;
};

nlohmann::json to_json(const DomainSpec& spec);
DomainSpec domain_spec_from_json(const nlohmann::json& j);

struct Event {
  std::size_t channel = 0;
  double minute = 0.0;
  double value = 0.0;
};

struct RawEventStream {
  std::string visit_id;
  int domain = 1;
  int label = 0;
  int subgroup = 0;
  double severity = 0.0;      // latent, for oracle checks only
  double end_minute = 0.0;    // stream end
  double onset_minute = -1.0; // positives only
  std::vector<Event> events;  // sorted by minute
};

std::vector<RawEventStream> generate_domain(const DomainSpec& spec, std::size_t n_visits);

// Column layout after aggregation: vitals contribute (min, max, mean), every
// other channel its mean.
struct Layout {
  std::vector<std::string> names;
  std::vector<ChannelKind> kinds;
  std::size_t size() const { return names.size(); }
};

Layout make_layout(const std::vector<ChannelSpec>& channels);

constexpr double kWindowMinutes = 30.0;

struct AggregatedSequence {
  std::string visit_id;
  int domain = 1;
  int label = 0;
  int subgroup = 0;
  double endpoint_minute = 0.0;  // onset, or the truncation point of a negative
  std::size_t windows = 0;
  std::size_t columns = 0;
  std::vector<double> values;  // [windows x columns], NaN where missing
  // 1 where a value was carried forward; empty before carry_forward.
  std::vector<std::uint8_t> carried;

  double at(std::size_t w, std::size_t c) const { return values[w * columns + c]; }
  bool missing(std::size_t w, std::size_t c) const;
};

// Window w covers [30 w, 30 (w + 1)) minutes; the stream spans
// floor(end / 30) + 1 windows. Throws DataError on unsorted events.
AggregatedSequence aggregate(const RawEventStream& stream, const std::vector<ChannelSpec>& channels,
                             double window_minutes = kWindowMinutes);

struct CarryHorizons {
  std::size_t vital = 16;   // 8 hours of 30-minute windows
  std::size_t oxygen = 16;
  std::size_t lab = 48;     // 24 hours
};

// Fills a missing cell from the last observed window of the same column when
// it lies at most the kind's horizon back. Carried values count as observed
// downstream but never seed further carries, so the operation is idempotent.
AggregatedSequence carry_forward(const AggregatedSequence& seq, const Layout& layout,
                                 const CarryHorizons& horizons = {});

struct AlignOptions {
  double horizon_hours = 48.0;
  std::size_t visible_windows = 240;
};

struct AlignResult {
  std::vector<AggregatedSequence> kept;
  std::size_t excluded = 0;  // visits with no window before the horizon
};

// Quantile matching: negatives sorted by stream end take the positive endpoint
// at the same quantile, capped by their own stream end. Returns one endpoint
// per negative, in input order.
std::vector<double> match_truncation(const std::vector<double>& positive_endpoints,
                                     const std::vector<double>& negative_ends);

// Keeps the windows that end at least horizon_hours before the endpoint, at
// most visible_windows of them, counted back from the last one.
AlignResult align_truncate(const std::vector<AggregatedSequence>& seqs, const AlignOptions& options);

// Indices into `pool` reproducing the per-stratum counts of `reference`.
// Throws DataError when a stratum of the pool is too small.
std::vector<std::size_t> stratified_sample(const std::vector<std::uint64_t>& pool_strata,
                                           const std::vector<std::uint64_t>& reference_strata,
                                           std::uint64_t seed);

// Subgroup and stay-length bucket (whole days).
std::uint64_t stratum_of(int subgroup, double endpoint_minute);

// Value sequence with NaN for missing cells and indicators set where missing.
Sequence to_sequence(const AggregatedSequence& seq);

// Per-column training statistics. `provenance` lists the visit ids they were
// computed from, sorted.
struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> sd;
  std::vector<std::string> provenance;

  bool derived_from(const std::string& visit_id) const;
};

// Mean and population sd over observed cells. Throws DataError when a column
// is never observed.
ChannelStats fit_channel_stats(std::span<const Sequence> seqs);
// Missing cells take the training mean; indicators mark exactly those cells.
std::vector<Sequence> impute_mean(std::span<const Sequence> seqs, const ChannelStats& stats);
// (x - mean) / sd on value channels; a zero sd leaves values centred only.
std::vector<Sequence> standardize(std::span<const Sequence> seqs, const ChannelStats& stats);

// Line-delimited JSON, one visit per line, null for missing values.
void write_sequences(const std::string& path, std::span<const Sequence> seqs);
std::vector<Sequence> read_sequences(const std::string& path);

// Two-sample Kolmogorov-Smirnov statistic and its asymptotic critical value
// at level 0.01 or 0.05.
double ks_statistic(std::vector<double> a, std::vector<double> b);
double ks_critical(std::size_t n, std::size_t m, double level);

// Ready-made specs. The desk geometry has 2 vitals, 1 oxygen and 5 labs
// (12 aggregated columns); the full geometry 7 vitals, 2 oxygen, 10 labs (33).
struct BenchmarkOptions {
  bool full_geometry = false;
  bool covariate_shift = true;
  bool systematic_bias = true;
  double separation = 3.0;
  std::uint64_t seed = 1;
};

// Domain 1 and domain 2 of the two-domain benchmark.
std::vector<DomainSpec> make_benchmark(const BenchmarkOptions& options);
// A single domain whose label is close to linearly separable.
DomainSpec easy_domain(std::uint64_t seed, bool full_geometry = false);

struct CohortOptions {
  std::size_t visits = 1500;     // per domain, half of them positive
  double horizon_hours = 48.0;
  std::size_t visible_windows = 48;
  double pool_factor = 4.0;      // raw visits generated per kept visit
  double pool_prevalence = 0.25;
};

struct Cohort {
  std::vector<Sequence> sequences;
  std::size_t excluded = 0;
  std::size_t generated = 0;
};

// Generate, sample negatives by stratum, aggregate, carry forward, align and
// balance to exactly `visits` sequences with equal class counts.
Cohort build_cohort(const DomainSpec& spec, const CohortOptions& options);

}  // namespace vrads

#endif  // VRADS_DATA_HPP_
