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
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "vrads/data.hpp"
#include "vrads/errors.hpp"
#include "vrads/rng.hpp"

namespace vrads {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t horizon_of(const CarryHorizons& h, ChannelKind k) {
  switch (k) {
    case ChannelKind::kVital:
      return h.vital;
    case ChannelKind::kOxygen:
      return h.oxygen;
    case ChannelKind::kLab:
      return h.lab;
  }
  return 0;
}

}  // namespace

bool AggregatedSequence::missing(std::size_t w, std::size_t c) const {
  return std::isnan(at(w, c));
}

Layout make_layout(const std::vector<ChannelSpec>& channels) {
  Layout l;
  for (const ChannelSpec& c : channels) {
    if (c.kind == ChannelKind::kVital) {
      for (const char* stat : {"_min", "_max", "_mean"}) {
        l.names.push_back(c.name + stat);
        l.kinds.push_back(c.kind);
      }
    } else {
      l.names.push_back(c.name + "_mean");
      l.kinds.push_back(c.kind);
    }
  }
  return l;
}

AggregatedSequence aggregate(const RawEventStream& stream, const std::vector<ChannelSpec>& channels,
                             double window_minutes) {
  if (!(window_minutes > 0.0)) throw ConfigError("window length must be positive");
  if (!(stream.end_minute >= 0.0)) throw DataError(stream.visit_id + ": negative stream end");
  std::vector<std::size_t> first_col(channels.size());
  std::size_t cols = 0;
  for (std::size_t c = 0; c < channels.size(); ++c) {
    first_col[c] = cols;
    cols += channels[c].kind == ChannelKind::kVital ? 3 : 1;
  }
  AggregatedSequence out;
  out.visit_id = stream.visit_id;
  out.domain = stream.domain;
  out.label = stream.label;
  out.subgroup = stream.subgroup;
  out.endpoint_minute = stream.label == 1 ? stream.onset_minute : stream.end_minute;
  out.windows = static_cast<std::size_t>(std::floor(stream.end_minute / window_minutes)) + 1;
  out.columns = cols;
  out.values.assign(out.windows * cols, kNaN);

  const std::size_t cells = out.windows * channels.size();
  std::vector<double> lo(cells, std::numeric_limits<double>::infinity());
  std::vector<double> hi(cells, -std::numeric_limits<double>::infinity());
  std::vector<double> sum(cells, 0.0);
  std::vector<std::size_t> count(cells, 0);
  double prev = -std::numeric_limits<double>::infinity();
  for (const Event& e : stream.events) {
    if (e.minute < prev) throw DataError(stream.visit_id + ": events are not sorted by time");
    prev = e.minute;
    if (e.minute < 0.0 || e.minute > stream.end_minute) {
      throw DataError(stream.visit_id + ": event outside the stream");
    }
    if (e.channel >= channels.size()) throw DataError(stream.visit_id + ": undeclared channel");
    const auto w = static_cast<std::size_t>(std::floor(e.minute / window_minutes));
    const std::size_t k = w * channels.size() + e.channel;
    lo[k] = std::min(lo[k], e.value);
    hi[k] = std::max(hi[k], e.value);
    sum[k] += e.value;
    ++count[k];
  }
  for (std::size_t w = 0; w < out.windows; ++w) {
    for (std::size_t c = 0; c < channels.size(); ++c) {
      const std::size_t k = w * channels.size() + c;
      if (count[k] == 0) continue;
      double* row = out.values.data() + w * cols + first_col[c];
      const double mean = sum[k] / static_cast<double>(count[k]);
      if (channels[c].kind == ChannelKind::kVital) {
        row[0] = lo[k];
        row[1] = hi[k];
        row[2] = mean;
      } else {
        row[0] = mean;
      }
    }
  }
  return out;
}

AggregatedSequence carry_forward(const AggregatedSequence& seq, const Layout& layout,
                                 const CarryHorizons& horizons) {
  if (layout.size() != seq.columns) throw ShapeError("layout does not match the sequence columns");
  AggregatedSequence out = seq;
  out.carried.resize(seq.values.size(), 0);
  auto carried = [&](std::size_t w, std::size_t c) {
    return !seq.carried.empty() && seq.carried[w * seq.columns + c] != 0;
  };
  for (std::size_t c = 0; c < seq.columns; ++c) {
    const std::size_t reach = horizon_of(horizons, layout.kinds[c]);
    bool seen = false;
    std::size_t last = 0;
    for (std::size_t w = 0; w < seq.windows; ++w) {
      const std::size_t k = w * seq.columns + c;
      if (!seq.missing(w, c) && !carried(w, c)) {
        seen = true;
        last = w;
      } else if (seen && w - last <= reach) {
        out.values[k] = seq.at(last, c);
        out.carried[k] = 1;
      }
    }
  }
  return out;
}

std::vector<double> match_truncation(const std::vector<double>& positive_endpoints,
                                     const std::vector<double>& negative_ends) {
  if (negative_ends.empty()) return {};
  if (positive_endpoints.empty()) throw DataError("no positives to match negative lengths to");
  std::vector<double> pos = positive_endpoints;
  std::sort(pos.begin(), pos.end());
  std::vector<std::size_t> order(negative_ends.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return negative_ends[a] < negative_ends[b]; });
  std::vector<double> out(negative_ends.size());
  const double n = static_cast<double>(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    const double q = order.size() == 1 ? 0.5 : static_cast<double>(r) / (n - 1.0);
    const auto idx = static_cast<std::size_t>(std::lround(q * static_cast<double>(pos.size() - 1)));
    out[order[r]] = std::min(pos[idx], negative_ends[order[r]]);
  }
  return out;
}

AlignResult align_truncate(const std::vector<AggregatedSequence>& seqs, const AlignOptions& o) {
  if (!(o.horizon_hours >= 0.0)) throw ConfigError("prediction horizon must be non-negative");
  if (o.visible_windows == 0) throw ConfigError("visible window must hold at least one step");
  AlignResult r;
  for (const AggregatedSequence& s : seqs) {
    const double obs_end = s.endpoint_minute - 60.0 * o.horizon_hours;
    const double complete = std::floor(obs_end / kWindowMinutes);
    if (!(complete >= 1.0)) {
      ++r.excluded;
      continue;
    }
    const std::size_t count = std::min(static_cast<std::size_t>(complete), s.windows);
    const std::size_t start = count > o.visible_windows ? count - o.visible_windows : 0;
    AggregatedSequence t = s;
    t.windows = count - start;
    const auto lo = static_cast<std::ptrdiff_t>(start * s.columns);
    const auto hi = static_cast<std::ptrdiff_t>(count * s.columns);
    t.values.assign(s.values.begin() + lo, s.values.begin() + hi);
    if (!s.carried.empty()) t.carried.assign(s.carried.begin() + lo, s.carried.begin() + hi);
    r.kept.push_back(std::move(t));
  }
  return r;
}

std::uint64_t stratum_of(int subgroup, double endpoint_minute) {
  const auto day = static_cast<std::uint64_t>(std::max(0.0, std::floor(endpoint_minute / 1440.0)));
  return static_cast<std::uint64_t>(subgroup) * 1000 + day;
}

std::vector<std::size_t> stratified_sample(const std::vector<std::uint64_t>& pool_strata,
                                           const std::vector<std::uint64_t>& reference_strata,
                                           std::uint64_t seed) {
  std::map<std::uint64_t, std::size_t> want;
  for (std::uint64_t s : reference_strata) ++want[s];
  std::map<std::uint64_t, std::vector<std::size_t>> have;
  for (std::size_t i = 0; i < pool_strata.size(); ++i) have[pool_strata[i]].push_back(i);
  std::vector<std::size_t> out;
  out.reserve(reference_strata.size());
  for (const auto& [stratum, n] : want) {
    std::vector<std::size_t>& members = have[stratum];
    if (members.size() < n) {
      throw DataError("stratum " + std::to_string(stratum) + " has " +
                      std::to_string(members.size()) + " candidates, " + std::to_string(n) +
                      " needed");
    }
    Rng rng(mix_seed({seed, stratum}));
    rng.shuffle(members.begin(), members.end());
    out.insert(out.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n));
  }
  std::sort(out.begin(), out.end());
  return out;
}

Sequence to_sequence(const AggregatedSequence& seq) {
  Sequence s;
  s.visit_id = seq.visit_id;
  s.domain = seq.domain;
  s.label = seq.label;
  s.length = seq.windows;
  s.channels = seq.columns;
  s.values = seq.values;
  s.indicators.resize(s.values.size());
  for (std::size_t i = 0; i < s.values.size(); ++i) s.indicators[i] = std::isnan(s.values[i]) ? 1.0 : 0.0;
  return s;
}

bool ChannelStats::derived_from(const std::string& visit_id) const {
  return std::binary_search(provenance.begin(), provenance.end(), visit_id);
}

ChannelStats fit_channel_stats(std::span<const Sequence> seqs) {
  if (seqs.empty()) throw EmptyReductionError("no sequences to fit statistics on");
  const std::size_t d = seqs[0].channels;
  std::vector<double> sum(d, 0.0);
  std::vector<double> sq(d, 0.0);
  std::vector<std::size_t> n(d, 0);
  ChannelStats st;
  for (const Sequence& s : seqs) {
    if (s.channels != d) throw ShapeError("sequences disagree on the channel count");
    st.provenance.push_back(s.visit_id);
    for (std::size_t t = 0; t < s.length; ++t) {
      for (std::size_t c = 0; c < d; ++c) {
        const double x = s.values[t * d + c];
        if (std::isnan(x)) continue;
        sum[c] += x;
        ++n[c];
      }
    }
  }
  st.mean.resize(d);
  for (std::size_t c = 0; c < d; ++c) {
    if (n[c] == 0) throw DataError("channel " + std::to_string(c) + " is never observed");
    st.mean[c] = sum[c] / static_cast<double>(n[c]);
  }
  for (const Sequence& s : seqs) {
    for (std::size_t t = 0; t < s.length; ++t) {
      for (std::size_t c = 0; c < d; ++c) {
        const double x = s.values[t * d + c];
        if (!std::isnan(x)) sq[c] += (x - st.mean[c]) * (x - st.mean[c]);
      }
    }
  }
  st.sd.resize(d);
  for (std::size_t c = 0; c < d; ++c) st.sd[c] = std::sqrt(sq[c] / static_cast<double>(n[c]));
  std::sort(st.provenance.begin(), st.provenance.end());
  return st;
}

std::vector<Sequence> impute_mean(std::span<const Sequence> seqs, const ChannelStats& stats) {
  std::vector<Sequence> out(seqs.begin(), seqs.end());
  for (Sequence& s : out) {
    if (s.channels != stats.mean.size()) throw ShapeError("statistics do not match the channels");
    s.indicators.assign(s.values.size(), 0.0);
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      if (std::isnan(s.values[i])) {
        s.values[i] = stats.mean[i % s.channels];
        s.indicators[i] = 1.0;
      }
    }
  }
  return out;
}

std::vector<Sequence> standardize(std::span<const Sequence> seqs, const ChannelStats& stats) {
  std::vector<Sequence> out(seqs.begin(), seqs.end());
  for (Sequence& s : out) {
    if (s.channels != stats.mean.size()) throw ShapeError("statistics do not match the channels");
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      const std::size_t c = i % s.channels;
      const double centred = s.values[i] - stats.mean[c];
      s.values[i] = stats.sd[c] > 0.0 ? centred / stats.sd[c] : centred;
    }
  }
  return out;
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw EmptyReductionError("KS statistic of an empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_critical(std::size_t n, std::size_t m, double level) {
  if (n == 0 || m == 0) throw EmptyReductionError("KS critical value of an empty sample");
  double c = 0.0;
  if (level == 0.01) {
    c = 1.628;
  } else if (level == 0.05) {
    c = 1.358;
  } else if (level > 0.0 && level < 1.0) {
    c = std::sqrt(-0.5 * std::log(level / 2.0));
  } else {
    throw ConfigError("KS level must lie in (0, 1)");
  }
  const double dn = static_cast<double>(n);
  const double dm = static_cast<double>(m);
  return c * std::sqrt((dn + dm) / (dn * dm));
}

Cohort build_cohort(const DomainSpec& spec, const CohortOptions& o) {
  if (o.visits == 0 || o.visits % 2 != 0) throw ConfigError("visits per domain must be even and positive");
  if (!(o.pool_factor >= 1.0)) throw ConfigError("pool_factor must be at least 1");
  DomainSpec pool_spec = spec;
  pool_spec.prevalence = o.pool_prevalence;
  const auto n_pool = static_cast<std::size_t>(std::ceil(static_cast<double>(o.visits) * o.pool_factor));
  const std::vector<RawEventStream> streams = generate_domain(pool_spec, n_pool);

  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  for (std::size_t i = 0; i < streams.size(); ++i) (streams[i].label == 1 ? pos : neg).push_back(i);
  std::vector<std::uint64_t> ref_strata;
  std::vector<std::uint64_t> pool_strata;
  for (std::size_t i : pos) ref_strata.push_back(stratum_of(streams[i].subgroup, streams[i].end_minute));
  for (std::size_t i : neg) pool_strata.push_back(stratum_of(streams[i].subgroup, streams[i].end_minute));
  std::vector<std::size_t> picked;
  try {
    picked = stratified_sample(pool_strata, ref_strata, mix_seed({spec.seed, 0x5a3d11ULL}));
  } catch (const DataError&) {
    // Small pools can run out of same-day negatives; fall back to subgroup-only strata.
    for (std::uint64_t& s : ref_strata) s /= 1000;
    for (std::uint64_t& s : pool_strata) s /= 1000;
    picked = stratified_sample(pool_strata, ref_strata, mix_seed({spec.seed, 0x5a3d12ULL}));
  }

  const Layout layout = make_layout(spec.channels);
  std::vector<AggregatedSequence> seqs;
  std::vector<double> pos_end;
  for (std::size_t i : pos) {
    seqs.push_back(carry_forward(aggregate(streams[i], spec.channels), layout));
    pos_end.push_back(seqs.back().endpoint_minute);
  }
  std::vector<double> neg_end;
  const std::size_t first_neg = seqs.size();
  for (std::size_t k : picked) {
    seqs.push_back(carry_forward(aggregate(streams[neg[k]], spec.channels), layout));
    neg_end.push_back(seqs.back().endpoint_minute);
  }
  const std::vector<double> cut = match_truncation(pos_end, neg_end);
  for (std::size_t k = 0; k < cut.size(); ++k) seqs[first_neg + k].endpoint_minute = cut[k];

  AlignResult aligned = align_truncate(seqs, {o.horizon_hours, o.visible_windows});
  std::vector<std::size_t> kept_pos;
  std::vector<std::size_t> kept_neg;
  for (std::size_t i = 0; i < aligned.kept.size(); ++i) {
    (aligned.kept[i].label == 1 ? kept_pos : kept_neg).push_back(i);
  }
  const std::size_t half = o.visits / 2;
  if (kept_pos.size() < half || kept_neg.size() < half) {
    throw DataError("domain " + spec.name + " kept " + std::to_string(kept_pos.size()) +
                    " positives and " + std::to_string(kept_neg.size()) +
                    " negatives after alignment; " + std::to_string(half) +
                    " of each are needed (raise pool_factor)");
  }
  Rng rng(mix_seed({spec.seed, 0xba1a7ceULL}));
  rng.shuffle(kept_pos.begin(), kept_pos.end());
  rng.shuffle(kept_neg.begin(), kept_neg.end());
  std::vector<std::size_t> chosen(kept_pos.begin(), kept_pos.begin() + static_cast<std::ptrdiff_t>(half));
  chosen.insert(chosen.end(), kept_neg.begin(), kept_neg.begin() + static_cast<std::ptrdiff_t>(half));
  std::sort(chosen.begin(), chosen.end(), [&](std::size_t a, std::size_t b) {
    return aligned.kept[a].visit_id < aligned.kept[b].visit_id;
  });
  Cohort c;
  c.generated = n_pool;
  c.excluded = aligned.excluded;
  for (std::size_t i : chosen) c.sequences.push_back(to_sequence(aligned.kept[i]));
  return c;
}

}  // namespace vrads
