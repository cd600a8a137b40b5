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
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>
#include <unordered_set>

#include "vrads/cv.hpp"
#include "vrads/errors.hpp"
#include "vrads/rng.hpp"

namespace vrads {
namespace {

void check_labels(const std::vector<Sequence>& seqs, const std::string& what) {
  bool pos = false;
  bool neg = false;
  for (const Sequence& s : seqs) (s.label == 1 ? pos : neg) = true;
  if (!pos || !neg) throw DataError(what + " holds a single class");
}

std::vector<Sequence> prepare(const std::vector<Sequence>& seqs, const ChannelStats& st) {
  return standardize(impute_mean(seqs, st), st);
}

}  // namespace

void CvPlan::validate() const {
  if (folds < 2) throw ConfigError("cross-validation needs at least two folds");
  if (seeds.empty()) throw ConfigError("cross-validation needs at least one run seed");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ConfigError("val_fraction must lie in (0, 1)");
}

std::vector<std::size_t> assign_folds(const std::vector<Sequence>& seqs, std::size_t folds,
                                      std::uint64_t seed) {
  if (folds == 0) throw ConfigError("fold count must be positive");
  std::vector<std::size_t> out(seqs.size());
  for (int label : {0, 1}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < seqs.size(); ++i) {
      if (seqs[i].label == label) idx.push_back(i);
    }
    Rng rng(mix_seed({seed, static_cast<std::uint64_t>(label), 0xf01d5ULL}));
    rng.shuffle(idx.begin(), idx.end());
    for (std::size_t k = 0; k < idx.size(); ++k) out[idx[k]] = k % folds;
  }
  return out;
}

std::vector<std::size_t> stratified_subset(const std::vector<Sequence>& seqs, std::size_t count,
                                           std::uint64_t seed) {
  if (count > seqs.size()) throw DataError("subset larger than its source");
  std::array<std::vector<std::size_t>, 2> by_label;
  for (std::size_t i = 0; i < seqs.size(); ++i) by_label[seqs[i].label == 1].push_back(i);
  const double frac = seqs.empty() ? 0.0 : static_cast<double>(count) / static_cast<double>(seqs.size());
  auto take_pos = static_cast<std::size_t>(std::lround(frac * static_cast<double>(by_label[1].size())));
  take_pos = std::min({take_pos, by_label[1].size(), count});
  std::size_t take_neg = count - take_pos;
  if (take_neg > by_label[0].size()) {
    take_pos += take_neg - by_label[0].size();
    take_neg = by_label[0].size();
  }
  std::vector<std::size_t> out;
  for (int label : {0, 1}) {
    std::vector<std::size_t>& v = by_label[label];
    Rng rng(mix_seed({seed, static_cast<std::uint64_t>(label), 0x5b5e7ULL}));
    rng.shuffle(v.begin(), v.end());
    const std::size_t n = label == 1 ? take_pos : take_neg;
    out.insert(out.end(), v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::uint64_t assignment_hash(const DomainData& data, const CvPlan& plan, std::uint64_t seed) {
  std::uint64_t h = 1469598103934665603ULL;
  for (std::size_t d = 0; d < 2; ++d) {
    const std::vector<std::size_t> f = assign_folds(data[d], plan.folds, mix_seed({seed, d}));
    for (std::size_t i = 0; i < f.size(); ++i) {
      h = mix_seed({h, hash_string(data[d][i].visit_id), f[i]});
    }
  }
  return h;
}

CvSplit make_split(const DomainData& data, const CvPlan& plan, std::uint64_t seed,
                   std::size_t fold) {
  plan.validate();
  if (fold >= plan.folds) throw ConfigError("fold index out of range");
  CvSplit s;
  s.fold = fold;
  s.seed = seed;
  DomainData raw_train;
  DomainData raw_val;
  DomainData raw_test;
  for (std::size_t d = 0; d < 2; ++d) {
    if (data[d].empty()) throw DataError("domain " + std::to_string(d + 1) + " has no data");
    const std::vector<std::size_t> f = assign_folds(data[d], plan.folds, mix_seed({seed, d}));
    std::vector<Sequence> rest;
    for (std::size_t i = 0; i < f.size(); ++i) (f[i] == fold ? raw_test[d] : rest).push_back(data[d][i]);
    const auto n_val = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(plan.val_fraction * static_cast<double>(rest.size()))));
    const std::vector<std::size_t> vi = stratified_subset(rest, n_val, mix_seed({seed, d, fold, 0xa1ULL}));
    std::vector<char> is_val(rest.size(), 0);
    for (std::size_t i : vi) is_val[i] = 1;
    for (std::size_t i = 0; i < rest.size(); ++i) (is_val[i] ? raw_val[d] : raw_train[d]).push_back(rest[i]);
    check_labels(raw_train[d], "training fold of domain " + std::to_string(d + 1));
    check_labels(raw_test[d], "test fold of domain " + std::to_string(d + 1));
  }

  // Balanced test set: the same number of visits from each domain.
  const std::size_t m = std::min(raw_test[0].size(), raw_test[1].size());
  std::vector<Sequence> test;
  for (std::size_t d = 0; d < 2; ++d) {
    for (std::size_t i : stratified_subset(raw_test[d], m, mix_seed({seed, d, fold, 0x7e57ULL}))) {
      test.push_back(raw_test[d][i]);
    }
  }

  std::vector<Sequence> fit_on = raw_train[0];
  fit_on.insert(fit_on.end(), raw_train[1].begin(), raw_train[1].end());
  s.stats = fit_channel_stats(fit_on);

  std::unordered_set<std::string> test_ids;
  for (const Sequence& t : test) test_ids.insert(t.visit_id);
  for (std::size_t d = 0; d < 2; ++d) {
    for (const auto* part : {&raw_train[d], &raw_val[d]}) {
      for (const Sequence& x : *part) {
        if (test_ids.count(x.visit_id) != 0) throw Error("visit " + x.visit_id + " is in train and test");
      }
    }
  }
  for (const std::string& id : test_ids) {
    if (s.stats.derived_from(id)) throw Error("preprocessing statistics saw test visit " + id);
  }

  for (std::size_t d = 0; d < 2; ++d) {
    s.train[d] = prepare(raw_train[d], s.stats);
    s.val[d] = prepare(raw_val[d], s.stats);
  }
  s.test = prepare(test, s.stats);
  return s;
}

CvResult cross_validate(const std::string& variant, const DomainData& data, const CvPlan& plan,
                        const CvRunner& runner, std::size_t jobs) {
  plan.validate();
  const std::size_t n_runs = plan.seeds.size();
  const std::size_t n_jobs = n_runs * plan.folds;
  CvResult result;
  result.per_fold.assign(n_runs, std::vector<Evaluation>(plan.folds));
  for (std::uint64_t seed : plan.seeds) result.assignment_hashes.push_back(assignment_hash(data, plan, seed));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= n_jobs) return;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (failure) return;
      }
      try {
        const std::size_t run = k / plan.folds;
        const std::size_t fold = k % plan.folds;
        const CvSplit split = make_split(data, plan, plan.seeds[run], fold);
        const std::vector<double> probs = runner(split);
        if (probs.size() != split.test.size()) throw ShapeError("runner returned the wrong count");
        std::vector<int> labels;
        for (const Sequence& t : split.test) labels.push_back(t.label);
        result.per_fold[run][fold] = evaluate(labels, probs);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(jobs, n_jobs));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::size_t degenerate = 0;
  for (std::size_t run = 0; run < n_runs; ++run) {
    MetricVector avg{};
    bool deg = false;
    for (const Evaluation& e : result.per_fold[run]) {
      for (std::size_t k = 0; k < kNumMetrics; ++k) avg[k] += e.values[k];
      deg = deg || e.degenerate_precision;
    }
    for (double& v : avg) v /= static_cast<double>(plan.folds);
    result.per_run.push_back(avg);
    degenerate += deg ? 1 : 0;
  }
  result.row = aggregate(variant, result.per_run);
  result.row.degenerate_runs = degenerate;
  return result;
}

}  // namespace vrads
