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

// Two-domain cross-validation: stratified folds per run seed, a validation
// carve-out, training-fold preprocessing statistics and a balanced test set.

#ifndef VRADS_CV_HPP_
#define VRADS_CV_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vrads/batch.hpp"
#include "vrads/data.hpp"
#include "vrads/report.hpp"

namespace vrads {

struct CvPlan {
  std::size_t folds = 2;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  double val_fraction = 0.1;

  void validate() const;
};

using DomainData = std::array<std::vector<Sequence>, 2>;

// Fold of every sequence, stratified by label within the set (call once per
// domain). Each (label) group is shuffled with `seed` and dealt round-robin.
std::vector<std::size_t> assign_folds(const std::vector<Sequence>& seqs, std::size_t folds,
                                      std::uint64_t seed);

// Label-stratified subset of `count` indices, deterministic in `seed`.
std::vector<std::size_t> stratified_subset(const std::vector<Sequence>& seqs, std::size_t count,
                                           std::uint64_t seed);

struct CvSplit {
  std::size_t fold = 0;
  std::uint64_t seed = 0;
  DomainData train;  // imputed and standardized
  DomainData val;
  std::vector<Sequence> test;  // equal counts from both domains
  ChannelStats stats;          // fitted on both domains' training parts
};

// Builds the split for (seed, fold). Throws on any train/test overlap or
// statistics computed from test visits.
CvSplit make_split(const DomainData& data, const CvPlan& plan, std::uint64_t seed, std::size_t fold);

// Digest of (visit id, fold) over both domains for one seed.
std::uint64_t assignment_hash(const DomainData& data, const CvPlan& plan, std::uint64_t seed);

// Trains on the split and returns one probability per test sequence.
using CvRunner = std::function<std::vector<double>(const CvSplit&)>;

struct CvResult {
  MetricsRow row;
  std::vector<MetricVector> per_run;              // fold-averaged, one per seed
  std::vector<std::vector<Evaluation>> per_fold;  // [run][fold]
  std::vector<std::uint64_t> assignment_hashes;   // one per seed
};

// Runs every (seed, fold) job, `jobs` at a time, averages folds within a run
// and aggregates runs (mean and population std).
CvResult cross_validate(const std::string& variant, const DomainData& data, const CvPlan& plan,
                        const CvRunner& runner, std::size_t jobs = 1);

}  // namespace vrads

#endif  // VRADS_CV_HPP_
