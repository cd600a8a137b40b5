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
// Command-line entry points: run configuration, the five commands and the
// exit-code mapping.

#ifndef VRADS_CLI_HPP_
#define VRADS_CLI_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vrads/cv.hpp"
#include "vrads/data.hpp"
#include "vrads/frameworks.hpp"

namespace vrads {

// Everything a command needs, read from `key = value` text plus flag overrides.
struct RunConfig {
  std::uint64_t seed = 1;  // data generation and the single-run split
  BenchmarkOptions benchmark;
  CohortOptions cohort;
  FrameworkConfig framework;
  CvPlan plan;
  std::size_t fold = 0;
  std::vector<Variant> variants;  // ablate; empty means the four-rung ladder
  std::string data_dir;           // empty: generate in memory
  bool horizon_set = false;       // horizon given explicitly; must then match the dataset

  // Applies one key; throws ConfigError for unknown keys and bad values.
  void set(const std::string& key, const std::string& value);
  // Every key with its current value, one `key = value` line each, in a fixed order.
  std::string resolved() const;
  // Hash of the resolved text, hex.
  std::string hash() const;
  void validate() const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// 24..48 hours in steps of 4.
void check_horizon(double hours);

struct DatasetInfo {
  double horizon_hours = 48.0;
  std::array<std::size_t, 2> records{};
};

// Writes domain1.jsonl, domain2.jsonl and dataset.json under `dir`.
DatasetInfo generate_dataset(const RunConfig& config, const std::string& dir);
// Reads a directory written by generate_dataset, checking record counts.
DomainData load_dataset(const std::string& dir, DatasetInfo* info = nullptr);

struct CommandOptions {
  RunConfig config;
  std::string out;
  std::optional<Variant> variant;
  std::string model_dir;           // evaluate
  std::string split = "test";      // evaluate: test, val or train
  std::vector<std::string> inputs; // report
  std::size_t jobs = 1;
  std::size_t halt_after_epoch = 0;
};

// Each returns the process exit code on success paths and throws otherwise.
int cmd_gen_data(const CommandOptions& o);
int cmd_train(const CommandOptions& o);
int cmd_evaluate(const CommandOptions& o);
int cmd_ablate(const CommandOptions& o);
int cmd_report(const CommandOptions& o);

// Exit codes.
constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitHalted = 5;  // training stopped by --halt-after-epoch

// Parses arguments, runs the command and maps exceptions to exit codes.
int run_cli(int argc, char** argv);

}  // namespace vrads

#endif  // VRADS_CLI_HPP_
