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

#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "vrads/cli.hpp"
#include "vrads/errors.hpp"

namespace vrads {
namespace {

struct Flags {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<double> horizon;
  std::string variant;
  std::string data;
  std::size_t jobs = 1;
};

std::string default_out(const std::string& command) {
  const char* root = std::getenv("VRADS_OUT");
  return (std::filesystem::path(root != nullptr && *root != '\0' ? root : "vrads-out") / command).string();
}

RunConfig resolve(const Flags& f) {
  RunConfig c = f.config.empty() ? RunConfig{} : load_config(f.config);
  for (const std::string& kv : f.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    c.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (f.seed) c.seed = *f.seed;
  if (f.horizon) {
    check_horizon(*f.horizon);
    c.cohort.horizon_hours = *f.horizon;
    c.horizon_set = true;
  }
  if (!f.data.empty()) c.data_dir = f.data;
  return c;
}

void common_flags(CLI::App* sub, Flags& f, std::string& out) {
  sub->add_option("--config", f.config, "key = value configuration file");
  sub->add_option("--set", f.sets, "override one config key (key=value), repeatable");
  sub->add_option("--seed", f.seed, "master seed (data generation and single-run split)");
  sub->add_option("--horizon-hours", f.horizon, "prediction horizon, 24 to 48 in steps of 4");
  sub->add_option("--data", f.data, "dataset directory written by gen-data");
  sub->add_option("--out", out, "output directory (default $VRADS_OUT/<command>)");
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Variational recurrent domain adaptation experiments"};
  app.require_subcommand(1);
  Flags f;
  CommandOptions o;
  std::size_t halt = 0;

  CLI::App* gen = app.add_subcommand("gen-data", "generate the two-domain synthetic cohort");
  common_flags(gen, f, o.out);

  CLI::App* train = app.add_subcommand("train", "train one variant on one split");
  common_flags(train, f, o.out);
  train->add_option("--variant", f.variant, "one of the ten variants")->required();
  train->add_option("--halt-after-epoch", halt, "stop after this epoch, keeping checkpoints")
      ->group("");

  CLI::App* eval = app.add_subcommand("evaluate", "evaluate a trained model");
  common_flags(eval, f, o.out);
  eval->add_option("--model", o.model_dir, "directory written by train")->required();
  eval->add_option("--variant", f.variant, "expected variant of the checkpoint");
  eval->add_option("--split", o.split, "test, val or train")->check(CLI::IsMember({"test", "val", "train"}));

  CLI::App* ablate = app.add_subcommand("ablate", "cross-validate the ablation ladder");
  common_flags(ablate, f, o.out);
  ablate->add_option("--jobs", f.jobs, "parallel training jobs")->check(CLI::PositiveNumber);

  CLI::App* report = app.add_subcommand("report", "merge results and plot metrics by horizon");
  report->add_option("inputs", o.inputs, "result directories or results.csv files")->required();
  report->add_option("--out", o.out, "output directory (default $VRADS_OUT/report)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (o.out.empty()) o.out = default_out(name);
    if (name == "report") return cmd_report(o);
    o.config = resolve(f);
    o.jobs = f.jobs;
    o.halt_after_epoch = halt;
    if (!f.variant.empty()) o.variant = parse_variant(f.variant);
    if (name == "gen-data") return cmd_gen_data(o);
    if (name == "train") return cmd_train(o);
    if (name == "evaluate") return cmd_evaluate(o);
    return cmd_ablate(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const ShapeError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const EmptyReductionError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitOther;
  }
}

}  // namespace vrads
