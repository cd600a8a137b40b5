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
#include <fstream>
#include <iostream>
#include <map>

#include "json.hpp"
#include "vrads/cli.hpp"
#include "vrads/errors.hpp"
#include "vrads/report.hpp"

namespace vrads {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

fs::path prepare_out(const RunConfig& config, const std::string& out) {
  if (out.empty()) throw ConfigError("no output directory");
  fs::create_directories(out);
  write_text(fs::path(out) / "resolved_config.txt", config.resolved());
  return out;
}

std::vector<DomainSpec> benchmark_specs(const RunConfig& c) {
  BenchmarkOptions b = c.benchmark;
  b.seed = c.seed;
  return make_benchmark(b);
}

DomainData obtain_data(const RunConfig& c, double* horizon) {
  if (c.data_dir.empty()) {
    const std::vector<DomainSpec> specs = benchmark_specs(c);
    DomainData data;
    for (std::size_t d = 0; d < 2; ++d) data[d] = build_cohort(specs[d], c.cohort).sequences;
    *horizon = c.cohort.horizon_hours;
    return data;
  }
  DatasetInfo info;
  DomainData data = load_dataset(c.data_dir, &info);
  if (c.horizon_set && c.cohort.horizon_hours != info.horizon_hours) {
    throw ConfigError("horizon " + format_double(c.cohort.horizon_hours) + " h does not match the dataset (" +
                      format_double(info.horizon_hours) + " h)");
  }
  *horizon = info.horizon_hours;
  return data;
}

json history_json(const TrainResult& r) {
  json h = json::array();
  for (const EvalRecord& e : r.history) h.push_back({{"epoch", e.epoch}, {"val_loss", e.val_loss}});
  return h;
}

json evaluation_json(const Evaluation& e) {
  json m;
  for (std::size_t k = 0; k < kNumMetrics; ++k) m[metric_names()[k]] = e.values[k];
  return {{"metrics", m},
          {"confusion", {{"tp", e.counts.tp}, {"fp", e.counts.fp}, {"fn", e.counts.fn}, {"tn", e.counts.tn}}},
          {"degenerate_precision", e.degenerate_precision}};
}

MetricsRow single_row(const std::string& variant, const Evaluation& e, double horizon,
                      const RunConfig& c) {
  MetricsRow row = aggregate(variant, {e.values});
  row.horizon_hours = horizon;
  row.degenerate_runs = e.degenerate_precision ? 1 : 0;
  row.config_hash = c.hash();
  return row;
}

void write_results(const fs::path& dir, const std::vector<MetricsRow>& rows) {
  write_results_csv((dir / "results.csv").string(), rows);
  write_results_json((dir / "results.json").string(), rows);
}

std::vector<Sequence> joined(const DomainData& d) {
  std::vector<Sequence> out = d[0];
  out.insert(out.end(), d[1].begin(), d[1].end());
  return out;
}

}  // namespace

DatasetInfo generate_dataset(const RunConfig& config, const std::string& dir) {
  config.validate();
  fs::create_directories(dir);
  const std::vector<DomainSpec> specs = benchmark_specs(config);
  DatasetInfo info;
  info.horizon_hours = config.cohort.horizon_hours;
  json domains = json::array();
  for (std::size_t d = 0; d < 2; ++d) {
    const Cohort cohort = build_cohort(specs[d], config.cohort);
    const std::string file = "domain" + std::to_string(d + 1) + ".jsonl";
    write_sequences((fs::path(dir) / file).string(), cohort.sequences);
    std::size_t positives = 0;
    for (const Sequence& s : cohort.sequences) positives += s.label == 1 ? 1 : 0;
    info.records[d] = cohort.sequences.size();
    domains.push_back({{"file", file},
                       {"records", cohort.sequences.size()},
                       {"positives", positives},
                       {"excluded", cohort.excluded},
                       {"generated", cohort.generated},
                       {"spec", to_json(specs[d])}});
  }
  write_json(fs::path(dir) / "dataset.json", {{"horizon_hours", info.horizon_hours},
                                              {"seed", config.seed},
                                              {"visible_windows", config.cohort.visible_windows},
                                              {"domains", domains}});
  return info;
}

DomainData load_dataset(const std::string& dir, DatasetInfo* info) {
  const json manifest = read_json(fs::path(dir) / "dataset.json");
  DomainData data;
  DatasetInfo local;
  try {
    local.horizon_hours = manifest.at("horizon_hours").get<double>();
    const json& domains = manifest.at("domains");
    if (!domains.is_array() || domains.size() != 2) throw DataError("dataset.json must list two domains");
    for (std::size_t d = 0; d < 2; ++d) {
      const std::string file = domains[d].at("file").get<std::string>();
      data[d] = read_sequences((fs::path(dir) / file).string());
      local.records[d] = domains[d].at("records").get<std::size_t>();
      if (data[d].size() != local.records[d]) {
        throw DataError(file + " holds " + std::to_string(data[d].size()) + " records, manifest says " +
                        std::to_string(local.records[d]));
      }
      for (const Sequence& s : data[d]) {
        if (s.domain != static_cast<int>(d + 1)) throw DataError(file + " holds a visit of another domain");
      }
    }
  } catch (const json::exception& e) {
    throw DataError("dataset.json: " + std::string(e.what()));
  }
  if (info != nullptr) *info = local;
  return data;
}

int cmd_gen_data(const CommandOptions& o) {
  const fs::path out = prepare_out(o.config, o.out);
  const DatasetInfo info = generate_dataset(o.config, out.string());
  std::cout << "wrote " << info.records[0] << " + " << info.records[1] << " visits to " << out.string()
            << "\n";
  return kExitOk;
}

int cmd_train(const CommandOptions& o) {
  const RunConfig& c = o.config;
  c.validate();
  if (!o.variant) throw ConfigError("train needs --variant");
  const Variant v = *o.variant;
  const fs::path out = prepare_out(c, o.out);
  double horizon = 0.0;
  const DomainData data = obtain_data(c, &horizon);
  const CvSplit split = make_split(data, c.plan, c.seed, c.fold);

  FitOptions fo;
  fo.checkpoint_dir = (out / "checkpoints").string();
  fo.halt_after_epoch = o.halt_after_epoch;
  Model m = fit_variant(v, split, c.framework, fo);
  if (m.result.halted) {
    std::cout << "halted after epoch " << m.result.epochs_run << "; rerun to resume\n";
    return kExitHalted;
  }
  json frozen = json::array();
  for (const FrozenCheck& f : m.frozen) {
    frozen.push_back({{"component", f.component},
                      {"before", hex64(f.before)},
                      {"after", hex64(f.after)},
                      {"intact", f.intact()}});
    if (!f.intact()) throw Error("frozen component " + f.component + " changed during training");
  }
  save_model((out / "model").string(), m);

  json components = json::array();
  for (const Component& comp : m.components) components.push_back(comp.role);
  if (m.critic) components.push_back("critic");
  const TrainResult& r = m.result;
  write_json(out / "manifest.json",
             {{"variant", variant_name(v)},
              {"seed", c.seed},
              {"fold", c.fold},
              {"train_seed", c.framework.train.seed},
              {"alpha", c.framework.train.alpha},
              {"beta", c.framework.train.beta},
              {"horizon_hours", horizon},
              {"config_hash", c.hash()},
              {"components", components},
              {"classifier", m.components.at(m.head).role},
              {"frozen", frozen},
              {"history", history_json(r)},
              {"best_epoch", r.history.empty() ? 0 : r.history[r.best_index].epoch},
              {"epochs_run", r.epochs_run},
              {"stopped_early", r.stopped_early}});

  std::vector<int> labels;
  for (const Sequence& s : split.test) labels.push_back(s.label);
  const Evaluation e = evaluate(labels, predict(m, split.test));
  write_results(out, {single_row(variant_name(v), e, horizon, c)});
  std::cout << variant_name(v) << " test AUC " << format_double(e.values[4]) << "\n";
  return kExitOk;
}

int cmd_evaluate(const CommandOptions& o) {
  RunConfig c = o.config;
  c.validate();
  if (o.model_dir.empty()) throw ConfigError("evaluate needs --model");
  const json manifest = read_json(fs::path(o.model_dir) / "manifest.json");
  Variant v;
  try {
    v = parse_variant(manifest.at("variant").get<std::string>());
    c.seed = manifest.at("seed").get<std::uint64_t>();
    c.fold = manifest.at("fold").get<std::size_t>();
  } catch (const json::exception& e) {
    throw DataError("manifest.json: " + std::string(e.what()));
  }
  if (o.variant && *o.variant != v) {
    throw ConfigError(std::string("--variant ") + variant_name(*o.variant) + " does not match the checkpoint (" +
                      variant_name(v) + ")");
  }
  const fs::path out = prepare_out(c, o.out);
  double horizon = 0.0;
  const DomainData data = obtain_data(c, &horizon);
  const CvSplit split = make_split(data, c.plan, c.seed, c.fold);

  std::vector<Sequence> seqs;
  if (o.split == "test") {
    seqs = split.test;
  } else if (o.split == "val") {
    seqs = joined(split.val);
  } else if (o.split == "train") {
    seqs = joined(split.train);
  } else {
    throw ConfigError("--split must be test, val or train");
  }
  const bool leak = o.split != "test";
  if (leak) std::cerr << "warning: evaluating on the " << o.split << " split, which the model was fit on\n";

  VrnnConfig vc = c.framework.vrnn;
  vc.recon_dim = seqs.front().channels;
  vc.input_dim = 2 * vc.recon_dim;
  Model m;
  try {
    m = load_model((fs::path(o.model_dir) / "model").string(), v, vc, c.framework.train.critic_hidden);
  } catch (const DataError& e) {
    throw DataError(std::string("incompatible checkpoint: ") + e.what());
  }
  const std::vector<double> probs = predict(m, seqs);
  std::vector<int> labels;
  for (const Sequence& s : seqs) labels.push_back(s.label);
  const Evaluation pooled = evaluate(labels, probs);
  json domains = json::array();
  for (int d = 1; d <= 2; ++d) {
    std::vector<int> y;
    std::vector<double> p;
    for (std::size_t i = 0; i < seqs.size(); ++i) {
      if (seqs[i].domain != d) continue;
      y.push_back(labels[i]);
      p.push_back(probs[i]);
    }
    json entry = evaluation_json(evaluate(y, p));
    entry["domain"] = d;
    entry["visits"] = y.size();
    domains.push_back(entry);
  }
  write_json(out / "evaluation.json", {{"variant", variant_name(v)},
                                       {"split", o.split},
                                       {"leakage_warning", leak},
                                       {"visits", seqs.size()},
                                       {"pooled", evaluation_json(pooled)},
                                       {"domains", domains}});
  write_results(out, {single_row(variant_name(v), pooled, horizon, c)});
  std::cout << variant_name(v) << " " << o.split << " AUC " << format_double(pooled.values[4]) << "\n";
  return kExitOk;
}

int cmd_ablate(const CommandOptions& o) {
  const RunConfig& c = o.config;
  c.validate();
  const fs::path out = prepare_out(c, o.out);
  double horizon = 0.0;
  const DomainData data = obtain_data(c, &horizon);
  std::vector<Variant> variants(c.variants.begin(), c.variants.end());
  if (variants.empty()) variants.assign(ladder_variants().begin(), ladder_variants().end());

  PretrainCache cache;
  std::vector<MetricsRow> rows;
  std::vector<std::uint64_t> hashes;
  std::string runs_csv = "variant,seed";
  for (const char* m : metric_names()) runs_csv += std::string(",") + m;
  runs_csv += "\n";
  for (Variant v : variants) {
    const CvResult r = cross_validate(variant_name(v), data, c.plan, make_runner(v, c.framework, &cache),
                                      std::max<std::size_t>(1, o.jobs));
    if (hashes.empty()) {
      hashes = r.assignment_hashes;
    } else if (hashes != r.assignment_hashes) {
      throw Error(std::string("fold assignments of ") + variant_name(v) + " differ from the other rungs");
    }
    MetricsRow row = r.row;
    row.horizon_hours = horizon;
    row.config_hash = c.hash();
    rows.push_back(row);
    for (std::size_t k = 0; k < r.per_run.size(); ++k) {
      runs_csv += std::string(variant_name(v)) + "," + std::to_string(c.plan.seeds[k]);
      for (double x : r.per_run[k]) runs_csv += "," + format_double(x);
      runs_csv += "\n";
    }
    std::cout << variant_name(v) << " AUC " << format_double(row.mean[4]) << " +/- "
              << format_double(row.std[4]) << "\n";
  }
  const CvSplit first = make_split(data, c.plan, c.plan.seeds.front(), 0);
  FrameworkConfig sized = c.framework;
  sized.vrnn.recon_dim = first.train[0].front().channels;
  sized.vrnn.input_dim = 2 * sized.vrnn.recon_dim;
  const double gap = ladder_reduction_gap(first.train, sized, c.plan.seeds.front());

  json hx = json::array();
  for (std::uint64_t h : hashes) hx.push_back(hex64(h));
  json names = json::array();
  for (Variant v : variants) names.push_back(variant_name(v));
  write_json(out / "ablation.json", {{"variants", names},
                                     {"assignment_hashes", hx},
                                     {"shared_folds", true},
                                     {"reduction_gap", gap},
                                     {"config_hash", c.hash()}});
  write_text(out / "runs.csv", runs_csv);
  write_text(out / "ablation.md", comparison_table(rows));
  write_results(out, rows);
  return kExitOk;
}

int cmd_report(const CommandOptions& o) {
  if (o.inputs.empty()) throw ConfigError("report needs at least one result directory");
  std::vector<MetricsRow> rows;
  for (const std::string& in : o.inputs) {
    const fs::path p = fs::is_directory(in) ? fs::path(in) / "results.csv" : fs::path(in);
    for (MetricsRow& r : read_results_csv(p.string())) rows.push_back(std::move(r));
  }
  if (o.out.empty()) throw ConfigError("no output directory");
  const fs::path out = o.out;
  for (const std::string& in : o.inputs) {
    if (fs::exists(out) && fs::equivalent(fs::is_directory(in) ? fs::path(in) : fs::path(in).parent_path(), out)) {
      throw ConfigError("report output " + out.string() + " would overwrite input " + in);
    }
  }
  fs::create_directories(out);
  write_results(out, rows);
  write_text(out / "table.md", comparison_table(rows));
  for (std::size_t k = 0; k < kNumMetrics; ++k) {
    std::map<std::string, PlotSeries> by_variant;
    std::vector<std::string> order;
    for (const MetricsRow& r : rows) {
      auto [it, fresh] = by_variant.try_emplace(r.variant);
      if (fresh) {
        it->second.label = r.variant;
        order.push_back(r.variant);
      }
      it->second.points.emplace_back(r.horizon_hours, r.mean[k]);
    }
    std::vector<PlotSeries> series;
    for (const std::string& name : order) series.push_back(by_variant[name]);
    const std::string metric = metric_names()[k];
    write_line_plot((out / ("plot_" + metric + ".svg")).string(), metric + " by prediction horizon",
                    metric, series);
  }
  std::cout << "merged " << rows.size() << " rows into " << out.string() << "\n";
  return kExitOk;
}

}  // namespace vrads
