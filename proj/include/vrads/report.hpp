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

// Classification metrics, run aggregation and result emission.

#ifndef VRADS_REPORT_HPP_
#define VRADS_REPORT_HPP_

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace vrads {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o);
  bool operator==(const ConfusionCounts&) const = default;
};

// Predictions with p >= threshold count as positive.
ConfusionCounts confusion(const std::vector<int>& labels, const std::vector<double>& probs,
                          double threshold = 0.5);

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f_measure = 0.0;
  // Set when there were no positive predictions; precision is then 0.
  bool degenerate_precision = false;
};

Metrics metrics(const ConfusionCounts& c);

// Mann-Whitney AUC; tied scores count one half.
double auc(const std::vector<int>& labels, const std::vector<double>& scores);

constexpr std::size_t kNumMetrics = 5;
using MetricVector = std::array<double, kNumMetrics>;  // accuracy, precision, recall, F, AUC
const std::array<const char*, kNumMetrics>& metric_names();

struct Evaluation {
  MetricVector values{};
  ConfusionCounts counts;
  bool degenerate_precision = false;
};

Evaluation evaluate(const std::vector<int>& labels, const std::vector<double>& probs);

struct MetricsRow {
  std::string variant;
  double horizon_hours = 0.0;
  MetricVector mean{};
  MetricVector std{};
  std::size_t runs = 0;
  std::size_t degenerate_runs = 0;
  std::string config_hash;

  bool operator==(const MetricsRow&) const = default;
};

// Unweighted mean and population standard deviation per metric.
MetricsRow aggregate(const std::string& variant, const std::vector<MetricVector>& rows);

// Per column: 1 for the best mean, 2 for the second best, 0 otherwise. Ties
// share the better mark.
std::vector<std::array<int, kNumMetrics>> rank_marks(const std::vector<MetricsRow>& rows);

void write_results_csv(const std::string& path, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_results_csv(const std::string& path);
void write_results_json(const std::string& path, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_results_json(const std::string& path);

// Markdown table with best values in bold and second best in italics.
std::string comparison_table(const std::vector<MetricsRow>& rows);

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (horizon hours, value)
};

// Static SVG line chart. Every point is also emitted as a circle carrying
// data-x / data-y attributes so the chart can be read back.
void write_line_plot(const std::string& path, const std::string& title, const std::string& y_label,
                     std::vector<PlotSeries> series);
std::vector<PlotSeries> read_line_plot(const std::string& path);

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace vrads

#endif  // VRADS_REPORT_HPP_
