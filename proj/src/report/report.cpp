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

#include "vrads/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <regex>
#include <sstream>

#include "json.hpp"

#include "vrads/errors.hpp"

namespace vrads {
namespace {

using json = nlohmann::json;

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw DataError("not a number: '" + s + "'");
  }
  return v;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  return out;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string xml_unescape(std::string s) {
  const std::pair<const char*, const char*> table[] = {
      {"&lt;", "<"}, {"&gt;", ">"}, {"&quot;", "\""}, {"&amp;", "&"}};
  for (const auto& [from, to] : table) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
      s.replace(pos, std::string(from).size(), to);
      pos += std::string(to).size();
    }
  }
  return s;
}

}  // namespace

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  return *this;
}

ConfusionCounts confusion(const std::vector<int>& labels, const std::vector<double>& probs,
                          double threshold) {
  if (labels.size() != probs.size()) throw ShapeError("labels and probabilities differ in length");
  if (labels.empty()) throw EmptyReductionError("confusion counts of an empty set");
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pred = probs[i] >= threshold;
    if (labels[i] == 1) {
      pred ? ++c.tp : ++c.fn;
    } else if (labels[i] == 0) {
      pred ? ++c.fp : ++c.tn;
    } else {
      throw DataError("label " + std::to_string(labels[i]) + " is not 0 or 1");
    }
  }
  return c;
}

Metrics metrics(const ConfusionCounts& c) {
  if (c.total() == 0) throw EmptyReductionError("metrics of an empty confusion matrix");
  Metrics m;
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  if (c.tp + c.fp == 0) {
    m.degenerate_precision = true;
  } else {
    m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  }
  if (c.tp + c.fn > 0) m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (m.precision + m.recall > 0.0) {
    m.f_measure = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  }
  return m;
}

double auc(const std::vector<int>& labels, const std::vector<double>& scores) {
  if (labels.size() != scores.size()) throw ShapeError("labels and scores differ in length");
  const std::size_t n = labels.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Twice the rank sum keeps tied (half-integer) ranks exact.
  double rank_sum2 = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double twice_rank = static_cast<double>(i + 1 + j);  // 2 * mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      const int y = labels[order[k]];
      if (y != 0 && y != 1) throw DataError("label " + std::to_string(y) + " is not 0 or 1");
      if (y == 1) {
        rank_sum2 += twice_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw DataError("AUC needs both classes");
  const double np = static_cast<double>(n_pos);
  const double u2 = rank_sum2 - np * (np + 1.0);  // 2 * (R - np(np+1)/2)
  return u2 / (2.0 * np * static_cast<double>(n_neg));
}

const std::array<const char*, kNumMetrics>& metric_names() {
  static const std::array<const char*, kNumMetrics> names = {"accuracy", "precision", "recall",
                                                             "f_measure", "auc"};
  return names;
}

Evaluation evaluate(const std::vector<int>& labels, const std::vector<double>& probs) {
  Evaluation e;
  e.counts = confusion(labels, probs);
  const Metrics m = metrics(e.counts);
  e.values = {m.accuracy, m.precision, m.recall, m.f_measure, auc(labels, probs)};
  e.degenerate_precision = m.degenerate_precision;
  return e;
}

MetricsRow aggregate(const std::string& variant, const std::vector<MetricVector>& rows) {
  if (rows.empty()) throw EmptyReductionError("aggregate of no rows");
  MetricsRow out;
  out.variant = variant;
  out.runs = rows.size();
  const double n = static_cast<double>(rows.size());
  for (std::size_t k = 0; k < kNumMetrics; ++k) {
    // Shifted by the first row so identical rows reduce exactly.
    const double x0 = rows[0][k];
    double s = 0.0;
    double ss = 0.0;
    for (const MetricVector& r : rows) {
      s += r[k] - x0;
      ss += (r[k] - x0) * (r[k] - x0);
    }
    const double d = s / n;
    out.mean[k] = x0 + d;
    out.std[k] = std::sqrt(std::max(0.0, ss / n - d * d));
  }
  return out;
}

std::vector<std::array<int, kNumMetrics>> rank_marks(const std::vector<MetricsRow>& rows) {
  std::vector<std::array<int, kNumMetrics>> marks(rows.size(), std::array<int, kNumMetrics>{});
  for (std::size_t k = 0; k < kNumMetrics; ++k) {
    std::vector<double> distinct;
    for (const MetricsRow& r : rows) distinct.push_back(r.mean[k]);
    std::sort(distinct.begin(), distinct.end(), std::greater<>());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (!distinct.empty() && rows[i].mean[k] == distinct[0]) {
        marks[i][k] = 1;
      } else if (distinct.size() > 1 && rows[i].mean[k] == distinct[1]) {
        marks[i][k] = 2;
      }
    }
  }
  return marks;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error("cannot format number");
  return std::string(buf, ptr);
}

void write_results_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
  if (rows.empty()) throw DataError("no results to write");
  std::ofstream out = open_out(path);
  out << "variant,horizon_hours";
  for (const char* m : metric_names()) out << ',' << m << ',' << m << "_std";
  out << ",runs,degenerate_runs,config_hash\n";
  for (const MetricsRow& r : rows) {
    if (r.variant.find(',') != std::string::npos) throw DataError("variant name contains a comma");
    out << r.variant << ',' << format_double(r.horizon_hours);
    for (std::size_t k = 0; k < kNumMetrics; ++k) {
      out << ',' << format_double(r.mean[k]) << ',' << format_double(r.std[k]);
    }
    out << ',' << r.runs << ',' << r.degenerate_runs << ',' << r.config_hash << '\n';
  }
  if (!out) throw Error("write failed for " + path);
}

std::vector<MetricsRow> read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + " is empty");
  const std::size_t width = 2 + 2 * kNumMetrics + 3;
  if (split_csv(line).size() != width) throw DataError(path + " has an unexpected header");
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv(line);
    if (cells.size() != width) throw DataError(path + ": malformed row '" + line + "'");
    MetricsRow r;
    r.variant = cells[0];
    r.horizon_hours = parse_double(cells[1]);
    for (std::size_t k = 0; k < kNumMetrics; ++k) {
      r.mean[k] = parse_double(cells[2 + 2 * k]);
      r.std[k] = parse_double(cells[3 + 2 * k]);
    }
    r.runs = static_cast<std::size_t>(parse_double(cells[2 + 2 * kNumMetrics]));
    r.degenerate_runs = static_cast<std::size_t>(parse_double(cells[3 + 2 * kNumMetrics]));
    r.config_hash = cells[4 + 2 * kNumMetrics];
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_results_json(const std::string& path, const std::vector<MetricsRow>& rows) {
  if (rows.empty()) throw DataError("no results to write");
  json arr = json::array();
  for (const MetricsRow& r : rows) {
    json j;
    j["variant"] = r.variant;
    j["horizon_hours"] = r.horizon_hours;
    for (std::size_t k = 0; k < kNumMetrics; ++k) {
      j["metrics"][metric_names()[k]] = {{"mean", r.mean[k]}, {"std", r.std[k]}};
    }
    j["runs"] = r.runs;
    j["degenerate_runs"] = r.degenerate_runs;
    j["config_hash"] = r.config_hash;
    arr.push_back(std::move(j));
  }
  std::ofstream out = open_out(path);
  out << json{{"results", arr}}.dump(2) << '\n';
}

std::vector<MetricsRow> read_results_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  std::vector<MetricsRow> rows;
  try {
    const json doc = json::parse(in);
    for (const json& j : doc.at("results")) {
      MetricsRow r;
      r.variant = j.at("variant").get<std::string>();
      r.horizon_hours = j.at("horizon_hours").get<double>();
      for (std::size_t k = 0; k < kNumMetrics; ++k) {
        const json& m = j.at("metrics").at(metric_names()[k]);
        r.mean[k] = m.at("mean").get<double>();
        r.std[k] = m.at("std").get<double>();
      }
      r.runs = j.at("runs").get<std::size_t>();
      r.degenerate_runs = j.at("degenerate_runs").get<std::size_t>();
      r.config_hash = j.at("config_hash").get<std::string>();
      rows.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  return rows;
}

std::string comparison_table(const std::vector<MetricsRow>& rows) {
  const auto marks = rank_marks(rows);
  std::ostringstream out;
  out << "| Model | Accuracy | Precision | Recall | F-measure | AUC |\n";
  out << "|---|---|---|---|---|---|\n";
  char buf[64];
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << "| " << rows[i].variant;
    for (std::size_t k = 0; k < kNumMetrics; ++k) {
      std::snprintf(buf, sizeof(buf), "%.3f (+/-%.3f)", rows[i].mean[k], rows[i].std[k]);
      const char* wrap = marks[i][k] == 1 ? "**" : marks[i][k] == 2 ? "_" : "";
      out << " | " << wrap << buf << wrap;
    }
    out << " |\n";
  }
  return out.str();
}

void write_line_plot(const std::string& path, const std::string& title, const std::string& y_label,
                     std::vector<PlotSeries> series) {
  constexpr double kW = 640, kH = 400, kLeft = 70, kRight = 170, kTop = 40, kBottom = 50;
  static const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (PlotSeries& s : series) {
    std::sort(s.points.begin(), s.points.end());
    for (const auto& [x, y] : s.points) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (!(x0 <= x1)) throw DataError("nothing to plot");
  if (x0 == x1) {
    x0 -= 1;
    x1 += 1;
  }
  if (y0 == y1) {
    y0 -= 0.05;
    y1 += 0.05;
  }
  const double pw = kW - kLeft - kRight;
  const double ph = kH - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::ostringstream svg;
  char buf[256];
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << xml_escape(title) << "</text>\n";
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", kLeft,
                kTop + ph, kLeft + pw, kTop + ph);
  svg << buf;
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", kLeft, kTop,
                kLeft, kTop + ph);
  svg << buf;
  for (int i = 0; i <= 4; ++i) {
    const double y = y0 + (y1 - y0) * i / 4.0;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%g\" y=\"%g\" text-anchor=\"end\">%.3f</text>\n", kLeft - 6,
                  py(y) + 4, y);
    svg << buf;
  }
  std::vector<double> ticks;
  for (const PlotSeries& s : series) {
    for (const auto& p : s.points) ticks.push_back(p.first);
  }
  std::sort(ticks.begin(), ticks.end());
  ticks.erase(std::unique(ticks.begin(), ticks.end()), ticks.end());
  for (double x : ticks) {
    std::snprintf(buf, sizeof(buf), "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">%g</text>\n",
                  px(x), kTop + ph + 18, x);
    svg << buf;
  }
  svg << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 10
      << "\" text-anchor=\"middle\">prediction horizon (hours)</text>\n";
  svg << "<text x=\"16\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << kTop + ph / 2 << ")\">" << xml_escape(y_label) << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % 10];
    svg << "<g class=\"series\" data-label=\"" << xml_escape(series[s].label) << "\">\n";
    if (series[s].points.size() > 1) {
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
      for (const auto& [x, y] : series[s].points) {
        std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", px(x), py(y));
        svg << buf;
      }
      svg << "\"/>\n";
    }
    for (const auto& [x, y] : series[s].points) {
      std::snprintf(buf, sizeof(buf), "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"%s\" ",
                    px(x), py(y), color);
      svg << buf << "data-x=\"" << format_double(x) << "\" data-y=\"" << format_double(y)
          << "\"/>\n";
    }
    svg << "</g>\n";
    const double ly = kTop + 14 + 18 * static_cast<double>(s);
    std::snprintf(buf, sizeof(buf),
                  "<rect x=\"%g\" y=\"%g\" width=\"12\" height=\"3\" fill=\"%s\"/>\n",
                  kLeft + pw + 12, ly - 4, color);
    svg << buf;
    svg << "<text x=\"" << kLeft + pw + 30 << "\" y=\"" << ly << "\">"
        << xml_escape(series[s].label) << "</text>\n";
  }
  svg << "</svg>\n";
  std::ofstream out = open_out(path);
  out << svg.str();
}

std::vector<PlotSeries> read_line_plot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  static const std::regex group_re("<g class=\"series\" data-label=\"([^\"]*)\">");
  static const std::regex point_re("data-x=\"([^\"]+)\" data-y=\"([^\"]+)\"");
  std::vector<PlotSeries> out;
  std::istringstream lines(text);
  std::string line;
  std::smatch m;
  while (std::getline(lines, line)) {
    if (std::regex_search(line, m, group_re)) {
      out.push_back({xml_unescape(m[1].str()), {}});
    } else if (!out.empty() && std::regex_search(line, m, point_re)) {
      out.back().points.emplace_back(parse_double(m[1].str()), parse_double(m[2].str()));
    }
  }
  return out;
}

}  // namespace vrads
