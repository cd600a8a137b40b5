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

#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include "vrads/data.hpp"
#include "vrads/errors.hpp"

namespace vrads {

using nlohmann::json;

void write_sequences(const std::string& path, std::span<const Sequence> seqs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  for (const Sequence& s : seqs) {
    json values = json::array();
    json indicators = json::array();
    for (std::size_t t = 0; t < s.length; ++t) {
      json vrow = json::array();
      json irow = json::array();
      for (std::size_t c = 0; c < s.channels; ++c) {
        const double x = s.values[t * s.channels + c];
        vrow.push_back(std::isnan(x) ? json(nullptr) : json(x));
        irow.push_back(static_cast<int>(s.indicators[t * s.channels + c]));
      }
      values.push_back(std::move(vrow));
      indicators.push_back(std::move(irow));
    }
    const json rec = {{"visit_id", s.visit_id}, {"domain", s.domain},   {"label", s.label},
                      {"length", s.length},     {"values", values},     {"indicators", indicators}};
    out << rec.dump() << '\n';
  }
  if (!out) throw DataError("failed writing " + path);
}

std::vector<Sequence> read_sequences(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  std::vector<Sequence> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    try {
      const json rec = json::parse(line);
      Sequence s;
      s.visit_id = rec.at("visit_id").get<std::string>();
      s.domain = rec.at("domain").get<int>();
      s.label = rec.at("label").get<int>();
      s.length = rec.at("length").get<std::size_t>();
      const json& values = rec.at("values");
      const json& indicators = rec.at("indicators");
      if (s.label != 0 && s.label != 1) throw DataError(where + ": label must be 0 or 1");
      if (s.length == 0 || values.size() != s.length || indicators.size() != s.length) {
        throw DataError(where + ": length does not match the value rows");
      }
      s.channels = values.at(0).size();
      for (std::size_t t = 0; t < s.length; ++t) {
        if (values[t].size() != s.channels || indicators[t].size() != s.channels) {
          throw DataError(where + ": ragged value rows");
        }
        for (std::size_t c = 0; c < s.channels; ++c) {
          const json& v = values[t][c];
          s.values.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN()
                                         : v.get<double>());
          s.indicators.push_back(indicators[t][c].get<double>());
        }
      }
      out.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw DataError(where + ": " + e.what());
    }
  }
  return out;
}

}  // namespace vrads
