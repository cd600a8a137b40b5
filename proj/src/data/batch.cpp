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

#include "vrads/batch.hpp"

#include <algorithm>
#include <numeric>

#include "vrads/errors.hpp"
#include "vrads/rng.hpp"

namespace vrads {

std::uint64_t Sequence::key() const { return hash_string(visit_id); }

SequenceBatch make_batch(std::span<const Sequence* const> seqs) {
  if (seqs.empty()) throw DataError("cannot batch zero sequences");
  SequenceBatch b;
  b.batch = seqs.size();
  b.value_dim = seqs[0]->channels;
  for (const Sequence* s : seqs) {
    if (s->channels != b.value_dim) throw DataError("sequences disagree on channel count");
    if (s->values.size() != s->length * s->channels ||
        s->indicators.size() != s->length * s->channels) {
      throw DataError("sequence " + s->visit_id + " has inconsistent storage");
    }
    if (s->length == 0) throw DataError("sequence " + s->visit_id + " is empty");
    b.steps = std::max(b.steps, s->length);
    b.labels.push_back(s->label);
    b.domains.push_back(s->domain);
    b.lengths.push_back(s->length);
    b.keys.push_back(s->key());
  }
  const std::size_t n = b.batch;
  const std::size_t r = b.value_dim;
  const std::size_t d = 2 * r;
  for (std::size_t t = 0; t < b.steps; ++t) {
    std::vector<double> x(n * d, 0.0);
    std::vector<double> m(n, 0.0);
    std::vector<double> tgt(n * r, 0.0);
    std::vector<double> rm(n * r, 0.0);
    std::vector<double> em(n, 0.0);
    bool any_end = false;
    for (std::size_t i = 0; i < n; ++i) {
      const Sequence& s = *seqs[i];
      if (t >= s.length) continue;
      m[i] = 1.0;
      for (std::size_t c = 0; c < r; ++c) {
        const double v = s.values[t * r + c];
        const double ind = s.indicators[t * r + c];
        x[i * d + c] = v;
        x[i * d + r + c] = ind;
        tgt[i * r + c] = v;
        rm[i * r + c] = 1.0 - ind;
      }
      if (t + 1 == s.length) {
        em[i] = 1.0;
        any_end = true;
      }
    }
    b.x.emplace_back(Shape{n, d}, std::move(x));
    b.step_mask.emplace_back(Shape{n, 1}, std::move(m));
    b.target.emplace_back(Shape{n, r}, std::move(tgt));
    b.recon_mask.emplace_back(Shape{n, r}, std::move(rm));
    b.end_mask.emplace_back(Shape{n, 1}, std::move(em));
    b.any_end.push_back(any_end);
  }
  return b;
}

SequenceBatch make_batch(const std::vector<Sequence>& seqs) {
  std::vector<const Sequence*> ptrs;
  for (const Sequence& s : seqs) ptrs.push_back(&s);
  return make_batch(ptrs);
}

Tensor SequenceBatch::values_tensor() const {
  const std::size_t d = input_dim();
  std::vector<double> v(batch * steps * d);
  for (std::size_t t = 0; t < steps; ++t) {
    const auto xt = x[t].values();
    for (std::size_t i = 0; i < batch; ++i) {
      std::copy_n(xt.data() + i * d, d, v.data() + (i * steps + t) * d);
    }
  }
  return Tensor(Shape{batch, steps, d}, std::move(v));
}

Tensor SequenceBatch::mask_tensor() const {
  std::vector<double> v(batch * steps);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t i = 0; i < batch; ++i) v[i * steps + t] = step_mask[t].values()[i];
  }
  return Tensor(Shape{batch, steps}, std::move(v));
}

std::vector<SequenceBatch> make_batches(const std::vector<Sequence>& seqs,
                                        std::size_t batch_size, bool shuffle,
                                        std::uint64_t seed) {
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  std::vector<std::size_t> order(seqs.size());
  std::iota(order.begin(), order.end(), 0);
  if (shuffle) {
    Rng rng(seed);
    rng.shuffle(order.begin(), order.end());
  }
  std::vector<SequenceBatch> out;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    std::vector<const Sequence*> ptrs;
    for (std::size_t k = start; k < std::min(order.size(), start + batch_size); ++k) {
      ptrs.push_back(&seqs[order[k]]);
    }
    out.push_back(make_batch(ptrs));
  }
  return out;
}

std::vector<Sequence> unbatch(const SequenceBatch& b) {
  std::vector<Sequence> out(b.batch);
  const std::size_t r = b.value_dim;
  const std::size_t d = 2 * r;
  for (std::size_t i = 0; i < b.batch; ++i) {
    Sequence& s = out[i];
    s.domain = b.domains[i];
    s.label = b.labels[i];
    s.length = b.lengths[i];
    s.channels = r;
    for (std::size_t t = 0; t < s.length; ++t) {
      const auto xt = b.x[t].values();
      s.values.insert(s.values.end(), xt.begin() + i * d, xt.begin() + i * d + r);
      s.indicators.insert(s.indicators.end(), xt.begin() + i * d + r, xt.begin() + (i + 1) * d);
    }
  }
  return out;
}

}  // namespace vrads
