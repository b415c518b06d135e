/*
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "selex/entropy.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace selex {
namespace {

// -sum p ln p over positive counts with known total.
double EntropyOfCounts(std::span<const std::uint64_t> counts, double total) {
  double h = 0.0;
  for (std::uint64_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log(p);
  }
  return h;
}

double SumCounts(std::span<const std::uint64_t> counts) {
  std::uint64_t n = 0;
  for (auto c : counts) n += c;
  return static_cast<double>(n);
}

double GroupEntropy(const std::vector<PageCount>& group, std::uint64_t total) {
  if (group.size() <= 1) return 0.0;
  double h = 0.0;
  const double n = static_cast<double>(total);
  for (const auto& pc : group) {
    const double p = static_cast<double>(pc.count) / n;
    h -= p * std::log(p);
  }
  return h;
}

void RequireActive(const UserVector& v) {
  if (v.total == 0) throw std::invalid_argument("user vector has no interactions");
}

}  // namespace

double ShannonEntropy(std::span<const std::uint64_t> counts) {
  if (counts.empty()) throw std::invalid_argument("ShannonEntropy: empty count vector");
  for (auto c : counts) {
    if (c == 0) throw std::invalid_argument("ShannonEntropy: counts must be positive");
  }
  if (counts.size() == 1) return 0.0;
  return EntropyOfCounts(counts, SumCounts(counts));
}

double ShannonEntropy(std::span<const std::uint64_t> counts, double base) {
  if (!(base > 0.0) || base == 1.0) throw std::invalid_argument("ShannonEntropy: bad base");
  return ShannonEntropy(counts) / std::log(base);
}

BiasEntropy ComputeBiasEntropy(std::span<const std::uint64_t> bias_counts,
                               std::size_t num_classes) {
  const double total = SumCounts(bias_counts);
  if (total == 0.0) throw std::invalid_argument("bias entropy of an empty vector");
  BiasEntropy out;
  out.nats = EntropyOfCounts(bias_counts, total);
  out.normalized = num_classes > 1 ? out.nats / std::log(static_cast<double>(num_classes)) : 0.0;
  return out;
}

BiasEntropy ComputeBiasEntropy(const UserVector& v, std::size_t num_classes) {
  RequireActive(v);
  return ComputeBiasEntropy(v.bias_counts, num_classes);
}

BiasEntropy ComputeBiasEntropy(const UserVector& v) {
  return ComputeBiasEntropy(v, v.num_classes());
}

double PageEntropy(const UserVector& v) {
  RequireActive(v);
  if (v.pages_touched <= 1) return 0.0;
  // Summed in count order so relabeling pages cannot change a single bit.
  std::vector<std::uint64_t> counts;
  counts.reserve(v.pages_touched);
  for (const auto& group : v.per_bias) {
    for (const auto& pc : group) counts.push_back(pc.count);
  }
  std::sort(counts.begin(), counts.end());
  const double n = static_cast<double>(v.total);
  double h = 0.0;
  for (auto c : counts) {
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h;
}

double Decomposition::Recombined() const {
  double h = bias_entropy;
  for (const auto& t : terms) h += t.weight * t.conditional;
  return h;
}

Decomposition Decompose(const UserVector& v) {
  RequireActive(v);
  Decomposition d;
  d.bias_entropy = ComputeBiasEntropy(v).nats;
  const double n = static_cast<double>(v.total);
  for (std::size_t b = 0; b < v.per_bias.size(); ++b) {
    if (v.bias_counts[b] == 0) continue;
    d.terms.push_back({static_cast<BiasIndex>(b), static_cast<double>(v.bias_counts[b]) / n,
                       GroupEntropy(v.per_bias[b], v.bias_counts[b])});
  }
  return d;
}

double MaxSplitEntropy(std::uint64_t interactions, std::uint64_t pages) {
  if (interactions <= 1 || pages <= 1) return 0.0;
  if (interactions <= pages) return std::log(static_cast<double>(interactions));
  const std::uint64_t q = interactions / pages;
  const std::uint64_t r = interactions % pages;
  const double n = static_cast<double>(interactions);
  const double p_hi = static_cast<double>(q + 1) / n;
  const double p_lo = static_cast<double>(q) / n;
  double h = -static_cast<double>(pages - r) * p_lo * std::log(p_lo);
  if (r > 0) h -= static_cast<double>(r) * p_hi * std::log(p_hi);
  return h;
}

double MinPageEntropy(const UserVector& v) {
  RequireActive(v);
  return ComputeBiasEntropy(v).nats;
}

double MaxPageEntropy(const UserVector& v) {
  RequireActive(v);
  double h = ComputeBiasEntropy(v).nats;
  const double n = static_cast<double>(v.total);
  for (std::size_t b = 0; b < v.per_bias.size(); ++b) {
    if (v.bias_counts[b] == 0) continue;
    const std::uint64_t reachable = std::max<std::uint64_t>(v.catalog_pages[b], v.distinct_pages[b]);
    h += static_cast<double>(v.bias_counts[b]) / n * MaxSplitEntropy(v.bias_counts[b], reachable);
  }
  return h;
}

EntropyBounds ComputeBounds(const UserVector& v) {
  EntropyBounds bounds;
  bounds.min = MinPageEntropy(v);
  bounds.max = MaxPageEntropy(v);
  bounds.degenerate = bounds.max - bounds.min < kDegenerateTolerance;
  return bounds;
}

namespace {

// One touched page per touched class attains the minimum exactly; the two
// entropies are summed in different orders and may differ in the last bit.
bool AtMinimum(const UserVector& v) {
  for (auto d : v.distinct_pages) {
    if (d > 1) return false;
  }
  return true;
}

std::optional<double> Scale(double page_entropy, const EntropyBounds& bounds, bool at_minimum) {
  if (bounds.degenerate) return std::nullopt;
  if (at_minimum) return 0.0;
  const double x = (page_entropy - bounds.min) / (bounds.max - bounds.min);
  return std::clamp(x, 0.0, 1.0);
}

}  // namespace

std::optional<double> XStatistic(const UserVector& v) {
  return Scale(PageEntropy(v), ComputeBounds(v), AtMinimum(v));
}

EntropyRecord MakeEntropyRecord(const UserVector& v, std::uint64_t min_activity) {
  EntropyRecord r;
  r.user = v.user;
  r.kind = v.kind;
  r.total = v.total;
  r.pages_touched = v.pages_touched;
  r.leaning = InferLeaning(v);
  const BiasEntropy be = ComputeBiasEntropy(v);
  r.bias_entropy = be.nats;
  r.bias_entropy_norm = be.normalized;
  r.page_entropy = PageEntropy(v);
  r.bounds = ComputeBounds(v);
  r.x = Scale(r.page_entropy, r.bounds, AtMinimum(v));
  r.meets_activity_threshold = v.total >= min_activity;
  r.multi_page = v.pages_touched >= 2;
  return r;
}

}  // namespace selex
