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

#include "selex/stats.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace selex {

Ecdf::Ecdf(std::vector<double> values) : sorted_(std::move(values)) {
  if (sorted_.empty()) throw std::invalid_argument("eCDF of an empty sample");
  std::sort(sorted_.begin(), sorted_.end());
}

double Ecdf::operator()(double x) const {
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

std::vector<std::pair<double, double>> Ecdf::Steps() const {
  std::vector<std::pair<double, double>> steps;
  const double n = static_cast<double>(sorted_.size());
  for (std::size_t i = 0; i < sorted_.size(); ++i) {
    if (i + 1 < sorted_.size() && sorted_[i + 1] == sorted_[i]) continue;
    steps.emplace_back(sorted_[i], static_cast<double>(i + 1) / n);
  }
  return steps;
}

std::vector<double> EvenSplitReferenceLines(std::size_t num_classes) {
  std::vector<double> lines;
  if (num_classes < 3) return lines;
  const double log_k = std::log(static_cast<double>(num_classes));
  for (std::size_t k = 2; k < num_classes; ++k) {
    lines.push_back(std::log(static_cast<double>(k)) / log_k);
  }
  return lines;
}

std::vector<double> AverageEcdf(std::span<const std::vector<double>> samples,
                                std::span<const double> grid) {
  std::vector<double> mean(grid.size(), 0.0);
  std::size_t used = 0;
  for (const auto& sample : samples) {
    if (sample.empty()) continue;
    std::vector<double> sorted = sample;
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const auto it = std::upper_bound(sorted.begin(), sorted.end(), grid[g]);
      mean[g] += static_cast<double>(it - sorted.begin()) / n;
    }
    ++used;
  }
  if (used > 0) {
    for (auto& m : mean) m /= static_cast<double>(used);
  }
  return mean;
}

std::vector<double> GeometricEdges(double lo, double hi, std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("GeometricEdges: zero bins");
  if (!(lo > 0.0) || hi < lo) throw std::invalid_argument("GeometricEdges: bad range");
  if (hi == lo) hi = 2.0 * lo;
  std::vector<double> edges(bins + 1);
  const double ratio = std::log(hi / lo);
  for (std::size_t i = 0; i <= bins; ++i) {
    edges[i] = lo * std::exp(ratio * static_cast<double>(i) / static_cast<double>(bins));
  }
  edges.front() = lo;
  edges.back() = hi;
  return edges;
}

std::size_t GeometricBin(std::span<const double> edges, double value) {
  const std::size_t bins = edges.size() - 1;
  const auto it = std::upper_bound(edges.begin(), edges.end(), value);
  if (it == edges.begin()) return 0;
  return std::min<std::size_t>(static_cast<std::size_t>(it - edges.begin()) - 1, bins - 1);
}

BinnedCurve ActivityConcentration(const InteractionTable& table, KindId kind,
                                  std::span<const double> edges) {
  if (edges.size() < 2) throw std::invalid_argument("ActivityConcentration: need two edges");
  BinnedCurve curve;
  curve.edges.assign(edges.begin(), edges.end());
  const std::size_t bins = edges.size() - 1;
  curve.bins.resize(bins);
  std::vector<double> page_sums(bins, 0.0);
  for (std::size_t b = 0; b < bins; ++b) {
    curve.bins[b].lower = edges[b];
    curve.bins[b].upper = edges[b + 1];
  }
  for (UserId u = 0; u < table.num_users(); ++u) {
    const auto pages = table.UserPages(kind, u);
    if (pages.empty()) continue;
    const std::size_t b = GeometricBin(edges, static_cast<double>(table.UserTotal(kind, u)));
    ++curve.bins[b].users;
    page_sums[b] += static_cast<double>(pages.size());
  }
  for (std::size_t b = 0; b < bins; ++b) {
    if (curve.bins[b].users > 0) {
      curve.bins[b].mean_pages = page_sums[b] / static_cast<double>(curve.bins[b].users);
    }
  }
  return curve;
}

BinnedCurve ActivityConcentration(const InteractionTable& table, KindId kind, std::size_t bins) {
  std::uint64_t lo = 0, hi = 0;
  for (UserId u = 0; u < table.num_users(); ++u) {
    const std::uint64_t total = table.UserTotal(kind, u);
    if (total == 0) continue;
    if (lo == 0 || total < lo) lo = total;
    hi = std::max(hi, total);
  }
  if (lo == 0) throw DataError("activity concentration: no users with interactions");
  BinnedCurve curve = ActivityConcentration(
      table, kind, GeometricEdges(static_cast<double>(lo), static_cast<double>(hi), bins));
  curve.single_activity_level = lo == hi;
  return curve;
}

double Quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("Quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

FiveNumberSummary Quartiles(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("Quartiles of an empty sample");
  std::sort(values.begin(), values.end());
  return {values.front(), Quantile(values, 0.25), Quantile(values, 0.5), Quantile(values, 0.75),
          values.back()};
}

namespace {

std::vector<double> SmoothedHistogram(std::span<const double> values, const KlOptions& options) {
  std::vector<double> hist(options.bins, options.pseudocount);
  for (double v : values) {
    if (!(v >= -1e-9 && v <= 1.0 + 1e-9)) {
      throw std::invalid_argument("KlDivergence: values must lie in [0, 1]");
    }
    auto b = static_cast<std::size_t>(std::clamp(v, 0.0, 1.0) * static_cast<double>(options.bins));
    hist[std::min(b, options.bins - 1)] += 1.0;
  }
  const double total =
      static_cast<double>(values.size()) + options.pseudocount * static_cast<double>(options.bins);
  for (auto& h : hist) h /= total;
  return hist;
}

}  // namespace

double KlDivergence(std::span<const double> real, std::span<const double> benchmark,
                    const KlOptions& options) {
  if (real.empty() || benchmark.empty()) throw std::invalid_argument("KlDivergence: empty sample");
  if (options.bins == 0 || !(options.pseudocount > 0.0)) {
    throw std::invalid_argument("KlDivergence: need bins > 0 and pseudocount > 0");
  }
  const auto p = SmoothedHistogram(real, options);
  const auto q = SmoothedHistogram(benchmark, options);
  double d = 0.0;
  for (std::size_t b = 0; b < options.bins; ++b) d += p[b] * std::log(p[b] / q[b]);
  return std::max(d, 0.0);
}

double KolmogorovSurvival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  // The alternating series converges slowly near zero, where Q is ~1.
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult KsTwoSample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("KsTwoSample: empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size());
  const double m = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  const double en = std::sqrt(n * m / (n + m));
  return {d, KolmogorovSurvival((en + 0.12 + 0.11 / en) * d)};
}

}  // namespace selex
