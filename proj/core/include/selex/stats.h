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

#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "selex/model.h"

namespace selex {

// Empirical CDF, F(x) = #{values <= x} / n.
class Ecdf {
 public:
  // Throws std::invalid_argument on an empty sample.
  explicit Ecdf(std::vector<double> values);

  double operator()(double x) const;
  std::size_t size() const { return sorted_.size(); }
  std::span<const double> sorted_values() const { return sorted_; }
  // (value, F(value)) at each distinct value, ascending.
  std::vector<std::pair<double, double>> Steps() const;

 private:
  std::vector<double> sorted_;
};

// ln(k) / ln(K) for k = 2 .. K-1: normalized entropy of an even split over
// k of K classes.
std::vector<double> EvenSplitReferenceLines(std::size_t num_classes);

// Pointwise mean of the eCDFs of several samples, evaluated at `grid`.
// Empty samples are skipped.
std::vector<double> AverageEcdf(std::span<const std::vector<double>> samples,
                                std::span<const double> grid);

// Users binned by total activity into geometric bins over [min, max]; per bin,
// the mean number of distinct pages.
struct BinnedCurve {
  struct Bin {
    double lower = 0.0;
    double upper = 0.0;
    std::uint64_t users = 0;
    double mean_pages = 0.0;
    bool populated() const { return users > 0; }
  };
  std::vector<double> edges;  // bins + 1, strictly increasing
  std::vector<Bin> bins;
  // Every user had the same activity; everything sits in the first bin.
  bool single_activity_level = false;
};

// Geometric edges over [lo, hi]. When lo == hi the range is widened to
// [lo, 2 lo] so edges stay strictly increasing.
std::vector<double> GeometricEdges(double lo, double hi, std::size_t bins);

// Bin of `value` for edges from GeometricEdges; the last bin is closed.
std::size_t GeometricBin(std::span<const double> edges, double value);

BinnedCurve ActivityConcentration(const InteractionTable& table, KindId kind,
                                  std::size_t bins = 12);
// Same, with caller-supplied edges (e.g. shared between a table and its
// randomization).
BinnedCurve ActivityConcentration(const InteractionTable& table, KindId kind,
                                  std::span<const double> edges);

struct FiveNumberSummary {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

// Linear interpolation between closest ranks (type 7) on a sorted sample.
double Quantile(std::span<const double> sorted, double p);
FiveNumberSummary Quartiles(std::vector<double> values);

struct KlOptions {
  std::size_t bins = 50;
  double pseudocount = 0.5;
};

// D(real || benchmark) between histograms on shared equal-width bins over
// [0, 1] with a pseudocount added to every bin.
double KlDivergence(std::span<const double> real, std::span<const double> benchmark,
                    const KlOptions& options = {});

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
KsResult KsTwoSample(std::span<const double> a, std::span<const double> b);
// Survival function of the Kolmogorov distribution.
double KolmogorovSurvival(double lambda);

}  // namespace selex
