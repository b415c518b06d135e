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
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "selex/model.h"

namespace selex {

struct RandomizationSpec {
  enum class Mode { kStrong, kWeak };

  Mode mode = Mode::kWeak;
  std::uint64_t seed = 1;
  std::uint32_t replicates = 100;
  // Share of eligible users sampled once for the weak Monte Carlo.
  double sample_fraction = 0.02;

  // Throws ConfigError.
  void Validate() const;
};

// Edge-endpoint randomization of one kind: unit stubs on both sides are
// re-paired by a uniform permutation and merged back into counts. Keeps every
// user total and every page total; labels and other kinds untouched.
InteractionTable StrongRandomize(const InteractionTable& table, KindId kind, std::uint64_t seed);

// Uniform permutation of the page labels. Edges and the label histogram are
// unchanged.
InteractionTable WeakRandomize(const InteractionTable& table, std::uint64_t seed);

// In-place Fisher-Yates shuffle used by WeakRandomize.
void PermuteLabels(std::span<BiasIndex> labels, std::mt19937_64& rng);

enum class BenchmarkEstimator {
  // Replicate values concatenated into one sample.
  kPooled,
  // Mean of the per-replicate eCDFs.
  kReplicateAverage,
};

struct MonteCarloOptions {
  // Smallest qualifying total interaction count.
  std::uint64_t min_activity = 5;
  // Set aside users who touch a single page.
  bool multi_page_only = true;
  unsigned threads = 0;
  // Test hook: every replicate keeps the original labels.
  bool identity_permutation = false;
};

// Values for one leaning group (or the aggregate).
struct GroupBenchmark {
  // Normalized bias entropy of sampled users whose real leaning is this group.
  std::vector<double> real;
  // Per replicate: values of sampled users whose leaning under that
  // replicate's labels is this group.
  std::vector<std::vector<double>> per_replicate;

  std::vector<double> Pooled() const;
};

struct BenchmarkDistribution {
  std::uint64_t users_with_activity = 0;
  std::uint64_t below_threshold = 0;
  std::uint64_t single_page = 0;
  std::uint64_t eligible = 0;
  // Sampled users, ascending ids.
  std::vector<UserId> sample;
  std::vector<double> real_entropy;
  std::vector<std::optional<BiasIndex>> real_leaning;
  // Per sampled user, benchmark entropy averaged over replicates.
  std::vector<double> mean_benchmark;
  // One per label, then the aggregate (index K).
  std::vector<GroupBenchmark> groups;
  std::uint32_t replicates = 0;
};

// Weak-randomization Monte Carlo over a cohort sampled once from the eligible
// users. Throws DataError when no user is eligible.
BenchmarkDistribution MonteCarloWeak(const InteractionTable& table, KindId kind,
                                     const RandomizationSpec& spec,
                                     const MonteCarloOptions& options = {});

}  // namespace selex
