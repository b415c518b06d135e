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
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "selex/model.h"

namespace selex {

// Truncated discrete power law P(n) ~ n^-exponent on [min, max]. min == max
// gives a fixed activity level.
struct ActivityDistribution {
  std::uint64_t min = 5;
  std::uint64_t max = 200;
  double exponent = 2.0;
};

// Synthetic cohort with planted selectivity.
//
// Each user gets a home label uniformly at random and a label-blind page
// preference drawn from a symmetric Dirichlet over the catalog with per-page
// concentration 1 / (page_loyalty - 1). Each interaction lands in the home
// label with probability beta = (bias_affinity - 1/K) / (1 - 1/K); otherwise
// its label follows the preference mass of each label. The page within the
// chosen label is drawn from the preference restricted to that label.
//
// bias_affinity is therefore the expected share of interactions in the home
// label (for equal label sizes): 1/K is label-blind, 1 is a single label.
// page_loyalty = 1 is uniform over pages; infinity is one favourite page per
// label and a single favourite label for the label-blind part.
struct CohortSpec {
  std::uint32_t users = 1000;
  std::vector<std::uint32_t> pages_per_label = std::vector<std::uint32_t>(5, 20);
  ActivityDistribution activity;
  double bias_affinity = 0.2;
  double page_loyalty = 1.0;
  std::uint64_t seed = 1;
  std::string kind = "like";
  BiasScheme scheme = BiasScheme::Default();
  unsigned threads = 0;

  // Throws ConfigError.
  void Validate() const;
};

inline constexpr double kInfiniteLoyalty = std::numeric_limits<double>::infinity();

struct SyntheticUser {
  BiasIndex home = 0;
  // (page, count) sorted by page, counts merged.
  std::vector<std::pair<PageId, std::uint64_t>> interactions;
};

// Deterministic under the seed regardless of thread count. Pages are
// numbered label by label in catalog order.
std::vector<SyntheticUser> GenerateUsers(const CohortSpec& spec);

InteractionTable Generate(const CohortSpec& spec);
// Also returns each user's planted home label, indexed by UserId.
InteractionTable Generate(const CohortSpec& spec, std::vector<BiasIndex>* home_labels);

// Writes interactions.csv, pages.csv and scheme.txt into `dir`.
void WriteCohort(const InteractionTable& table, const std::filesystem::path& dir);

}  // namespace selex
