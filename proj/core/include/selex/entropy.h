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
#include <span>
#include <vector>

#include "selex/model.h"

namespace selex {

// All entropies are in nats. Normalized quantities do not depend on the base.

// Tolerance on M - m below which a user's bounds are degenerate.
inline constexpr double kDegenerateTolerance = 1e-12;

// Plug-in Shannon entropy of a count vector. Throws std::invalid_argument on
// empty input or a zero count.
double ShannonEntropy(std::span<const std::uint64_t> counts);
// Same quantity expressed in an arbitrary logarithm base.
double ShannonEntropy(std::span<const std::uint64_t> counts, double base);

struct BiasEntropy {
  double nats = 0.0;
  // nats / ln K; 0 when K == 1.
  double normalized = 0.0;
};

// Entropy of the per-class totals (zero classes skipped).
BiasEntropy ComputeBiasEntropy(std::span<const std::uint64_t> bias_counts,
                               std::size_t num_classes);
BiasEntropy ComputeBiasEntropy(const UserVector& v, std::size_t num_classes);
BiasEntropy ComputeBiasEntropy(const UserVector& v);

double PageEntropy(const UserVector& v);

// H(pages) = H(classes) + sum_i weight_i * conditional_i.
struct ClassTerm {
  BiasIndex bias = 0;
  // Share of the user's interactions falling in this class.
  double weight = 0.0;
  // Entropy of the per-page counts within this class.
  double conditional = 0.0;
};

struct Decomposition {
  double bias_entropy = 0.0;
  std::vector<ClassTerm> terms;  // non-empty classes only

  double Recombined() const;
};

Decomposition Decompose(const UserVector& v);

// Largest entropy of `interactions` integer counts spread over at most
// `pages` pages: the near-uniform split.
double MaxSplitEntropy(std::uint64_t interactions, std::uint64_t pages);

// Bounds on page entropy given the per-class totals and the reachable pages
// per class (UserVector::catalog_pages).
double MinPageEntropy(const UserVector& v);
double MaxPageEntropy(const UserVector& v);

struct EntropyBounds {
  double min = 0.0;
  double max = 0.0;
  bool degenerate = true;
};

EntropyBounds ComputeBounds(const UserVector& v);

// (H_pages - m) / (M - m), clamped to [0, 1]; nullopt for degenerate bounds.
std::optional<double> XStatistic(const UserVector& v);

struct EntropyRecord {
  UserId user = 0;
  KindId kind = 0;
  std::uint64_t total = 0;
  std::uint32_t pages_touched = 0;
  std::optional<BiasIndex> leaning;
  double bias_entropy = 0.0;
  double bias_entropy_norm = 0.0;
  double page_entropy = 0.0;
  EntropyBounds bounds;
  std::optional<double> x;
  bool meets_activity_threshold = false;
  bool multi_page = false;
};

// `min_activity` is the smallest qualifying total interaction count.
EntropyRecord MakeEntropyRecord(const UserVector& v, std::uint64_t min_activity);

}  // namespace selex
