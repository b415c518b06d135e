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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "oracles.h"
#include "selex/entropy.h"
#include "selex/nullmodel.h"
#include "selex/stats.h"
#include "selex/synthgen.h"

namespace selex {
namespace {

InteractionTable RandomTable(std::mt19937_64& rng, int users, int pages, int rows) {
  InteractionTable::Builder b;
  for (int p = 0; p < pages; ++p) b.AddPage("p" + std::to_string(p), static_cast<BiasIndex>(rng() % 5));
  for (int i = 0; i < rows; ++i) {
    b.AddInteraction("u" + std::to_string(rng() % users), "p" + std::to_string(rng() % pages),
                     "like", 1 + rng() % 4);
  }
  return std::move(b).Build();
}

TEST(StrongRandomizeTest, PreservesBothDegreeSequences) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 50; ++t) {
    const auto table = RandomTable(rng, 30, 12, 120);
    const KindId like = table.RequireKind("like");
    const auto out = StrongRandomize(table, like, rng());
    EXPECT_EQ(out.UserTotals(like), table.UserTotals(like));
    EXPECT_EQ(out.PageTotals(like), table.PageTotals(like));
    EXPECT_TRUE(std::equal(out.page_biases().begin(), out.page_biases().end(),
                           table.page_biases().begin()));
  }
}

TEST(StrongRandomizeTest, SingleUserSinglePageIsIdentity) {
  InteractionTable::Builder b;
  b.AddPage("p", "Center");
  b.AddInteraction("u", "p", "comment", 9);
  const auto table = std::move(b).Build();
  EXPECT_EQ(StrongRandomize(table, 0, 123), table);
}

TEST(StrongRandomizeTest, LeavesOtherKindsAlone) {
  std::mt19937_64 rng(12);
  InteractionTable::Builder b;
  for (int p = 0; p < 5; ++p) b.AddPage("p" + std::to_string(p), static_cast<BiasIndex>(p));
  for (int i = 0; i < 60; ++i) {
    b.AddInteraction("u" + std::to_string(rng() % 8), "p" + std::to_string(rng() % 5),
                     i % 2 ? "like" : "comment");
  }
  const auto table = std::move(b).Build();
  const auto out = StrongRandomize(table, table.RequireKind("like"), 5);
  EXPECT_EQ(out.edges(table.RequireKind("comment")), table.edges(table.RequireKind("comment")));
}

TEST(StrongRandomizeTest, DeterministicUnderSeed) {
  std::mt19937_64 rng(13);
  const auto table = RandomTable(rng, 40, 10, 200);
  EXPECT_EQ(StrongRandomize(table, 0, 77), StrongRandomize(table, 0, 77));
  EXPECT_FALSE(StrongRandomize(table, 0, 77) == StrongRandomize(table, 0, 78));
}

TEST(WeakRandomizeTest, PreservesEdgesHistogramAndPageEntropy) {
  std::mt19937_64 rng(14);
  for (int t = 0; t < 50; ++t) {
    const auto table = RandomTable(rng, 20, 15, 100);
    const auto out = WeakRandomize(table, rng());
    EXPECT_EQ(out.Edges(), table.Edges());
    EXPECT_EQ(out.PagesPerLabel(), table.PagesPerLabel());
    for (UserId u = 0; u < table.num_users(); ++u) {
      const auto a = MakeUserVector(table, u, 0);
      const auto b = MakeUserVector(out, u, 0);
      ASSERT_TRUE(a && b);
      EXPECT_EQ(PageEntropy(*a), PageEntropy(*b));
    }
  }
}

TEST(WeakRandomizeTest, SingleLabelSchemeIsIdentity) {
  InteractionTable::Builder b(BiasScheme({"Only"}));
  for (int p = 0; p < 6; ++p) b.AddPage("p" + std::to_string(p), "Only");
  b.AddInteraction("u", "p1", "like", 2);
  b.AddInteraction("v", "p4", "like", 1);
  const auto table = std::move(b).Build();
  EXPECT_EQ(WeakRandomize(table, 99), table);
}

InteractionTable ToyTable() {
  // 4 pages, 2 labels (two pages each); three users.
  InteractionTable::Builder b(BiasScheme({"A", "B"}));
  b.AddPage("p0", "A");
  b.AddPage("p1", "A");
  b.AddPage("p2", "B");
  b.AddPage("p3", "B");
  b.AddInteraction("u0", "p0", "like", 4);
  b.AddInteraction("u0", "p1", "like", 2);
  b.AddInteraction("u1", "p0", "like", 3);
  b.AddInteraction("u1", "p2", "like", 3);
  b.AddInteraction("u2", "p1", "like", 1);
  b.AddInteraction("u2", "p2", "like", 2);
  b.AddInteraction("u2", "p3", "like", 5);
  return std::move(b).Build();
}

TEST(MonteCarloWeakTest, IdentityPermutationReproducesRealValues) {
  const auto table = ToyTable();
  RandomizationSpec spec;
  spec.replicates = 1;
  spec.sample_fraction = 1.0;
  MonteCarloOptions options;
  options.min_activity = 1;
  options.identity_permutation = true;
  const auto dist = MonteCarloWeak(table, 0, spec, options);
  EXPECT_EQ(dist.mean_benchmark, dist.real_entropy);
  for (const auto& g : dist.groups) EXPECT_EQ(g.Pooled(), g.real);
}

TEST(MonteCarloWeakTest, PermutationBreakingConcentrationRaisesEntropy) {
  // The user's pages all carry label A; after the swap they span A and B.
  const auto table = ToyTable();
  const auto v = MakeUserVector(table, 0, 0);
  ASSERT_EQ(ComputeBiasEntropy(*v).nats, 0.0);
  const auto relabeled = table.WithPageBiases({0, 1, 0, 1});
  const auto w = MakeUserVector(relabeled, 0, 0);
  EXPECT_GT(ComputeBiasEntropy(*w).nats, 0.0);
}

// Oracle: average normalized bias entropy over every distinct assignment of
// the label multiset {A, A, B, B} to the four pages.
TEST(MonteCarloWeakTest, MeanMatchesExhaustiveAverage) {
  const auto table = ToyTable();
  std::vector<BiasIndex> labels = {0, 0, 1, 1};
  std::map<UserId, double> exact;
  int assignments = 0;
  do {
    ++assignments;
    const auto relabeled = table.WithPageBiases(labels);
    for (UserId u = 0; u < 3; ++u) {
      const auto v = MakeUserVector(relabeled, u, 0);
      std::vector<std::uint64_t> nonzero;
      for (auto c : v->bias_counts) {
        if (c) nonzero.push_back(c);
      }
      exact[u] += testing::NaiveEntropy(nonzero) / std::log(2.0);
    }
  } while (std::next_permutation(labels.begin(), labels.end()));
  ASSERT_EQ(assignments, 6);
  for (auto& [u, e] : exact) e /= assignments;

  RandomizationSpec spec;
  spec.replicates = 10000;
  spec.sample_fraction = 1.0;
  spec.seed = 2024;
  MonteCarloOptions options;
  options.min_activity = 1;
  const auto dist = MonteCarloWeak(table, 0, spec, options);
  ASSERT_EQ(dist.sample.size(), 3u);

  for (std::size_t i = 0; i < dist.sample.size(); ++i) {
    // Standard error from the replicate values of this user.
    double sum = 0, sum_sq = 0;
    const auto& all = dist.groups.back();
    for (const auto& rep : all.per_replicate) {
      sum += rep[i];
      sum_sq += rep[i] * rep[i];
    }
    const double n = spec.replicates;
    const double mean = sum / n;
    const double se = std::sqrt(std::max(0.0, sum_sq / n - mean * mean) / n);
    EXPECT_NEAR(dist.mean_benchmark[i], mean, 1e-12);
    EXPECT_LE(std::abs(mean - exact[dist.sample[i]]), 3 * se + 1e-12)
        << "user " << dist.sample[i] << " mean " << mean << " exact " << exact[dist.sample[i]];
  }
}

TEST(MonteCarloWeakTest, EligibilityAndSampling) {
  InteractionTable::Builder b;
  for (int p = 0; p < 10; ++p) b.AddPage("p" + std::to_string(p), static_cast<BiasIndex>(p % 5));
  b.AddInteraction("low", "p0", "like", 2);        // below threshold
  b.AddInteraction("single", "p1", "like", 9);     // one page
  for (int u = 0; u < 40; ++u) {
    b.AddInteraction("m" + std::to_string(u), "p" + std::to_string(u % 10), "like", 3);
    b.AddInteraction("m" + std::to_string(u), "p" + std::to_string((u + 3) % 10), "like", 3);
  }
  const auto table = std::move(b).Build();
  RandomizationSpec spec;
  spec.replicates = 3;
  spec.sample_fraction = 0.25;
  const auto dist = MonteCarloWeak(table, 0, spec);
  EXPECT_EQ(dist.users_with_activity, 42u);
  EXPECT_EQ(dist.below_threshold, 1u);
  EXPECT_EQ(dist.single_page, 1u);
  EXPECT_EQ(dist.eligible, 40u);
  EXPECT_EQ(dist.sample.size(), 10u);
  EXPECT_TRUE(std::is_sorted(dist.sample.begin(), dist.sample.end()));
  EXPECT_EQ(std::adjacent_find(dist.sample.begin(), dist.sample.end()), dist.sample.end());

  MonteCarloOptions keep;
  keep.multi_page_only = false;
  EXPECT_EQ(MonteCarloWeak(table, 0, spec, keep).eligible, 41u);
}

TEST(MonteCarloWeakTest, Errors) {
  const auto table = ToyTable();
  RandomizationSpec spec;
  MonteCarloOptions options;
  options.min_activity = 100;
  EXPECT_THROW(MonteCarloWeak(table, 0, spec, options), DataError);
  spec.mode = RandomizationSpec::Mode::kStrong;
  EXPECT_THROW(MonteCarloWeak(table, 0, spec), ConfigError);
  spec.mode = RandomizationSpec::Mode::kWeak;
  spec.replicates = 0;
  EXPECT_THROW(MonteCarloWeak(table, 0, spec), ConfigError);
  spec.replicates = 1;
  spec.sample_fraction = 0.0;
  EXPECT_THROW(MonteCarloWeak(table, 0, spec), ConfigError);
}

TEST(MonteCarloWeakTest, IndependentOfThreadCount) {
  CohortSpec cohort;
  cohort.users = 500;
  cohort.bias_affinity = 0.8;
  const auto table = Generate(cohort);
  RandomizationSpec spec;
  spec.replicates = 16;
  spec.sample_fraction = 0.5;
  MonteCarloOptions one, many;
  one.threads = 1;
  many.threads = 5;
  const auto a = MonteCarloWeak(table, 0, spec, one);
  const auto b = MonteCarloWeak(table, 0, spec, many);
  EXPECT_EQ(a.sample, b.sample);
  EXPECT_EQ(a.mean_benchmark, b.mean_benchmark);
  for (std::size_t g = 0; g < a.groups.size(); ++g) {
    EXPECT_EQ(a.groups[g].per_replicate, b.groups[g].per_replicate);
  }
}

std::vector<double> NormalizedBiasEntropies(const InteractionTable& t) {
  std::vector<double> out;
  for (UserId u = 0; u < t.num_users(); ++u) {
    if (auto v = MakeUserVector(t, u, 0)) out.push_back(ComputeBiasEntropy(*v).normalized);
  }
  return out;
}

TEST(StrongImpliesWeakTest, SmallCohort) {
  CohortSpec cohort;
  cohort.users = 2000;
  cohort.bias_affinity = 0.9;
  cohort.page_loyalty = 3.0;
  const auto table = Generate(cohort);
  const auto strong = StrongRandomize(table, 0, 1);
  const auto both = WeakRandomize(strong, 2);
  const auto ks = KsTwoSample(NormalizedBiasEntropies(strong), NormalizedBiasEntropies(both));
  EXPECT_GT(ks.p_value, 0.01) << "D = " << ks.statistic;
}

}  // namespace
}  // namespace selex
