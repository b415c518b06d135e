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

#include "selex/nullmodel.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "selex/entropy.h"

namespace selex {

void RandomizationSpec::Validate() const {
  if (replicates < 1) throw ConfigError("replicates must be at least 1");
  if (!(sample_fraction > 0.0 && sample_fraction <= 1.0)) {
    throw ConfigError("sample fraction must lie in (0, 1]");
  }
}

void PermuteLabels(std::span<BiasIndex> labels, std::mt19937_64& rng) {
  for (std::size_t i = labels.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(labels[i - 1], labels[pick(rng)]);
  }
}

InteractionTable StrongRandomize(const InteractionTable& table, KindId kind, std::uint64_t seed) {
  const KindEdges& in = table.edges(kind);
  const std::size_t num_users = table.num_users();

  // User stubs are implicit: user u owns positions [start[u], start[u+1]).
  std::vector<std::uint64_t> start(num_users + 1, 0);
  for (UserId u = 0; u < num_users; ++u) {
    std::uint64_t total = 0;
    for (auto i = in.user_offsets[u]; i < in.user_offsets[u + 1]; ++i) total += in.counts[i];
    start[u + 1] = start[u] + total;
  }
  std::vector<PageId> stubs;
  stubs.reserve(start.back());
  for (std::size_t i = 0; i < in.num_edges(); ++i) {
    stubs.insert(stubs.end(), in.counts[i], in.pages[i]);
  }

  std::mt19937_64 rng(DeriveSeed(seed, kStreamStrong, kind));
  for (std::size_t i = stubs.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(stubs[i - 1], stubs[pick(rng)]);
  }

  KindEdges out;
  out.user_offsets.assign(num_users + 1, 0);
  for (UserId u = 0; u < num_users; ++u) {
    auto first = stubs.begin() + static_cast<std::ptrdiff_t>(start[u]);
    auto last = stubs.begin() + static_cast<std::ptrdiff_t>(start[u + 1]);
    std::sort(first, last);
    for (auto it = first; it != last;) {
      auto run_end = std::find_if(it, last, [&](PageId p) { return p != *it; });
      out.pages.push_back(*it);
      out.counts.push_back(static_cast<std::uint64_t>(run_end - it));
      it = run_end;
    }
    out.user_offsets[u + 1] = out.pages.size();
  }
  return table.WithKindEdges(kind, std::move(out));
}

InteractionTable WeakRandomize(const InteractionTable& table, std::uint64_t seed) {
  std::vector<BiasIndex> labels(table.page_biases().begin(), table.page_biases().end());
  std::mt19937_64 rng(DeriveSeed(seed, kStreamWeak));
  PermuteLabels(labels, rng);
  return table.WithPageBiases(std::move(labels));
}

std::vector<double> GroupBenchmark::Pooled() const {
  std::vector<double> pooled;
  std::size_t n = 0;
  for (const auto& r : per_replicate) n += r.size();
  pooled.reserve(n);
  for (const auto& r : per_replicate) pooled.insert(pooled.end(), r.begin(), r.end());
  return pooled;
}

namespace {

struct UserScore {
  double entropy;
  std::optional<BiasIndex> leaning;
};

UserScore Score(const InteractionTable& table, KindId kind, UserId user,
                std::span<const BiasIndex> labels, std::vector<std::uint64_t>& scratch) {
  std::fill(scratch.begin(), scratch.end(), 0);
  const auto pages = table.UserPages(kind, user);
  const auto counts = table.UserCounts(kind, user);
  for (std::size_t i = 0; i < pages.size(); ++i) scratch[labels[pages[i]]] += counts[i];
  return {ComputeBiasEntropy(scratch, scratch.size()).normalized, InferLeaning(scratch)};
}

}  // namespace

BenchmarkDistribution MonteCarloWeak(const InteractionTable& table, KindId kind,
                                     const RandomizationSpec& spec,
                                     const MonteCarloOptions& options) {
  spec.Validate();
  if (spec.mode != RandomizationSpec::Mode::kWeak) {
    throw ConfigError("weak Monte Carlo requires a weak randomization spec");
  }
  const std::size_t num_classes = table.scheme().size();

  BenchmarkDistribution out;
  out.replicates = spec.replicates;
  std::vector<UserId> eligible;
  for (UserId u = 0; u < table.num_users(); ++u) {
    const auto pages = table.UserPages(kind, u);
    if (pages.empty()) continue;
    ++out.users_with_activity;
    if (table.UserTotal(kind, u) < options.min_activity) {
      ++out.below_threshold;
    } else if (options.multi_page_only && pages.size() < 2) {
      ++out.single_page;
    } else {
      eligible.push_back(u);
    }
  }
  out.eligible = eligible.size();
  if (eligible.empty()) throw DataError("weak Monte Carlo: no eligible users");

  // Cohort drawn once, without replacement.
  const auto sample_size = static_cast<std::size_t>(std::min<double>(
      static_cast<double>(eligible.size()),
      std::ceil(spec.sample_fraction * static_cast<double>(eligible.size()) - 1e-9)));
  {
    std::mt19937_64 rng(DeriveSeed(spec.seed, kStreamSample));
    for (std::size_t i = 0; i < sample_size; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, eligible.size() - 1);
      std::swap(eligible[i], eligible[pick(rng)]);
    }
    eligible.resize(std::max<std::size_t>(sample_size, 1));
    std::sort(eligible.begin(), eligible.end());
  }
  out.sample = std::move(eligible);
  const std::size_t n = out.sample.size();

  {
    std::vector<std::uint64_t> scratch(num_classes);
    out.real_entropy.resize(n);
    out.real_leaning.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto s = Score(table, kind, out.sample[i], table.page_biases(), scratch);
      out.real_entropy[i] = s.entropy;
      out.real_leaning[i] = s.leaning;
    }
  }

  std::vector<std::vector<UserScore>> replicate_scores(spec.replicates);
  ParallelForBlocks(spec.replicates, ResolveThreads(options.threads),
                    [&](std::size_t begin, std::size_t end) {
                      std::vector<std::uint64_t> scratch(num_classes);
                      std::vector<BiasIndex> labels;
                      for (std::size_t r = begin; r < end; ++r) {
                        labels.assign(table.page_biases().begin(), table.page_biases().end());
                        if (!options.identity_permutation) {
                          std::mt19937_64 rng(DeriveSeed(spec.seed, kStreamReplicate, r));
                          PermuteLabels(labels, rng);
                        }
                        auto& scores = replicate_scores[r];
                        scores.reserve(n);
                        for (UserId u : out.sample) {
                          scores.push_back(Score(table, kind, u, labels, scratch));
                        }
                      }
                    });

  out.groups.resize(num_classes + 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (out.real_leaning[i]) out.groups[*out.real_leaning[i]].real.push_back(out.real_entropy[i]);
    out.groups[num_classes].real.push_back(out.real_entropy[i]);
  }
  for (auto& g : out.groups) g.per_replicate.resize(spec.replicates);
  out.mean_benchmark.assign(n, 0.0);
  for (std::size_t r = 0; r < spec.replicates; ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      const UserScore& s = replicate_scores[r][i];
      if (s.leaning) out.groups[*s.leaning].per_replicate[r].push_back(s.entropy);
      out.groups[num_classes].per_replicate[r].push_back(s.entropy);
      out.mean_benchmark[i] += s.entropy;
    }
  }
  for (auto& m : out.mean_benchmark) m /= static_cast<double>(spec.replicates);
  return out;
}

}  // namespace selex
