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

#include "selex/pipeline.h"

#include <algorithm>

namespace selex {

void ExperimentConfig::Validate() const {
  if (synth && (interactions_path || pages_path)) {
    throw ConfigError("give either input files or a synthetic cohort, not both");
  }
  if (!synth && (!interactions_path || !pages_path)) {
    throw ConfigError("both an interactions file and a pages file are required");
  }
  if (threshold < 1) throw ConfigError("activity threshold must be >= 1");
  if (activity_bins < 1) throw ConfigError("activity bins must be >= 1");
  if (kl.bins < 1) throw ConfigError("KL bins must be >= 1");
  if (!(kl.pseudocount > 0.0)) throw ConfigError("KL pseudocount must be > 0");
  randomization.Validate();
  if (synth) synth->Validate();
}

InteractionTable LoadTable(const ExperimentConfig& config, IngestDiagnostics* diagnostics) {
  config.Validate();
  if (config.synth) return Generate(*config.synth);
  auto result = Ingest(*config.interactions_path, *config.pages_path, config.ingest);
  if (diagnostics) *diagnostics = std::move(result.diagnostics);
  return std::move(result.table);
}

namespace {

struct UserSummary {
  std::uint64_t total = 0;
  std::uint32_t pages = 0;
  std::optional<BiasIndex> leaning;
  double bias_entropy_norm = 0.0;
  std::optional<double> x;
};

// Per-user statistics for one kind, computed in parallel into fixed slots.
std::vector<UserSummary> Summarize(const InteractionTable& table, KindId kind, unsigned threads,
                                   bool with_x) {
  std::vector<UserSummary> out(table.num_users());
  const auto catalog = table.PagesPerLabel();
  const auto labels = table.page_biases();
  ParallelForBlocks(out.size(), ResolveThreads(threads), [&](std::size_t begin, std::size_t end) {
    for (std::size_t u = begin; u < end; ++u) {
      auto v = MakeUserVector(table, static_cast<UserId>(u), kind, labels, catalog);
      if (!v) continue;
      UserSummary& s = out[u];
      s.total = v->total;
      s.pages = v->pages_touched;
      s.leaning = InferLeaning(*v);
      s.bias_entropy_norm = ComputeBiasEntropy(*v).normalized;
      if (with_x) s.x = XStatistic(*v);
    }
  });
  return out;
}

std::vector<std::string> GroupNames(const BiasScheme& scheme) {
  std::vector<std::string> names = scheme.labels();
  names.push_back("All");
  return names;
}

}  // namespace

ConcentrationSection RunConcentration(const InteractionTable& table, KindId kind,
                                      const ExperimentConfig& config) {
  ConcentrationSection section;
  section.kind = table.kind_name(kind);
  section.real = ActivityConcentration(table, kind, config.activity_bins);
  const InteractionTable randomized = StrongRandomize(table, kind, config.randomization.seed);
  section.randomized = ActivityConcentration(randomized, kind, section.real.edges);
  section.randomized.single_activity_level = section.real.single_activity_level;
  for (const auto& bin : section.real.bins) section.users += bin.users;
  return section;
}

BiasEntropySection RunBiasEntropy(const InteractionTable& table, KindId kind,
                                  const ExperimentConfig& config) {
  const std::size_t k = table.scheme().size();
  const std::uint64_t min_activity = config.MinActivity();
  BiasEntropySection section;
  section.kind = table.kind_name(kind);
  section.reference_lines = EvenSplitReferenceLines(k);

  const auto real = Summarize(table, kind, config.threads, false);
  const InteractionTable randomized = StrongRandomize(table, kind, config.randomization.seed);
  const auto random = Summarize(randomized, kind, config.threads, false);

  const auto names = GroupNames(table.scheme());
  std::vector<EntropyGroup> groups(k + 1);
  for (std::size_t g = 0; g <= k; ++g) groups[g].name = names[g];

  ExclusionTally& tally = section.real_tally;
  for (std::size_t u = 0; u < real.size(); ++u) {
    if (real[u].total == 0) continue;
    ++tally.users_with_activity;
    if (real[u].total < min_activity) {
      ++tally.below_threshold;
      continue;
    }
    ++tally.eligible;
    if (real[u].leaning) {
      groups[*real[u].leaning].real.push_back(real[u].bias_entropy_norm);
    } else {
      ++tally.unresolved_leaning;
    }
    groups[k].real.push_back(real[u].bias_entropy_norm);

    // Strong randomization keeps user totals, so eligibility carries over.
    if (random[u].leaning) {
      groups[*random[u].leaning].randomized.push_back(random[u].bias_entropy_norm);
    } else {
      ++section.randomized_unresolved;
    }
    groups[k].randomized.push_back(random[u].bias_entropy_norm);
  }
  if (tally.eligible == 0) {
    throw DataError("bias entropy: no users of kind '" + section.kind + "' pass the threshold");
  }
  for (auto& g : groups) {
    if (g.real.empty()) {
      section.warnings.push_back("leaning group '" + g.name +
                                 "' has no eligible users and is omitted");
      continue;
    }
    section.groups.push_back(std::move(g));
  }
  return section;
}

XStatisticSection RunXStatistic(const InteractionTable& table, KindId kind,
                                const ExperimentConfig& config) {
  const std::uint64_t min_activity = config.MinActivity();
  XStatisticSection section;
  section.kind = table.kind_name(kind);
  const auto users = Summarize(table, kind, config.threads, true);
  std::vector<double> xs;
  for (const auto& s : users) {
    if (s.total == 0) continue;
    ++section.tally.users_with_activity;
    if (s.total < min_activity) {
      ++section.tally.below_threshold;
    } else if (!s.x) {
      ++section.tally.degenerate;
    } else {
      ++section.tally.eligible;
      xs.push_back(*s.x);
    }
  }
  section.users = xs.size();
  if (xs.empty()) {
    section.explanation =
        section.tally.users_with_activity == 0
            ? "no users with interactions of this kind"
            : "every threshold-passing user has degenerate bounds (at most one interaction or "
              "one reachable page per leaning)";
  } else {
    section.quartiles = Quartiles(std::move(xs));
  }
  return section;
}

WeakBenchmarkSection RunWeakBenchmark(const InteractionTable& table, KindId kind,
                                      const ExperimentConfig& config) {
  const std::size_t k = table.scheme().size();
  WeakBenchmarkSection section;
  section.kind = table.kind_name(kind);

  RandomizationSpec spec = config.randomization;
  spec.mode = RandomizationSpec::Mode::kWeak;
  MonteCarloOptions options;
  options.min_activity = config.MinActivity();
  options.multi_page_only = config.multi_page_only;
  options.threads = config.threads;
  const BenchmarkDistribution dist = MonteCarloWeak(table, kind, spec, options);

  section.sample_size = dist.sample.size();
  section.replicates = dist.replicates;
  section.tally.users_with_activity = dist.users_with_activity;
  section.tally.below_threshold = dist.below_threshold;
  section.tally.single_page = dist.single_page;
  section.tally.eligible = dist.eligible;
  section.tally.unresolved_leaning = static_cast<std::uint64_t>(
      std::count(dist.real_leaning.begin(), dist.real_leaning.end(), std::nullopt));

  const auto names = GroupNames(table.scheme());
  for (std::size_t g = 0; g <= k; ++g) {
    const GroupBenchmark& src = dist.groups[g];
    WeakGroup group;
    group.name = names[g];
    group.real = src.real;
    group.benchmark = src.Pooled();
    if (!group.benchmark.empty()) {
      std::vector<double> grid = group.benchmark;
      std::sort(grid.begin(), grid.end());
      grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
      if (config.estimator == BenchmarkEstimator::kPooled) {
        group.benchmark_ecdf = Ecdf(group.benchmark).Steps();
      } else {
        const auto mean = AverageEcdf(src.per_replicate, grid);
        for (std::size_t i = 0; i < grid.size(); ++i) group.benchmark_ecdf.emplace_back(grid[i], mean[i]);
      }
    }
    if (!group.real.empty() && !group.benchmark.empty()) {
      group.kl = KlDivergence(group.real, group.benchmark, config.kl);
    }
    group.low_power = group.real.size() < config.low_power_users;
    if (group.low_power) {
      section.warnings.push_back("group '" + group.name + "' has " +
                                 std::to_string(group.real.size()) +
                                 " sampled users (low power)");
    }
    section.groups.push_back(std::move(group));
  }
  return section;
}

ExperimentReport RunExperiment(const InteractionTable& table, const ExperimentConfig& config,
                               unsigned sections) {
  ExperimentReport report;
  report.config = config;
  report.labels = table.scheme().labels();
  report.num_users = table.num_users();
  report.num_pages = table.num_pages();

  std::vector<std::string> kinds = config.kinds;
  if (kinds.empty()) {
    for (KindId k = 0; k < table.num_kinds(); ++k) {
      if (table.edges(k).num_edges() > 0) kinds.push_back(table.kind_name(k));
    }
    if (kinds.empty()) throw DataError("the table holds no interactions");
  }
  for (const auto& name : kinds) {
    if (!KindRegistry{}.Contains(name)) throw ConfigError("unknown interaction kind '" + name + "'");
    const auto found = table.FindKind(name);
    if (!found) throw DataError("no interactions of kind '" + name + "'");
    const KindId kind = *found;
    if (table.edges(kind).num_edges() == 0) {
      throw DataError("no interactions of kind '" + name + "'");
    }
    KindReport kr;
    kr.kind = name;
    if (sections & static_cast<unsigned>(Section::kConcentration)) {
      kr.concentration = RunConcentration(table, kind, config);
    }
    if (sections & static_cast<unsigned>(Section::kBiasEntropy)) {
      kr.bias_entropy = RunBiasEntropy(table, kind, config);
    }
    if (sections & static_cast<unsigned>(Section::kXStatistic)) {
      kr.x_statistic = RunXStatistic(table, kind, config);
    }
    if (sections & static_cast<unsigned>(Section::kWeakBenchmark)) {
      kr.weak_benchmark = RunWeakBenchmark(table, kind, config);
    }
    report.kinds.push_back(std::move(kr));
  }
  return report;
}

}  // namespace selex
