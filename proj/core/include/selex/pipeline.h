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
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "selex/entropy.h"
#include "selex/model.h"
#include "selex/nullmodel.h"
#include "selex/stats.h"
#include "selex/synthgen.h"

namespace selex {

inline constexpr int kReportFormatVersion = 1;

struct ExperimentConfig {
  // Either file inputs or a synthetic cohort.
  std::optional<std::filesystem::path> interactions_path;
  std::optional<std::filesystem::path> pages_path;
  std::optional<CohortSpec> synth;
  IngestOptions ingest;

  // Kinds to analyse, each independently. Empty: every kind with data.
  std::vector<std::string> kinds;
  std::uint64_t threshold = 5;
  // false: n >= threshold qualifies; true: n > threshold.
  bool strict_threshold = false;
  bool multi_page_only = true;
  RandomizationSpec randomization;
  BenchmarkEstimator estimator = BenchmarkEstimator::kPooled;
  KlOptions kl;
  std::size_t activity_bins = 12;
  // Groups with fewer sampled real users are flagged low-power.
  std::size_t low_power_users = 30;
  unsigned threads = 0;

  std::filesystem::path out_dir = "selex_out";
  bool write_csv = false;

  std::uint64_t MinActivity() const { return strict_threshold ? threshold + 1 : threshold; }
  // Throws ConfigError.
  void Validate() const;
};

// Loads files or generates the synthetic cohort.
InteractionTable LoadTable(const ExperimentConfig& config, IngestDiagnostics* diagnostics = nullptr);

// Every user with >= 1 interaction of the kind lands in exactly one of
// eligible / below_threshold / single_page / degenerate, for the exclusions
// that apply to a section.
struct ExclusionTally {
  std::uint64_t users_with_activity = 0;
  std::uint64_t eligible = 0;
  std::uint64_t below_threshold = 0;
  std::uint64_t single_page = 0;
  std::uint64_t degenerate = 0;
  // Eligible users without a modal leaning; kept in the aggregate group only.
  std::uint64_t unresolved_leaning = 0;

  std::uint64_t Accounted() const {
    return eligible + below_threshold + single_page + degenerate;
  }
};

struct ConcentrationSection {
  std::string kind;
  BinnedCurve real;
  BinnedCurve randomized;
  std::uint64_t users = 0;
};

// Normalized bias entropies of one leaning group. Group index K is the
// aggregate over all eligible users.
struct EntropyGroup {
  std::string name;
  std::vector<double> real;
  std::vector<double> randomized;
};

struct BiasEntropySection {
  std::string kind;
  std::vector<double> reference_lines;
  std::vector<EntropyGroup> groups;
  ExclusionTally real_tally;
  std::uint64_t randomized_unresolved = 0;
  std::vector<std::string> warnings;
};

struct XStatisticSection {
  std::string kind;
  std::optional<FiveNumberSummary> quartiles;
  std::uint64_t users = 0;
  ExclusionTally tally;
  std::string explanation;
};

struct WeakGroup {
  std::string name;
  std::vector<double> real;
  std::vector<double> benchmark;  // pooled over replicates
  // eCDF of the benchmark at the distinct pooled values, per the estimator.
  std::vector<std::pair<double, double>> benchmark_ecdf;
  std::optional<double> kl;
  bool low_power = false;
};

struct WeakBenchmarkSection {
  std::string kind;
  std::vector<WeakGroup> groups;  // K leanings then the aggregate
  std::uint64_t sample_size = 0;
  std::uint32_t replicates = 0;
  ExclusionTally tally;
  std::vector<std::string> warnings;
};

struct KindReport {
  std::string kind;
  std::optional<ConcentrationSection> concentration;
  std::optional<BiasEntropySection> bias_entropy;
  std::optional<XStatisticSection> x_statistic;
  std::optional<WeakBenchmarkSection> weak_benchmark;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<std::string> labels;
  std::optional<IngestDiagnostics> ingest;
  std::uint64_t num_users = 0;
  std::uint64_t num_pages = 0;
  std::vector<KindReport> kinds;
};

ConcentrationSection RunConcentration(const InteractionTable& table, KindId kind,
                                      const ExperimentConfig& config);
BiasEntropySection RunBiasEntropy(const InteractionTable& table, KindId kind,
                                  const ExperimentConfig& config);
XStatisticSection RunXStatistic(const InteractionTable& table, KindId kind,
                                const ExperimentConfig& config);
WeakBenchmarkSection RunWeakBenchmark(const InteractionTable& table, KindId kind,
                                      const ExperimentConfig& config);

enum class Section : unsigned {
  kConcentration = 1,
  kBiasEntropy = 2,
  kXStatistic = 4,
  kWeakBenchmark = 8,
  kAll = 15,
};

// Runs the selected sections for every configured kind.
ExperimentReport RunExperiment(const InteractionTable& table, const ExperimentConfig& config,
                               unsigned sections);

// Versioned JSON document; identical reports render to identical bytes.
std::string RenderReport(const ExperimentReport& report);
// Flat CSV tables keyed by file name.
std::map<std::string, std::string> RenderCsvTables(const ExperimentReport& report);
// Writes report.json (and csv/ when configured) under config.out_dir.
// Returns the report path.
std::filesystem::path WriteReport(const ExperimentReport& report);

}  // namespace selex
