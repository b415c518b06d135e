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

// selex: selective-exposure measurements over labeled user/page interactions.
//
//   selex ingest-check --interactions I.csv --pages P.csv
//   selex synth --out cohort/ --users 10000 --affinity 0.9
//   selex all --interactions I.csv --pages P.csv --kind comment --out report/
//   selex bias-entropy --synth --users 10000 --affinity 0.9 --out report/
//
// Every option may also be set in a key=value file passed with --config;
// command-line flags take precedence. Exit codes: 0 success, 2 configuration
// error, 3 data error.

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "selex/pipeline.h"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

std::vector<std::uint32_t> ParsePagesPerLabel(const std::string& text, std::size_t labels) {
  std::vector<std::uint32_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long v = std::stol(item, &used);
      if (used != item.size() || v <= 0) throw std::invalid_argument(item);
      out.push_back(static_cast<std::uint32_t>(v));
    } catch (const std::exception&) {
      throw selex::ConfigError("bad --pages-per-label entry '" + item + "'");
    }
  }
  if (out.size() == 1) out.assign(labels, out.front());
  return out;
}

double ParseLoyalty(const std::string& text) {
  if (text == "inf" || text == "infinity") return selex::kInfiniteLoyalty;
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw selex::ConfigError("bad --loyalty value '" + text + "'");
  }
}

struct Options {
  std::string interactions;
  std::string pages;
  std::string scheme;
  std::string separator = ",";
  bool skip_unknown_pages = false;
  bool skip_malformed = false;

  bool synth = false;
  std::uint32_t users = 1000;
  std::string pages_per_label = "20";
  std::uint64_t activity_min = 5;
  std::uint64_t activity_max = 200;
  double activity_exponent = 2.0;
  double affinity = 0.2;
  std::string loyalty = "1";
  std::string synth_kind = "like";

  std::vector<std::string> kinds;
  std::uint64_t threshold = 5;
  bool strict_threshold = false;
  bool include_single_page = false;
  std::uint64_t seed = 1;
  std::uint32_t replicates = 100;
  double sample_fraction = 0.02;
  std::size_t bins = 50;
  double pseudocount = 0.5;
  std::size_t activity_bins = 12;
  std::string estimator = "pooled";
  unsigned threads = 0;
  std::string out = "selex_out";
  bool csv = false;
};

selex::ExperimentConfig BuildConfig(const Options& o) {
  selex::ExperimentConfig c;
  if (o.separator.size() != 1) throw selex::ConfigError("--sep must be a single character");
  c.ingest.separator = o.separator.front();
  c.ingest.skip_unknown_pages = o.skip_unknown_pages;
  c.ingest.skip_malformed = o.skip_malformed;
  if (!o.scheme.empty()) c.ingest.scheme_path = o.scheme;
  if (o.synth) {
    selex::CohortSpec s;
    if (c.ingest.scheme_path) s.scheme = selex::BiasScheme::FromFile(*c.ingest.scheme_path);
    s.users = o.users;
    s.pages_per_label = ParsePagesPerLabel(o.pages_per_label, s.scheme.size());
    s.activity = {o.activity_min, o.activity_max, o.activity_exponent};
    s.bias_affinity = o.affinity;
    s.page_loyalty = ParseLoyalty(o.loyalty);
    s.seed = o.seed;
    s.kind = o.synth_kind;
    s.threads = o.threads;
    c.synth = std::move(s);
  } else {
    if (!o.interactions.empty()) c.interactions_path = o.interactions;
    if (!o.pages.empty()) c.pages_path = o.pages;
  }
  c.kinds = o.kinds;
  c.threshold = o.threshold;
  c.strict_threshold = o.strict_threshold;
  c.multi_page_only = !o.include_single_page;
  c.randomization.seed = o.seed;
  c.randomization.replicates = o.replicates;
  c.randomization.sample_fraction = o.sample_fraction;
  c.kl.bins = o.bins;
  c.kl.pseudocount = o.pseudocount;
  c.activity_bins = o.activity_bins;
  if (o.estimator == "pooled") {
    c.estimator = selex::BenchmarkEstimator::kPooled;
  } else if (o.estimator == "replicate-average") {
    c.estimator = selex::BenchmarkEstimator::kReplicateAverage;
  } else {
    throw selex::ConfigError("--benchmark-estimator must be 'pooled' or 'replicate-average'");
  }
  c.threads = o.threads;
  c.out_dir = o.out;
  c.write_csv = o.csv;
  c.Validate();
  return c;
}

void PrintDiagnostics(const selex::InteractionTable& table, const selex::IngestDiagnostics& d) {
  std::cout << "page rows:            " << d.page_rows << '\n'
            << "interaction rows:     " << d.interaction_rows << '\n'
            << "merged edges:         " << d.merged_edges << '\n'
            << "skipped unknown page: " << d.skipped_unknown_page << '\n'
            << "skipped malformed:    " << d.skipped_malformed << '\n'
            << "users:                " << table.num_users() << '\n'
            << "pages:                " << table.num_pages() << '\n';
  const auto per_label = table.PagesPerLabel();
  for (std::size_t b = 0; b < per_label.size(); ++b) {
    std::cout << "  pages labeled " << table.scheme().name(static_cast<selex::BiasIndex>(b))
              << ": " << per_label[b] << '\n';
  }
  for (selex::KindId k = 0; k < table.num_kinds(); ++k) {
    std::cout << "  " << table.kind_name(k) << ": " << table.edges(k).num_edges() << " edges, "
              << table.TotalCount(k) << " interactions\n";
  }
  for (const auto& m : d.messages) std::cout << "  skipped " << m << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Selective-exposure entropy analysis of user/page interactions"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key=value configuration file (flags override it)");

  Options o;
  auto* in = "Input";
  app.add_option("--interactions", o.interactions, "user_id,page_id,kind[,count] file")->group(in);
  app.add_option("--pages", o.pages, "page_id,bias_label file")->group(in);
  app.add_option("--scheme", o.scheme, "ordered bias labels, one per line")->group(in);
  app.add_option("--sep", o.separator, "field separator")->group(in);
  app.add_flag("--skip-unknown-pages", o.skip_unknown_pages,
               "drop rows whose page is missing from the pages file")->group(in);
  app.add_flag("--skip-malformed", o.skip_malformed, "drop malformed rows")->group(in);

  auto* syn = "Synthetic cohort";
  app.add_flag("--synth", o.synth, "analyse a generated cohort instead of files")->group(syn);
  app.add_option("--users", o.users, "number of users")->group(syn);
  app.add_option("--pages-per-label", o.pages_per_label,
                 "pages per label: one number or a comma list")->group(syn);
  app.add_option("--activity-min", o.activity_min, "smallest per-user total")->group(syn);
  app.add_option("--activity-max", o.activity_max, "largest per-user total")->group(syn);
  app.add_option("--activity-exponent", o.activity_exponent, "power-law exponent")->group(syn);
  app.add_option("--affinity", o.affinity, "expected home-label share, in [1/K, 1]")->group(syn);
  app.add_option("--loyalty", o.loyalty, "page loyalty >= 1, or 'inf'")->group(syn);
  app.add_option("--synth-kind", o.synth_kind, "kind name of generated rows")->group(syn);

  auto* an = "Analysis";
  app.add_option("--kind", o.kinds, "interaction kind (repeatable; default: all with data)")
      ->group(an)->delimiter(',');
  app.add_option("--threshold", o.threshold, "minimum interactions per user")->group(an);
  app.add_flag("--strict-threshold", o.strict_threshold,
               "require more than --threshold interactions")->group(an);
  app.add_flag("--include-single-page", o.include_single_page,
               "keep single-page users in the weak benchmark")->group(an);
  app.add_option("--seed", o.seed, "root seed for every stochastic step")->group(an);
  app.add_option("--replicates", o.replicates, "weak randomization replicates")->group(an);
  app.add_option("--sample-fraction", o.sample_fraction, "share of eligible users sampled")
      ->group(an);
  app.add_option("--bins", o.bins, "KL histogram bins on [0,1]")->group(an);
  app.add_option("--pseudocount", o.pseudocount, "KL pseudocount per bin")->group(an);
  app.add_option("--activity-bins", o.activity_bins, "logarithmic activity bins")->group(an);
  app.add_option("--benchmark-estimator", o.estimator, "pooled | replicate-average")->group(an);
  app.add_option("--threads", o.threads, "worker threads (0: hardware)")->group(an);
  app.add_option("--out", o.out, "output directory")->group(an);
  app.add_flag("--csv", o.csv, "also write one CSV per table")->group(an);

  auto* ingest_check = app.add_subcommand("ingest-check", "validate inputs and print counts");
  auto* synth = app.add_subcommand("synth", "write a synthetic cohort to --out");
  auto* concentration = app.add_subcommand("concentration", "activity vs distinct pages");
  auto* bias_entropy = app.add_subcommand("bias-entropy", "bias entropy eCDFs vs strong null");
  auto* x_stat = app.add_subcommand("x-stat", "quartiles of the scaled page entropy");
  auto* weak = app.add_subcommand("weak-benchmark", "weak-randomization Monte Carlo and KL");
  auto* all = app.add_subcommand("all", "every experiment");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (synth->parsed()) {
      o.synth = true;
      auto config = BuildConfig(o);
      const auto table = selex::Generate(*config.synth);
      selex::WriteCohort(table, config.out_dir);
      std::cout << "wrote " << table.num_users() << " users, " << table.num_edges() << " edges to "
                << config.out_dir.string() << '\n';
      return 0;
    }

    auto config = BuildConfig(o);
    selex::IngestDiagnostics diagnostics;
    const auto table = selex::LoadTable(config, &diagnostics);

    if (ingest_check->parsed()) {
      PrintDiagnostics(table, diagnostics);
      return 0;
    }

    unsigned sections = 0;
    if (concentration->parsed()) sections = static_cast<unsigned>(selex::Section::kConcentration);
    if (bias_entropy->parsed()) sections = static_cast<unsigned>(selex::Section::kBiasEntropy);
    if (x_stat->parsed()) sections = static_cast<unsigned>(selex::Section::kXStatistic);
    if (weak->parsed()) sections = static_cast<unsigned>(selex::Section::kWeakBenchmark);
    if (all->parsed()) sections = static_cast<unsigned>(selex::Section::kAll);

    auto report = selex::RunExperiment(table, config, sections);
    if (!config.synth) report.ingest = diagnostics;
    const auto path = selex::WriteReport(report);
    for (const auto& kr : report.kinds) {
      auto warn = [](const std::vector<std::string>& ws) {
        for (const auto& w : ws) std::cerr << "warning: " << w << '\n';
      };
      if (kr.bias_entropy) warn(kr.bias_entropy->warnings);
      if (kr.weak_benchmark) warn(kr.weak_benchmark->warnings);
      if (kr.concentration && kr.concentration->real.single_activity_level) {
        std::cerr << "warning: every " << kr.kind << " user has the same activity\n";
      }
    }
    std::cout << "wrote " << path.string() << '\n';
    return 0;
  } catch (const selex::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const selex::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  }
}
