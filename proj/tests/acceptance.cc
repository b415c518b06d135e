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

// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails.
//
//   acceptance [--workdir DIR] [--only N[,N...]]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oracles.h"
#include "selex/entropy.h"
#include "selex/nullmodel.h"
#include "selex/pipeline.h"
#include "selex/stats.h"
#include "selex/synthgen.h"

namespace fs = std::filesystem;
using namespace selex;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double Seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string Format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

CohortSpec Cohort(double affinity, double loyalty, std::uint64_t seed = 1) {
  CohortSpec spec;
  spec.users = 10000;
  spec.pages_per_label = std::vector<std::uint32_t>(5, 20);
  spec.bias_affinity = affinity;
  spec.page_loyalty = loyalty;
  spec.seed = seed;
  return spec;
}

// 1. H_page = H_bias + sum_i p_i H_i on random user vectors.
Outcome DecompositionIdentity() {
  Stopwatch clock;
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int t = 0; t < 100000; ++t) {
    const auto v = testing::RandomUserVector(rng, 1 + rng() % 8, 12, 1 + rng() % 1000);
    const double direct = PageEntropy(v);
    worst = std::max(worst, std::abs(direct - Decompose(v).Recombined()));
  }
  const double secs = clock.Seconds();
  return {worst < 1e-12 && secs < 10.0,
          Format("max |H_page - recombined| = %.2e nats over 1e5 vectors (limit 1e-12); %.2f s "
                 "(limit 10 s)",
                 worst, secs)};
}

// Per-class assignments of n interactions over c pages, each reduced to
// sum c ln c; page entropy of a combination is ln N - (sum of S) / N.
std::vector<double> AssignmentSums(std::uint64_t n, std::uint32_t c) {
  std::vector<double> out;
  testing::ForEachAssignment(n, c, [&](const std::vector<std::uint64_t>& parts) {
    long double s = 0;
    for (auto x : parts) {
      if (x) s += x * std::log(static_cast<long double>(x));
    }
    out.push_back(static_cast<double>(s));
  });
  return out;
}

UserVector PatternVector(const std::vector<std::pair<std::uint64_t, std::uint32_t>>& pattern) {
  std::vector<std::vector<PageCount>> groups(pattern.size());
  std::vector<std::uint32_t> catalog(pattern.size());
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    groups[i].push_back({static_cast<PageId>(i), pattern[i].first});
    catalog[i] = pattern[i].second;
  }
  return UserVector::FromGroups(std::move(groups), std::move(catalog));
}

// 2. Exhaustive bounds on small patterns, then m <= H <= M on random vectors.
Outcome Bounds() {
  Stopwatch clock;
  constexpr std::uint64_t kMaxN = 12;
  constexpr std::uint32_t kMaxC = 4;
  std::vector<std::vector<std::vector<double>>> sums(kMaxN + 1,
                                                     std::vector<std::vector<double>>(kMaxC + 1));
  for (std::uint64_t n = 1; n <= kMaxN; ++n) {
    for (std::uint32_t c = 1; c <= kMaxC; ++c) sums[n][c] = AssignmentSums(n, c);
  }
  double worst = 0.0;
  std::uint64_t patterns = 0;
  auto check = [&](const std::vector<std::pair<std::uint64_t, std::uint32_t>>& pattern) {
    std::uint64_t total = 0;
    for (auto [n, c] : pattern) total += n;
    const long double log_n = std::log(static_cast<long double>(total));
    // Extremes over the joint assignment, enumerated class by class.
    long double lo = 1e300, hi = -1e300;
    std::function<void(std::size_t, long double)> rec = [&](std::size_t i, long double s) {
      if (i == pattern.size()) {
        const long double h = log_n - s / total;
        lo = std::min(lo, h);
        hi = std::max(hi, h);
        return;
      }
      for (double x : sums[pattern[i].first][pattern[i].second]) rec(i + 1, s + x);
    };
    rec(0, 0.0L);
    const auto v = PatternVector(pattern);
    worst = std::max({worst, std::abs(MinPageEntropy(v) - static_cast<double>(lo)),
                      std::abs(MaxPageEntropy(v) - static_cast<double>(hi))});
    ++patterns;
  };
  for (std::uint64_t n1 = 1; n1 <= kMaxN; ++n1) {
    for (std::uint32_t c1 = 1; c1 <= kMaxC; ++c1) {
      check({{n1, c1}});
      for (std::uint64_t n2 = 1; n2 <= kMaxN; ++n2) {
        for (std::uint32_t c2 = 1; c2 <= kMaxC; ++c2) check({{n1, c1}, {n2, c2}});
      }
    }
  }
  for (std::uint64_t n1 = 1; n1 <= 6; ++n1) {
    for (std::uint32_t c1 = 1; c1 <= kMaxC; ++c1) {
      for (std::uint64_t n2 = 1; n2 <= 6; ++n2) {
        for (std::uint32_t c2 = 1; c2 <= kMaxC; ++c2) {
          for (std::uint64_t n3 = 1; n3 <= 6; ++n3) {
            for (std::uint32_t c3 = 1; c3 <= kMaxC; ++c3) check({{n1, c1}, {n2, c2}, {n3, c3}});
          }
        }
      }
    }
  }

  std::mt19937_64 rng(202);
  double violation = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const auto v = testing::RandomUserVector(rng, 5, 40, 500, 30);
    const double h = PageEntropy(v);
    const auto b = ComputeBounds(v);
    violation = std::max({violation, b.min - h, h - b.max});
  }
  const double secs = clock.Seconds();
  return {worst < 1e-12 && violation <= 1e-9 && secs < 60.0,
          Format("%llu exhaustive patterns (1-2 classes n<=12, 3 classes n<=6; c<=4): max |bound - "
                 "brute force| = %.2e; 1e4 random vectors: worst violation %.2e (limit 1e-9); "
                 "%.1f s (limit 60 s)",
                 static_cast<unsigned long long>(patterns), worst, std::max(violation, 0.0), secs)};
}

InteractionTable RandomTable(std::mt19937_64& rng) {
  const int users = 1 + static_cast<int>(rng() % 60);
  const int pages = 1 + static_cast<int>(rng() % 40);
  const int rows = 1 + static_cast<int>(rng() % 400);
  InteractionTable::Builder b;
  for (int p = 0; p < pages; ++p) b.AddPage("p" + std::to_string(p), static_cast<BiasIndex>(rng() % 5));
  for (int i = 0; i < rows; ++i) {
    b.AddInteraction("u" + std::to_string(rng() % users), "p" + std::to_string(rng() % pages),
                     rng() % 3 ? "like" : "comment", 1 + rng() % 6);
  }
  return std::move(b).Build();
}

// 3. Marginals of both null models on random tables.
Outcome NullMarginals() {
  std::mt19937_64 rng(303);
  int strong_bad = 0, weak_edges_bad = 0, weak_hist_bad = 0, entropy_bad = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto table = RandomTable(rng);
    for (KindId k = 0; k < table.num_kinds(); ++k) {
      const auto s = StrongRandomize(table, k, rng());
      strong_bad += s.UserTotals(k) != table.UserTotals(k) || s.PageTotals(k) != table.PageTotals(k);
    }
    const auto w = WeakRandomize(table, rng());
    weak_edges_bad += w.Edges() != table.Edges();
    weak_hist_bad += w.PagesPerLabel() != table.PagesPerLabel();
    for (KindId k = 0; k < table.num_kinds(); ++k) {
      for (UserId u = 0; u < table.num_users(); ++u) {
        const auto a = MakeUserVector(table, u, k);
        if (!a) continue;
        const double before = PageEntropy(*a);
        const double after = PageEntropy(*MakeUserVector(w, u, k));
        entropy_bad += std::memcmp(&before, &after, sizeof(double)) != 0;
      }
    }
  }
  return {strong_bad + weak_edges_bad + weak_hist_bad + entropy_bad == 0,
          Format("1000 random tables: strong degree mismatches %d, weak edge mismatches %d, label "
                 "histogram mismatches %d, page entropy bit differences %d",
                 strong_bad, weak_edges_bad, weak_hist_bad, entropy_bad)};
}

std::vector<double> NormalizedEntropies(const InteractionTable& t, KindId kind) {
  std::vector<double> out;
  for (UserId u = 0; u < t.num_users(); ++u) {
    if (auto v = MakeUserVector(t, u, kind)) out.push_back(ComputeBiasEntropy(*v).normalized);
  }
  return out;
}

// 4. Weak randomization adds nothing once the table is strongly randomized.
Outcome StrongImpliesWeak() {
  bool pass = true;
  std::string detail = "KS p-values (must exceed 0.01):";
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto table = Generate(Cohort(0.9, 3.0, seed));
    const auto strong = StrongRandomize(table, 0, seed);
    const auto both = WeakRandomize(strong, seed);
    const auto ks = KsTwoSample(NormalizedEntropies(strong, 0), NormalizedEntropies(both, 0));
    pass = pass && ks.p_value > 0.01;
    detail += Format(" seed %llu p=%.3f (D=%.4f)", static_cast<unsigned long long>(seed),
                     ks.p_value, ks.statistic);
  }
  return {pass, detail + "; 1e4 users, affinity 0.9, loyalty 3"};
}

ExperimentConfig AcceptanceConfig(const CohortSpec& spec) {
  ExperimentConfig config;
  config.synth = spec;
  config.randomization.replicates = 100;
  config.randomization.sample_fraction = 1.0;
  config.randomization.seed = 1;
  return config;
}

std::string KlList(const WeakBenchmarkSection& s, double* lo, double* hi) {
  std::string out;
  *lo = 1e300;
  *hi = -1e300;
  for (const auto& g : s.groups) {
    const double kl = g.kl.value_or(std::nan(""));
    *lo = std::min(*lo, kl);
    *hi = std::max(*hi, kl);
    out += Format(" %s=%.3f", g.name.c_str(), kl);
  }
  return out;
}

// 5. Weak-benchmark KL separates planted bias from pure page loyalty.
Outcome PlantedRecovery() {
  Stopwatch clock;
  struct Case {
    const char* name;
    double affinity, loyalty;
    bool expect_large;
  };
  const Case cases[] = {{"planted (affinity 0.9, loyalty 1)", 0.9, 1.0, true},
                        {"null (affinity 1/K, loyalty 1)", 0.2, 1.0, false},
                        {"page loyalty 20 (affinity 1/K)", 0.2, 20.0, false},
                        {"page loyalty 100 (affinity 1/K)", 0.2, 100.0, false}};
  bool pass = true;
  std::string detail;
  for (const auto& c : cases) {
    const auto config = AcceptanceConfig(Cohort(c.affinity, c.loyalty));
    const auto table = LoadTable(config);
    const auto s = RunWeakBenchmark(table, 0, config);
    double lo, hi;
    const std::string list = KlList(s, &lo, &hi);
    const bool ok = c.expect_large ? lo >= 0.3 : hi <= 0.05;
    pass = pass && ok;
    detail += Format("%s%s: KL%s (%s)", detail.empty() ? "" : "; ", c.name, list.c_str(),
                     c.expect_large ? "each >= 0.3" : "each <= 0.05");
  }
  const double secs = clock.Seconds();
  pass = pass && secs < 300.0;
  return {pass, detail + Format("; 1e4 users, 100 replicates, sample fraction 1; %.1f s (limit 300 s)",
                                secs)};
}

// 6. Real users spread over fewer pages than strongly randomized ones.
Outcome ConcentrationShape() {
  const auto config = AcceptanceConfig(Cohort(0.9, 1.0));
  const auto table = LoadTable(config);
  const auto s = RunConcentration(table, 0, config);
  int populated = 0, below = 0;
  double worst_gap = 1e300;
  for (std::size_t b = 0; b < s.real.bins.size(); ++b) {
    if (!s.real.bins[b].populated()) continue;
    ++populated;
    const double gap = s.randomized.bins[b].mean_pages - s.real.bins[b].mean_pages;
    below += gap > 0;
    worst_gap = std::min(worst_gap, gap);
  }
  return {populated > 0 && below == populated,
          Format("planted cohort: real below randomized in %d of %d populated bins (smallest gap "
                 "%.3f pages)",
                 below, populated, worst_gap)};
}

// 7. High page loyalty gives median x = 0 and a small upper quartile.
Outcome XShape() {
  const auto config = AcceptanceConfig(Cohort(0.2, 100.0));
  const auto table = LoadTable(config);
  const auto s = RunXStatistic(table, 0, config);
  if (!s.quartiles) return {false, "no non-degenerate users"};
  const auto& q = *s.quartiles;
  const auto lower = AcceptanceConfig(Cohort(0.2, 20.0));
  const auto q20 = RunXStatistic(LoadTable(lower), 0, lower).quartiles;
  return {q.median == 0.0 && q.q3 <= 0.25,
          Format("loyalty 100, affinity 1/K, %llu users: quartiles %.3f / %.3f / %.3f / %.3f / %.3f "
                 "(need median 0, q3 <= 0.25); for reference loyalty 20 gives median %.3f, q3 %.3f",
                 static_cast<unsigned long long>(s.users), q.min, q.q1, q.median, q.q3, q.max,
                 q20 ? q20->median : std::nan(""), q20 ? q20->q3 : std::nan(""))};
}

std::string ReadFile(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// Concatenated bytes of every file under dir, in path order.
std::string TreeBytes(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), dir));
  }
  std::sort(files.begin(), files.end());
  std::string out;
  for (const auto& f : files) out += f.string() + '\n' + ReadFile(dir / f);
  return out;
}

// 8. Reruns and thread counts never change report bytes.
Outcome Determinism(const fs::path& work) {
  auto spec = Cohort(0.7, 5.0, 11);
  spec.users = 3000;
  const fs::path cohort = work / "determinism_cohort";
  WriteCohort(Generate(spec), cohort);

  std::vector<std::string> trees;
  int runs = 0;
  for (unsigned threads : {1u, 1u, 3u, 8u}) {
    ExperimentConfig config;
    config.interactions_path = cohort / "interactions.csv";
    config.pages_path = cohort / "pages.csv";
    config.ingest.scheme_path = cohort / "scheme.txt";
    config.randomization.replicates = 20;
    config.randomization.sample_fraction = 0.5;
    config.randomization.seed = 5;
    config.threads = threads;
    config.write_csv = true;
    config.out_dir = work / ("determinism_run" + std::to_string(runs++));
    fs::remove_all(config.out_dir);
    IngestDiagnostics diagnostics;
    const auto table = LoadTable(config, &diagnostics);
    auto report = RunExperiment(table, config, static_cast<unsigned>(Section::kAll));
    report.ingest = diagnostics;
    WriteReport(report);
    trees.push_back(TreeBytes(config.out_dir));
  }
  int identical = 0;
  for (const auto& t : trees) identical += t == trees.front();
  return {identical == static_cast<int>(trees.size()) && !trees.front().empty(),
          Format("%d of %zu output trees byte-identical (threads 1, 1, 3, 8; %zu bytes each)",
                 identical, trees.size(), trees.front().size())};
}

// 9. Ingest plus the bias-entropy pass over >= 1e7 edges.
Outcome Throughput(const fs::path& work) {
  CohortSpec spec;
  spec.users = 600000;
  spec.pages_per_label = std::vector<std::uint32_t>(5, 2000);
  spec.bias_affinity = 0.5;
  spec.seed = 9;
  const fs::path dir = work / "throughput_cohort";
  std::uint64_t generated_edges = 0;
  {
    const auto table = Generate(spec);
    generated_edges = table.num_edges();
    WriteCohort(table, dir);
  }

  Stopwatch clock;
  IngestOptions options;
  options.scheme_path = dir / "scheme.txt";
  auto ingested = Ingest(dir / "interactions.csv", dir / "pages.csv", options);
  const double ingest_secs = clock.Seconds();
  ExperimentConfig config;
  config.interactions_path = dir / "interactions.csv";
  config.pages_path = dir / "pages.csv";
  const auto section = RunBiasEntropy(ingested.table, ingested.table.RequireKind("like"), config);
  const double secs = clock.Seconds();
  const std::uint64_t edges = ingested.table.num_edges();
  fs::remove_all(dir);
  return {edges >= 10000000 && edges == generated_edges && secs < 120.0,
          Format("%llu edges, %llu eligible users: ingest %.1f s + bias entropy (real and strong "
                 "null) %.1f s = %.1f s (limit 120 s) on %u hardware thread(s)",
                 static_cast<unsigned long long>(edges),
                 static_cast<unsigned long long>(section.real_tally.eligible), ingest_secs,
                 secs - ingest_secs, secs, std::max(1u, std::thread::hardware_concurrency()))};
}

}  // namespace

int main(int argc, char** argv) {
  fs::path work = fs::temp_directory_path() / "selex_acceptance";
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--workdir" && i + 1 < argc) {
      work = argv[++i];
    } else if (arg == "--only" && i + 1 < argc) {
      std::stringstream list(argv[++i]);
      std::string item;
      while (std::getline(list, item, ',')) only.push_back(std::stoi(item));
    } else {
      std::fprintf(stderr, "usage: acceptance [--workdir DIR] [--only N[,N...]]\n");
      return 2;
    }
  }
  fs::create_directories(work);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"decomposition identity", DecompositionIdentity},
      {"entropy bounds", Bounds},
      {"null-model marginals", NullMarginals},
      {"strong implies weak", StrongImpliesWeak},
      {"planted-signal recovery", PlantedRecovery},
      {"concentration curve shape", ConcentrationShape},
      {"x-statistic quartile shape", XShape},
      {"determinism", [&] { return Determinism(work); }},
      {"throughput", [&] { return Throughput(work); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), number) == only.end()) continue;
    Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    failed += !outcome.pass;
    std::printf("%s  %d. %s: %s\n", outcome.pass ? "PASS" : "FAIL", number, criteria[i].first,
                outcome.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
