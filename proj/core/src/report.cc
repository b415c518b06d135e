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

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "selex/pipeline.h"

namespace selex {
namespace {

using Json = nlohmann::ordered_json;

// A named columnar table: {"columns": [...], "rows": [[...], ...]}.
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Json>> rows;

  Json ToJson() const {
    Json t;
    t["columns"] = columns;
    Json rows_json = Json::array();
    for (const auto& r : rows) rows_json.push_back(r);
    t["rows"] = std::move(rows_json);
    return t;
  }
};

Json Number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

const char* EstimatorName(BenchmarkEstimator e) {
  return e == BenchmarkEstimator::kPooled ? "pooled" : "replicate-average";
}

Json ConfigJson(const ExperimentConfig& c) {
  Json j;
  if (c.synth) {
    const CohortSpec& s = *c.synth;
    Json synth;
    synth["users"] = s.users;
    synth["pages_per_label"] = s.pages_per_label;
    synth["activity_min"] = s.activity.min;
    synth["activity_max"] = s.activity.max;
    synth["activity_exponent"] = s.activity.exponent;
    synth["bias_affinity"] = s.bias_affinity;
    synth["page_loyalty"] = std::isinf(s.page_loyalty) ? Json("inf") : Json(s.page_loyalty);
    synth["seed"] = s.seed;
    synth["kind"] = s.kind;
    j["input"] = {{"synthetic", std::move(synth)}};
  } else {
    j["input"] = {{"interactions", c.interactions_path ? c.interactions_path->string() : ""},
                  {"pages", c.pages_path ? c.pages_path->string() : ""},
                  {"scheme", c.ingest.scheme_path ? c.ingest.scheme_path->string() : "default"},
                  {"separator", std::string(1, c.ingest.separator)},
                  {"skip_unknown_pages", c.ingest.skip_unknown_pages},
                  {"skip_malformed", c.ingest.skip_malformed}};
  }
  j["kinds"] = c.kinds;
  j["threshold"] = c.threshold;
  j["strict_threshold"] = c.strict_threshold;
  j["activity_rule"] = (c.strict_threshold ? "n > " : "n >= ") + std::to_string(c.threshold);
  j["multi_page_only"] = c.multi_page_only;
  j["seed"] = c.randomization.seed;
  j["seed_derivation"] =
      "strong: splitmix(seed, 'STRONG', kind id); weak replicate r: splitmix(seed, 'REPL', r); "
      "cohort sample: splitmix(seed, 'SAMPLE')";
  j["replicates"] = c.randomization.replicates;
  j["sample_fraction"] = c.randomization.sample_fraction;
  j["benchmark_estimator"] = EstimatorName(c.estimator);
  j["kl_bins"] = c.kl.bins;
  j["kl_pseudocount"] = c.kl.pseudocount;
  j["kl_binning"] = "equal-width on [0,1], pseudocount added to every bin";
  j["activity_bins"] = c.activity_bins;
  j["activity_binning"] = "geometric over observed [min, max] total interactions";
  j["quantile_rule"] = "type-7 linear interpolation";
  j["low_power_users"] = c.low_power_users;
  j["entropy_unit"] = "nats; normalized values divide by ln K";
  return j;
}

Json TallyJson(const ExclusionTally& t) {
  return Json{{"users_with_activity", t.users_with_activity},
              {"eligible", t.eligible},
              {"below_threshold", t.below_threshold},
              {"single_page", t.single_page},
              {"degenerate_bounds", t.degenerate},
              {"unresolved_leaning", t.unresolved_leaning}};
}

Table CurveTable(const ConcentrationSection& s) {
  Table t{"activity_curve",
          {"bin", "lower", "upper", "real_users", "real_mean_pages", "randomized_users",
           "randomized_mean_pages"},
          {}};
  for (std::size_t b = 0; b < s.real.bins.size(); ++b) {
    const auto& r = s.real.bins[b];
    const auto& q = s.randomized.bins[b];
    t.rows.push_back({b, r.lower, r.upper, r.users,
                      r.populated() ? Json(r.mean_pages) : Json(nullptr), q.users,
                      q.populated() ? Json(q.mean_pages) : Json(nullptr)});
  }
  return t;
}

Table EcdfTable(const std::string& name, const std::vector<std::pair<double, double>>& steps) {
  Table t{name, {"value", "cdf"}, {}};
  for (const auto& [x, f] : steps) t.rows.push_back({Number(x), Number(f)});
  return t;
}

std::vector<std::pair<double, double>> Steps(const std::vector<double>& values) {
  if (values.empty()) return {};
  return Ecdf(values).Steps();
}

std::string Slug(std::string s) {
  for (auto& ch : s) {
    if (ch == ' ' || ch == '-' || ch == '/') ch = '_';
    ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  return s;
}

// Builds every section's JSON and collects its tables for CSV export.
struct Renderer {
  std::vector<std::pair<std::string, Table>> tables;

  Json Section(const std::string& prefix, Json meta, std::vector<Table> section_tables) {
    Json tables_json;
    for (auto& t : section_tables) {
      tables_json[t.name] = t.ToJson();
      tables.emplace_back(prefix + "_" + t.name, std::move(t));
    }
    meta["tables"] = std::move(tables_json);
    return meta;
  }

  Json Concentration(const std::string& kind, const ConcentrationSection& s) {
    Json meta;
    meta["users"] = s.users;
    meta["single_activity_level"] = s.real.single_activity_level;
    meta["randomization"] = "strong";
    return Section(kind + "_concentration", std::move(meta), {CurveTable(s)});
  }

  Json BiasEntropy(const std::string& kind, const BiasEntropySection& s) {
    Json meta;
    meta["reference_lines"] = s.reference_lines;
    meta["exclusions"] = TallyJson(s.real_tally);
    meta["randomized_unresolved_leaning"] = s.randomized_unresolved;
    meta["warnings"] = s.warnings;
    Table summary{"group_summary",
                  {"group", "real_users", "real_mean", "real_share_zero", "randomized_users",
                   "randomized_mean"},
                  {}};
    std::vector<Table> out;
    for (const auto& g : s.groups) {
      auto mean = [](const std::vector<double>& v) {
        if (v.empty()) return Json(nullptr);
        double sum = 0.0;
        for (double x : v) sum += x;
        return Json(sum / static_cast<double>(v.size()));
      };
      const auto zeros = std::count(g.real.begin(), g.real.end(), 0.0);
      summary.rows.push_back({g.name, g.real.size(), mean(g.real),
                              static_cast<double>(zeros) / static_cast<double>(g.real.size()),
                              g.randomized.size(), mean(g.randomized)});
    }
    out.push_back(std::move(summary));
    for (const auto& g : s.groups) {
      out.push_back(EcdfTable("ecdf_real_" + Slug(g.name), Steps(g.real)));
      out.push_back(EcdfTable("ecdf_randomized_" + Slug(g.name), Steps(g.randomized)));
    }
    return Section(kind + "_bias_entropy", std::move(meta), std::move(out));
  }

  Json XStatistic(const std::string& kind, const XStatisticSection& s) {
    Json meta;
    meta["users"] = s.users;
    meta["exclusions"] = TallyJson(s.tally);
    if (!s.explanation.empty()) meta["explanation"] = s.explanation;
    Table t{"quartiles", {"kind", "min", "q1", "median", "q3", "max"}, {}};
    if (s.quartiles) {
      const auto& q = *s.quartiles;
      t.rows.push_back({s.kind, q.min, q.q1, q.median, q.q3, q.max});
    }
    return Section(kind + "_x_statistic", std::move(meta), {std::move(t)});
  }

  Json WeakBenchmark(const std::string& kind, const WeakBenchmarkSection& s) {
    Json meta;
    meta["sample_size"] = s.sample_size;
    meta["replicates"] = s.replicates;
    meta["exclusions"] = TallyJson(s.tally);
    meta["warnings"] = s.warnings;
    Table kl{"kl_divergence", {"group", "real_users", "benchmark_values", "kl", "low_power"}, {}};
    std::vector<Table> out;
    for (const auto& g : s.groups) {
      kl.rows.push_back({g.name, g.real.size(), g.benchmark.size(),
                         g.kl ? Json(*g.kl) : Json(nullptr), g.low_power});
    }
    out.push_back(std::move(kl));
    for (const auto& g : s.groups) {
      out.push_back(EcdfTable("ecdf_real_" + Slug(g.name), Steps(g.real)));
      out.push_back(EcdfTable("ecdf_benchmark_" + Slug(g.name), g.benchmark_ecdf));
    }
    return Section(kind + "_weak_benchmark", std::move(meta), std::move(out));
  }
};

std::string Csv(const Table& t) {
  std::ostringstream out;
  for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << t.columns[c];
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      if (row[c].is_null()) continue;
      if (row[c].is_string()) {
        out << row[c].get<std::string>();
      } else {
        out << row[c].dump();
      }
    }
    out << '\n';
  }
  return out.str();
}

Json BuildReport(const ExperimentReport& report, Renderer& r) {
  Json doc;
  doc["format"] = "selex-report";
  doc["format_version"] = kReportFormatVersion;
  doc["config"] = ConfigJson(report.config);
  doc["labels"] = report.labels;
  doc["num_users"] = report.num_users;
  doc["num_pages"] = report.num_pages;
  if (report.ingest) {
    const auto& d = *report.ingest;
    doc["ingest"] = {{"page_rows", d.page_rows},
                     {"interaction_rows", d.interaction_rows},
                     {"merged_edges", d.merged_edges},
                     {"skipped_unknown_page", d.skipped_unknown_page},
                     {"skipped_malformed", d.skipped_malformed},
                     {"messages", d.messages}};
  }
  Json sections;
  for (const auto& kr : report.kinds) {
    Json kind_json;
    const std::string prefix = Slug(kr.kind);
    if (kr.concentration) kind_json["concentration"] = r.Concentration(prefix, *kr.concentration);
    if (kr.bias_entropy) kind_json["bias_entropy"] = r.BiasEntropy(prefix, *kr.bias_entropy);
    if (kr.x_statistic) kind_json["x_statistic"] = r.XStatistic(prefix, *kr.x_statistic);
    if (kr.weak_benchmark) kind_json["weak_benchmark"] = r.WeakBenchmark(prefix, *kr.weak_benchmark);
    sections[kr.kind] = std::move(kind_json);
  }
  doc["sections"] = std::move(sections);
  return doc;
}

}  // namespace

std::string RenderReport(const ExperimentReport& report) {
  Renderer r;
  return BuildReport(report, r).dump(1) + "\n";
}

std::map<std::string, std::string> RenderCsvTables(const ExperimentReport& report) {
  Renderer r;
  BuildReport(report, r);
  std::map<std::string, std::string> files;
  for (const auto& [name, table] : r.tables) files[name + ".csv"] = Csv(table);
  return files;
}

std::filesystem::path WriteReport(const ExperimentReport& report) {
  const auto& dir = report.config.out_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
  const auto path = dir / "report.json";
  {
    std::ofstream out(path, std::ios::binary);
    const std::string text = RenderReport(report);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw DataError("cannot write " + path.string());
  }
  if (report.config.write_csv) {
    std::filesystem::create_directories(dir / "csv", ec);
    if (ec) throw DataError("cannot create " + (dir / "csv").string());
    for (const auto& [name, text] : RenderCsvTables(report)) {
      std::ofstream out(dir / "csv" / name, std::ios::binary);
      out.write(text.data(), static_cast<std::streamsize>(text.size()));
      if (!out) throw DataError("cannot write " + (dir / "csv" / name).string());
    }
  }
  return path;
}

}  // namespace selex
