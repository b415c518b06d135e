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

#include "selex/synthgen.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace selex {
namespace {

std::string PaddedName(char prefix, std::size_t index, std::size_t count) {
  std::string digits = std::to_string(index);
  const std::size_t width = std::to_string(count > 0 ? count - 1 : 0).size();
  std::string name(1, prefix);
  name.append(width - std::min(width, digits.size()), '0');
  name += digits;
  return name;
}

// Index i with probability proportional to the increments of `cdf`.
std::size_t SampleCdf(const std::vector<double>& cdf, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, cdf.back());
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), unit(rng));
  return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

std::vector<double> Cumulative(const std::vector<double>& weights) {
  std::vector<double> cdf(weights.size());
  std::partial_sum(weights.begin(), weights.end(), cdf.begin());
  return cdf;
}

// Symmetric Dirichlet draw with per-component concentration `alpha`
// (infinity: uniform; 0: a single random component).
std::vector<double> DirichletWeights(std::size_t size, double alpha, std::mt19937_64& rng) {
  std::vector<double> w(size, 1.0);
  if (std::isinf(alpha)) return w;
  if (alpha > 0.0) {
    std::gamma_distribution<double> gamma(alpha, 1.0);
    double sum = 0.0;
    for (auto& x : w) {
      x = gamma(rng);
      sum += x;
    }
    if (sum > 0.0 && std::isfinite(sum)) return w;
  }
  // Vanishing concentration, or every draw underflowed.
  std::uniform_int_distribution<std::size_t> pick(0, size - 1);
  std::fill(w.begin(), w.end(), 0.0);
  w[pick(rng)] = 1.0;
  return w;
}

}  // namespace

void CohortSpec::Validate() const {
  const std::size_t k = scheme.size();
  if (users == 0) throw ConfigError("cohort needs at least one user");
  if (pages_per_label.size() != k) {
    throw ConfigError("pages_per_label must have one entry per label");
  }
  for (auto c : pages_per_label) {
    if (c == 0) throw ConfigError("every label needs at least one page");
  }
  if (activity.min == 0 || activity.max < activity.min) {
    throw ConfigError("activity range must satisfy 1 <= min <= max");
  }
  if (!std::isfinite(activity.exponent)) throw ConfigError("activity exponent must be finite");
  const double floor = 1.0 / static_cast<double>(k);
  if (!(bias_affinity >= floor - 1e-12 && bias_affinity <= 1.0)) {
    throw ConfigError("bias affinity must lie in [1/K, 1]");
  }
  if (!(page_loyalty >= 1.0)) throw ConfigError("page loyalty must be >= 1");
}

std::vector<SyntheticUser> GenerateUsers(const CohortSpec& spec) {
  spec.Validate();
  const std::size_t k = spec.scheme.size();
  std::vector<std::uint32_t> offsets(k + 1, 0);
  for (std::size_t b = 0; b < k; ++b) offsets[b + 1] = offsets[b] + spec.pages_per_label[b];
  const std::uint32_t num_pages = offsets.back();

  std::vector<double> activity_weights;
  for (std::uint64_t n = spec.activity.min; n <= spec.activity.max; ++n) {
    activity_weights.push_back(std::pow(static_cast<double>(n), -spec.activity.exponent));
  }
  const auto activity_cdf = Cumulative(activity_weights);

  const double forced_home =
      k > 1 ? std::max(0.0, (spec.bias_affinity - 1.0 / static_cast<double>(k)) /
                                (1.0 - 1.0 / static_cast<double>(k)))
            : 1.0;
  const double alpha = spec.page_loyalty == 1.0 ? std::numeric_limits<double>::infinity()
                                                : 1.0 / (spec.page_loyalty - 1.0);

  std::vector<SyntheticUser> users(spec.users);
  ParallelForBlocks(users.size(), ResolveThreads(spec.threads), [&](std::size_t begin,
                                                                      std::size_t end) {
    std::vector<std::uint64_t> counts(num_pages);
    for (std::size_t u = begin; u < end; ++u) {
      std::mt19937_64 rng(DeriveSeed(spec.seed, kStreamSynthUser, u));
      SyntheticUser& user = users[u];
      user.home = static_cast<BiasIndex>(std::uniform_int_distribution<std::size_t>(0, k - 1)(rng));
      const std::uint64_t n = spec.activity.min + SampleCdf(activity_cdf, rng);

      std::vector<std::vector<double>> within(k);
      for (std::size_t b = 0; b < k; ++b) {
        within[b] = Cumulative(DirichletWeights(spec.pages_per_label[b], alpha, rng));
      }
      // Label masses of the label-blind preference: Dirichlet(alpha * c_b),
      // which is the aggregate of the per-page Dirichlet.
      std::vector<double> label_mass(k);
      if (std::isinf(alpha)) {
        for (std::size_t b = 0; b < k; ++b) label_mass[b] = spec.pages_per_label[b];
      } else {
        double sum = 0.0;
        if (alpha > 0.0) {
          for (std::size_t b = 0; b < k; ++b) {
            std::gamma_distribution<double> gamma(alpha * spec.pages_per_label[b], 1.0);
            label_mass[b] = gamma(rng);
            sum += label_mass[b];
          }
        }
        if (!(sum > 0.0) || !std::isfinite(sum)) {
          std::vector<double> sizes(spec.pages_per_label.begin(), spec.pages_per_label.end());
          std::fill(label_mass.begin(), label_mass.end(), 0.0);
          label_mass[SampleCdf(Cumulative(sizes), rng)] = 1.0;
        }
      }
      const auto label_cdf = Cumulative(label_mass);

      std::fill(counts.begin(), counts.end(), 0);
      std::bernoulli_distribution home_draw(forced_home);
      for (std::uint64_t i = 0; i < n; ++i) {
        const std::size_t label = home_draw(rng) ? user.home : SampleCdf(label_cdf, rng);
        ++counts[offsets[label] + SampleCdf(within[label], rng)];
      }
      for (PageId p = 0; p < num_pages; ++p) {
        if (counts[p] > 0) user.interactions.emplace_back(p, counts[p]);
      }
    }
  });
  return users;
}

InteractionTable Generate(const CohortSpec& spec, std::vector<BiasIndex>* home_labels) {
  const auto users = GenerateUsers(spec);
  const std::size_t k = spec.scheme.size();
  std::vector<std::string> page_names;
  InteractionTable::Builder builder(spec.scheme);
  const std::uint32_t num_pages =
      std::accumulate(spec.pages_per_label.begin(), spec.pages_per_label.end(), 0u);
  PageId p = 0;
  for (std::size_t b = 0; b < k; ++b) {
    for (std::uint32_t j = 0; j < spec.pages_per_label[b]; ++j, ++p) {
      page_names.push_back(PaddedName('p', p, num_pages));
      builder.AddPage(page_names.back(), static_cast<BiasIndex>(b));
    }
  }
  builder.DeclareKind(spec.kind);
  for (std::size_t u = 0; u < users.size(); ++u) {
    const std::string name = PaddedName('u', u, users.size());
    for (const auto& [page, count] : users[u].interactions) {
      builder.AddInteraction(name, page_names[page], spec.kind, count);
    }
  }
  if (home_labels) {
    // Padded names keep generation order equal to id order.
    home_labels->resize(users.size());
    for (std::size_t u = 0; u < users.size(); ++u) (*home_labels)[u] = users[u].home;
  }
  return std::move(builder).Build();
}

InteractionTable Generate(const CohortSpec& spec) { return Generate(spec, nullptr); }

void WriteCohort(const InteractionTable& table, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
  WriteInteractions(table, dir / "interactions.csv");
  WritePages(table, dir / "pages.csv");
  WriteScheme(table.scheme(), dir / "scheme.txt");
}

}  // namespace selex
