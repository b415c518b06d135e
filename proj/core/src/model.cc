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

#include "selex/model.h"

#include <algorithm>
#include <fstream>
#include <numeric>

namespace selex {

BiasScheme::BiasScheme(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) throw ConfigError("bias scheme needs at least one label");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i].empty()) throw ConfigError("bias scheme contains an empty label");
    for (std::size_t j = 0; j < i; ++j) {
      if (labels_[i] == labels_[j]) {
        throw ConfigError("bias scheme repeats label '" + labels_[i] + "'");
      }
    }
  }
}

BiasScheme BiasScheme::Default() {
  return BiasScheme({"Left", "Center-Left", "Center", "Center-Right", "Right"});
}

BiasScheme BiasScheme::FromFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open bias scheme file " + path.string());
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
      line.pop_back();
    }
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    labels.push_back(line.substr(first));
  }
  return BiasScheme(std::move(labels));
}

std::optional<BiasIndex> BiasScheme::Find(std::string_view name) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == name) return static_cast<BiasIndex>(i);
  }
  return std::nullopt;
}

bool KindRegistry::Contains(std::string_view kind) const {
  return std::find(names.begin(), names.end(), kind) != names.end();
}

Dictionary::Dictionary(std::vector<std::string> sorted_unique_names)
    : names_(std::move(sorted_unique_names)) {}

std::optional<std::uint32_t> Dictionary::Find(std::string_view name) const {
  auto it = std::lower_bound(names_.begin(), names_.end(), name,
                             [](const std::string& a, std::string_view b) { return a < b; });
  if (it == names_.end() || *it != name) return std::nullopt;
  return static_cast<std::uint32_t>(it - names_.begin());
}

// InteractionTable

InteractionTable::InteractionTable()
    : scheme_(std::make_shared<const BiasScheme>(BiasScheme::Default())),
      users_(std::make_shared<const Dictionary>()),
      pages_(std::make_shared<const Dictionary>()),
      kinds_(std::make_shared<const std::vector<std::string>>()),
      page_bias_(std::make_shared<const std::vector<BiasIndex>>()) {}

std::optional<KindId> InteractionTable::FindKind(std::string_view name) const {
  for (std::size_t k = 0; k < kinds_->size(); ++k) {
    if ((*kinds_)[k] == name) return static_cast<KindId>(k);
  }
  return std::nullopt;
}

KindId InteractionTable::RequireKind(std::string_view name) const {
  auto kind = FindKind(name);
  if (!kind) throw ConfigError("no interactions of kind '" + std::string(name) + "' in table");
  return *kind;
}

std::vector<std::uint32_t> InteractionTable::PagesPerLabel() const {
  std::vector<std::uint32_t> histogram(scheme_->size(), 0);
  for (BiasIndex b : *page_bias_) ++histogram[b];
  return histogram;
}

std::span<const PageId> InteractionTable::UserPages(KindId kind, UserId u) const {
  const KindEdges& e = edges(kind);
  return std::span<const PageId>(e.pages).subspan(
      e.user_offsets[u], e.user_offsets[u + 1] - e.user_offsets[u]);
}

std::span<const std::uint64_t> InteractionTable::UserCounts(KindId kind, UserId u) const {
  const KindEdges& e = edges(kind);
  return std::span<const std::uint64_t>(e.counts).subspan(
      e.user_offsets[u], e.user_offsets[u + 1] - e.user_offsets[u]);
}

std::uint64_t InteractionTable::UserTotal(KindId kind, UserId u) const {
  auto counts = UserCounts(kind, u);
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

std::uint64_t InteractionTable::TotalCount(KindId kind) const {
  const auto& counts = edges(kind).counts;
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

std::vector<std::uint64_t> InteractionTable::PageTotals(KindId kind) const {
  std::vector<std::uint64_t> totals(num_pages(), 0);
  const KindEdges& e = edges(kind);
  for (std::size_t i = 0; i < e.num_edges(); ++i) totals[e.pages[i]] += e.counts[i];
  return totals;
}

std::vector<std::uint64_t> InteractionTable::UserTotals(KindId kind) const {
  std::vector<std::uint64_t> totals(num_users(), 0);
  for (UserId u = 0; u < num_users(); ++u) totals[u] = UserTotal(kind, u);
  return totals;
}

std::size_t InteractionTable::num_edges() const {
  std::size_t n = 0;
  for (const auto& e : edges_) n += e->num_edges();
  return n;
}

std::vector<Edge> InteractionTable::Edges() const {
  std::vector<Edge> out;
  out.reserve(num_edges());
  for (KindId k = 0; k < edges_.size(); ++k) {
    const KindEdges& e = *edges_[k];
    for (UserId u = 0; u < num_users(); ++u) {
      for (auto i = e.user_offsets[u]; i < e.user_offsets[u + 1]; ++i) {
        out.push_back({u, e.pages[i], k, e.counts[i]});
      }
    }
  }
  return out;
}

InteractionTable InteractionTable::WithPageBiases(std::vector<BiasIndex> biases) const {
  if (biases.size() != num_pages()) {
    throw std::invalid_argument("WithPageBiases: label vector size mismatch");
  }
  for (BiasIndex b : biases) {
    if (b >= scheme_->size()) throw std::invalid_argument("WithPageBiases: label out of range");
  }
  InteractionTable out = *this;
  out.page_bias_ = std::make_shared<const std::vector<BiasIndex>>(std::move(biases));
  return out;
}

InteractionTable InteractionTable::WithKindEdges(KindId kind, KindEdges edges) const {
  if (kind >= edges_.size() || edges.user_offsets.size() != num_users() + 1 ||
      edges.pages.size() != edges.counts.size()) {
    throw std::invalid_argument("WithKindEdges: shape mismatch");
  }
  InteractionTable out = *this;
  out.edges_[kind] = std::make_shared<const KindEdges>(std::move(edges));
  return out;
}

bool InteractionTable::operator==(const InteractionTable& other) const {
  if (*scheme_ != *other.scheme_ || users_->names() != other.users_->names() ||
      pages_->names() != other.pages_->names() || *kinds_ != *other.kinds_ ||
      *page_bias_ != *other.page_bias_ || edges_.size() != other.edges_.size()) {
    return false;
  }
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    if (*edges_[k] != *other.edges_[k]) return false;
  }
  return true;
}

// Builder

InteractionTable::Builder::Builder(BiasScheme scheme) : scheme_(std::move(scheme)) {}

void InteractionTable::Builder::AddPage(std::string_view page, BiasIndex bias) {
  if (bias >= scheme_.size()) {
    throw DataError("bias index " + std::to_string(bias) + " out of range for page '" +
                    std::string(page) + "'");
  }
  if (auto it = page_index_.find(page); it != page_index_.end()) {
    if (page_bias_[it->second] != bias) {
      throw DataError("page '" + std::string(page) + "' listed with two different labels");
    }
    return;
  }
  page_names_.push_back(std::make_unique<std::string>(page));
  page_bias_.push_back(bias);
  page_index_.emplace(*page_names_.back(), static_cast<std::uint32_t>(page_names_.size() - 1));
}

void InteractionTable::Builder::AddPage(std::string_view page, std::string_view bias_label) {
  auto bias = scheme_.Find(bias_label);
  if (!bias) {
    throw DataError("unknown bias label '" + std::string(bias_label) + "' for page '" +
                    std::string(page) + "'");
  }
  AddPage(page, *bias);
}

bool InteractionTable::Builder::HasPage(std::string_view page) const {
  return page_index_.contains(page);
}

std::uint32_t InteractionTable::Builder::InternUser(std::string_view user) {
  if (auto it = user_index_.find(user); it != user_index_.end()) return it->second;
  user_names_.push_back(std::make_unique<std::string>(user));
  const auto id = static_cast<std::uint32_t>(user_names_.size() - 1);
  user_index_.emplace(*user_names_.back(), id);
  return id;
}

std::uint32_t InteractionTable::Builder::InternKind(std::string_view kind) {
  if (auto it = kind_index_.find(kind); it != kind_index_.end()) return it->second;
  kind_names_.push_back(std::make_unique<std::string>(kind));
  const auto id = static_cast<std::uint32_t>(kind_names_.size() - 1);
  kind_index_.emplace(*kind_names_.back(), id);
  return id;
}

void InteractionTable::Builder::DeclareKind(std::string_view kind) { InternKind(kind); }

void InteractionTable::Builder::AddInteraction(std::string_view user, std::string_view page,
                                               std::string_view kind, std::uint64_t count) {
  if (count == 0) throw DataError("interaction count must be positive");
  auto it = page_index_.find(page);
  if (it == page_index_.end()) throw DataError("unknown page id '" + std::string(page) + "'");
  rows_.push_back({InternKind(kind), InternUser(user), it->second, count});
}

namespace {

// Permutation sending old ids to ranks of their names.
std::vector<std::uint32_t> RankByName(const std::vector<std::unique_ptr<std::string>>& names,
                                      std::vector<std::string>* sorted) {
  std::vector<std::uint32_t> order(names.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(),
            [&](std::uint32_t a, std::uint32_t b) { return *names[a] < *names[b]; });
  std::vector<std::uint32_t> rank(names.size());
  sorted->clear();
  sorted->reserve(names.size());
  for (std::uint32_t r = 0; r < order.size(); ++r) {
    rank[order[r]] = r;
    sorted->push_back(*names[order[r]]);
  }
  return rank;
}

}  // namespace

InteractionTable InteractionTable::Builder::Build() && {
  std::vector<std::string> user_sorted, page_sorted, kind_sorted;
  const auto user_rank = RankByName(user_names_, &user_sorted);
  const auto page_rank = RankByName(page_names_, &page_sorted);
  const auto kind_rank = RankByName(kind_names_, &kind_sorted);

  std::vector<BiasIndex> biases(page_bias_.size());
  for (std::size_t p = 0; p < page_bias_.size(); ++p) biases[page_rank[p]] = page_bias_[p];

  for (auto& row : rows_) {
    row.kind = kind_rank[row.kind];
    row.user = user_rank[row.user];
    row.page = page_rank[row.page];
  }
  std::sort(rows_.begin(), rows_.end(), [](const RawRow& a, const RawRow& b) {
    if (a.kind != b.kind) return a.kind < b.kind;
    if (a.user != b.user) return a.user < b.user;
    return a.page < b.page;
  });

  const std::size_t num_users = user_sorted.size();
  std::vector<std::shared_ptr<const KindEdges>> edges;
  std::size_t i = 0;
  for (std::uint32_t k = 0; k < kind_sorted.size(); ++k) {
    KindEdges e;
    e.user_offsets.assign(num_users + 1, 0);
    while (i < rows_.size() && rows_[i].kind == k) {
      const RawRow& first = rows_[i];
      std::uint64_t count = 0;
      while (i < rows_.size() && rows_[i].kind == k && rows_[i].user == first.user &&
             rows_[i].page == first.page) {
        count += rows_[i].count;
        ++i;
      }
      e.pages.push_back(first.page);
      e.counts.push_back(count);
      ++e.user_offsets[first.user + 1];
    }
    std::partial_sum(e.user_offsets.begin(), e.user_offsets.end(), e.user_offsets.begin());
    edges.push_back(std::make_shared<const KindEdges>(std::move(e)));
  }

  InteractionTable table;
  table.scheme_ = std::make_shared<const BiasScheme>(std::move(scheme_));
  table.users_ = std::make_shared<const Dictionary>(std::move(user_sorted));
  table.pages_ = std::make_shared<const Dictionary>(std::move(page_sorted));
  table.kinds_ = std::make_shared<const std::vector<std::string>>(std::move(kind_sorted));
  table.page_bias_ = std::make_shared<const std::vector<BiasIndex>>(std::move(biases));
  table.edges_ = std::move(edges);

  rows_.clear();
  user_index_.clear();
  user_names_.clear();
  return table;
}

// UserVector

namespace {

void FillSummary(UserVector& v) {
  const std::size_t k = v.per_bias.size();
  v.bias_counts.assign(k, 0);
  v.distinct_pages.assign(k, 0);
  v.total = 0;
  v.pages_touched = 0;
  for (std::size_t b = 0; b < k; ++b) {
    for (const auto& pc : v.per_bias[b]) v.bias_counts[b] += pc.count;
    v.distinct_pages[b] = static_cast<std::uint32_t>(v.per_bias[b].size());
    v.total += v.bias_counts[b];
    v.pages_touched += v.distinct_pages[b];
  }
}

}  // namespace

UserVector UserVector::FromGroups(std::vector<std::vector<PageCount>> per_bias,
                                  std::vector<std::uint32_t> catalog_pages) {
  UserVector v;
  v.per_bias = std::move(per_bias);
  for (const auto& group : v.per_bias) {
    for (const auto& pc : group) {
      if (pc.count == 0) throw std::invalid_argument("UserVector: zero page count");
    }
  }
  FillSummary(v);
  if (catalog_pages.empty()) {
    v.catalog_pages = v.distinct_pages;
  } else {
    if (catalog_pages.size() != v.per_bias.size()) {
      throw std::invalid_argument("UserVector: catalog size mismatch");
    }
    for (std::size_t b = 0; b < catalog_pages.size(); ++b) {
      if (catalog_pages[b] < v.distinct_pages[b]) {
        throw std::invalid_argument("UserVector: more touched pages than catalog pages");
      }
    }
    v.catalog_pages = std::move(catalog_pages);
  }
  return v;
}

std::optional<UserVector> MakeUserVector(const InteractionTable& table, UserId user,
                                         KindId kind, std::span<const BiasIndex> labels,
                                         std::span<const std::uint32_t> catalog_pages) {
  if (user >= table.num_users() || kind >= table.num_kinds()) return std::nullopt;
  auto pages = table.UserPages(kind, user);
  if (pages.empty()) return std::nullopt;
  auto counts = table.UserCounts(kind, user);
  UserVector v;
  v.user = user;
  v.kind = kind;
  v.per_bias.resize(catalog_pages.size());
  for (std::size_t i = 0; i < pages.size(); ++i) {
    v.per_bias[labels[pages[i]]].push_back({pages[i], counts[i]});
  }
  FillSummary(v);
  v.catalog_pages.assign(catalog_pages.begin(), catalog_pages.end());
  return v;
}

std::optional<UserVector> MakeUserVector(const InteractionTable& table, UserId user,
                                         KindId kind) {
  const auto catalog = table.PagesPerLabel();
  return MakeUserVector(table, user, kind, table.page_biases(), catalog);
}

std::optional<BiasIndex> InferLeaning(std::span<const std::uint64_t> bias_counts) {
  std::optional<BiasIndex> best;
  std::uint64_t best_count = 0;
  bool tied = false;
  for (std::size_t b = 0; b < bias_counts.size(); ++b) {
    if (bias_counts[b] > best_count) {
      best = static_cast<BiasIndex>(b);
      best_count = bias_counts[b];
      tied = false;
    } else if (bias_counts[b] == best_count && best_count > 0) {
      tied = true;
    }
  }
  if (tied) return std::nullopt;
  return best;
}

std::optional<BiasIndex> InferLeaning(const UserVector& v) { return InferLeaning(v.bias_counts); }

}  // namespace selex
