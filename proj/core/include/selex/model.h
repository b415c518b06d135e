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
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "selex/common.h"

namespace selex {

// Ordered set of K >= 2 leaning labels. Index order is the left-to-right
// order of the scheme.
class BiasScheme {
 public:
  explicit BiasScheme(std::vector<std::string> labels);

  // Left, Center-Left, Center, Center-Right, Right.
  static BiasScheme Default();
  // One label name per line; '#' comments and blank lines skipped.
  static BiasScheme FromFile(const std::filesystem::path& path);

  std::size_t size() const { return labels_.size(); }
  const std::string& name(BiasIndex index) const { return labels_.at(index); }
  const std::vector<std::string>& labels() const { return labels_; }
  std::optional<BiasIndex> Find(std::string_view name) const;

  bool operator==(const BiasScheme&) const = default;

 private:
  std::vector<std::string> labels_;
};

// Registry of interaction kind names. Kinds are analysed separately and
// never mixed within one analysis.
struct KindRegistry {
  std::vector<std::string> names = {"like", "comment"};

  bool Contains(std::string_view kind) const;
};

struct Edge {
  UserId user;
  PageId page;
  KindId kind;
  std::uint64_t count;

  bool operator==(const Edge&) const = default;
};

// Edges of one kind in compressed-row form: user u owns
// [user_offsets[u], user_offsets[u+1]) of `pages`/`counts`, sorted by page.
struct KindEdges {
  std::vector<std::uint64_t> user_offsets;
  std::vector<PageId> pages;
  std::vector<std::uint64_t> counts;

  std::size_t num_edges() const { return pages.size(); }
  bool operator==(const KindEdges&) const = default;
};

// Interned names with dense ids assigned in lexicographic order, so that the
// id of a name does not depend on input row order.
class Dictionary {
 public:
  Dictionary() = default;
  explicit Dictionary(std::vector<std::string> sorted_unique_names);

  std::size_t size() const { return names_.size(); }
  const std::string& name(std::uint32_t id) const { return names_.at(id); }
  std::optional<std::uint32_t> Find(std::string_view name) const;
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
};

// Immutable deduplicated multiset of (user, page, kind, count) with a
// page -> leaning map. Cheap to copy: all payloads are shared.
class InteractionTable {
 public:
  class Builder;

  InteractionTable();

  const BiasScheme& scheme() const { return *scheme_; }
  std::size_t num_users() const { return users_->size(); }
  std::size_t num_pages() const { return pages_->size(); }
  std::size_t num_kinds() const { return kinds_->size(); }

  const std::string& user_name(UserId u) const { return users_->name(u); }
  const std::string& page_name(PageId p) const { return pages_->name(p); }
  const std::string& kind_name(KindId k) const { return kinds_->at(k); }
  std::optional<UserId> FindUser(std::string_view name) const { return users_->Find(name); }
  std::optional<PageId> FindPage(std::string_view name) const { return pages_->Find(name); }
  std::optional<KindId> FindKind(std::string_view name) const;
  // Like FindKind but throws ConfigError naming the kind.
  KindId RequireKind(std::string_view name) const;

  BiasIndex page_bias(PageId p) const { return (*page_bias_)[p]; }
  std::span<const BiasIndex> page_biases() const { return *page_bias_; }
  // Number of catalog pages carrying each label.
  std::vector<std::uint32_t> PagesPerLabel() const;

  const KindEdges& edges(KindId kind) const { return *edges_.at(kind); }
  std::span<const PageId> UserPages(KindId kind, UserId u) const;
  std::span<const std::uint64_t> UserCounts(KindId kind, UserId u) const;
  std::uint64_t UserTotal(KindId kind, UserId u) const;
  std::uint64_t TotalCount(KindId kind) const;
  // Per-page totals of one kind.
  std::vector<std::uint64_t> PageTotals(KindId kind) const;
  // Per-user totals of one kind.
  std::vector<std::uint64_t> UserTotals(KindId kind) const;
  std::size_t num_edges() const;
  // All edges, ordered by (kind, user, page).
  std::vector<Edge> Edges() const;

  // Same edges, different page labels. `biases` must have num_pages entries.
  InteractionTable WithPageBiases(std::vector<BiasIndex> biases) const;
  // Same labels and other kinds; `edges` replaces the edges of `kind`.
  InteractionTable WithKindEdges(KindId kind, KindEdges edges) const;

  bool operator==(const InteractionTable& other) const;

 private:
  std::shared_ptr<const BiasScheme> scheme_;
  std::shared_ptr<const Dictionary> users_;
  std::shared_ptr<const Dictionary> pages_;
  std::shared_ptr<const std::vector<std::string>> kinds_;
  std::shared_ptr<const std::vector<BiasIndex>> page_bias_;
  std::vector<std::shared_ptr<const KindEdges>> edges_;
};

// Accumulates pages and raw interaction rows, then merges duplicates and
// assigns dense ids in name order.
class InteractionTable::Builder {
 public:
  explicit Builder(BiasScheme scheme = BiasScheme::Default());

  // Throws DataError when the page is already known with another label.
  void AddPage(std::string_view page, BiasIndex bias);
  void AddPage(std::string_view page, std::string_view bias_label);
  bool HasPage(std::string_view page) const;
  // Throws DataError for unknown pages and zero counts.
  void AddInteraction(std::string_view user, std::string_view page,
                      std::string_view kind, std::uint64_t count = 1);
  // Makes `kind` present in the table even when it has no rows.
  void DeclareKind(std::string_view kind);

  std::size_t num_rows() const { return rows_.size(); }

  InteractionTable Build() &&;

 private:
  struct RawRow {
    std::uint32_t kind;
    std::uint32_t user;
    std::uint32_t page;
    std::uint64_t count;
  };

  std::uint32_t InternUser(std::string_view user);
  std::uint32_t InternKind(std::string_view kind);

  BiasScheme scheme_;
  std::vector<std::unique_ptr<std::string>> page_names_;
  std::vector<BiasIndex> page_bias_;
  std::unordered_map<std::string_view, std::uint32_t> page_index_;
  std::vector<std::unique_ptr<std::string>> user_names_;
  std::unordered_map<std::string_view, std::uint32_t> user_index_;
  std::vector<std::unique_ptr<std::string>> kind_names_;
  std::unordered_map<std::string_view, std::uint32_t> kind_index_;
  std::vector<RawRow> rows_;
};

// One user's interactions of one kind grouped by leaning, then page.
struct PageCount {
  PageId page;
  std::uint64_t count;

  bool operator==(const PageCount&) const = default;
};

struct UserVector {
  UserId user = 0;
  KindId kind = 0;
  std::vector<std::vector<PageCount>> per_bias;
  std::uint64_t total = 0;
  std::uint32_t pages_touched = 0;
  std::vector<std::uint64_t> bias_counts;
  // Distinct pages the user touched per class.
  std::vector<std::uint32_t> distinct_pages;
  // Pages in the catalog carrying each label; the reachable pages per class.
  std::vector<std::uint32_t> catalog_pages;

  std::size_t num_classes() const { return per_bias.size(); }

  // Builds a vector from explicit per-class groups. `catalog_pages` defaults
  // to the touched counts when empty.
  static UserVector FromGroups(std::vector<std::vector<PageCount>> per_bias,
                               std::vector<std::uint32_t> catalog_pages = {});
};

// nullopt when the user has no interaction of that kind.
std::optional<UserVector> MakeUserVector(const InteractionTable& table, UserId user,
                                         KindId kind);
// Variant reusing the caller's catalog histogram and label map, for hot loops.
std::optional<UserVector> MakeUserVector(const InteractionTable& table, UserId user,
                                         KindId kind, std::span<const BiasIndex> labels,
                                         std::span<const std::uint32_t> catalog_pages);

// Modal leaning; nullopt (unresolved) when two or more classes tie for the
// maximum.
std::optional<BiasIndex> InferLeaning(const UserVector& v);
std::optional<BiasIndex> InferLeaning(std::span<const std::uint64_t> bias_counts);

// Ingestion.

struct IngestOptions {
  char separator = ',';
  // Skip interaction rows whose page is absent from the pages file instead of
  // failing.
  bool skip_unknown_pages = false;
  // Skip malformed rows instead of failing. Skipped rows are reported.
  bool skip_malformed = false;
  KindRegistry kinds;
  // Optional ordered label file; the default five-label scheme otherwise.
  std::optional<std::filesystem::path> scheme_path;
};

struct IngestDiagnostics {
  std::uint64_t page_rows = 0;
  std::uint64_t interaction_rows = 0;
  std::uint64_t merged_edges = 0;
  std::uint64_t skipped_unknown_page = 0;
  std::uint64_t skipped_malformed = 0;
  // First few skipped-row messages with line numbers.
  std::vector<std::string> messages;
};

struct IngestResult {
  InteractionTable table;
  IngestDiagnostics diagnostics;
};

IngestResult Ingest(const std::filesystem::path& interactions_path,
                    const std::filesystem::path& pages_path,
                    const IngestOptions& options = {});

// Writers for the same formats Ingest reads (header line included).
void WriteInteractions(const InteractionTable& table, const std::filesystem::path& path,
                       char separator = ',');
void WritePages(const InteractionTable& table, const std::filesystem::path& path,
                char separator = ',');
void WriteScheme(const BiasScheme& scheme, const std::filesystem::path& path);

}  // namespace selex
