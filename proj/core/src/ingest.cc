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

#include <charconv>
#include <cstdio>
#include <fstream>
#include <memory>

#include "selex/model.h"

namespace selex {
namespace {

constexpr std::size_t kMaxMessages = 20;
constexpr std::size_t kChunkSize = 1 << 22;

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

// Splits into at most `max_fields` fields; returns the number found, or
// max_fields + 1 when there are more.
std::size_t Split(std::string_view line, char sep, std::string_view* fields,
                  std::size_t max_fields) {
  std::size_t n = 0;
  while (true) {
    const auto pos = line.find(sep);
    if (n == max_fields) return max_fields + 1;
    fields[n++] = Trim(line.substr(0, pos));
    if (pos == std::string_view::npos) return n;
    line.remove_prefix(pos + 1);
  }
}

// Calls fn(line, line_number) for every line that is not blank or a '#'
// comment. Reads in fixed-size chunks.
template <typename Fn>
void ForEachLine(const std::filesystem::path& path, Fn&& fn) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> file(std::fopen(path.c_str(), "rb"),
                                                       &std::fclose);
  if (!file) throw DataError("cannot open " + path.string());
  std::string buffer;
  std::string carry;
  buffer.resize(kChunkSize);
  std::uint64_t line_number = 0;
  auto handle = [&](std::string_view line) {
    ++line_number;
    const auto trimmed = Trim(line);
    if (trimmed.empty() || trimmed.front() == '#') return;
    fn(line, line_number);
  };
  while (true) {
    const std::size_t got = std::fread(buffer.data(), 1, buffer.size(), file.get());
    if (got == 0) break;
    std::string_view chunk(buffer.data(), got);
    std::size_t start = 0;
    while (true) {
      const auto nl = chunk.find('\n', start);
      if (nl == std::string_view::npos) break;
      if (!carry.empty()) {
        carry.append(chunk.substr(start, nl - start));
        handle(carry);
        carry.clear();
      } else {
        handle(chunk.substr(start, nl - start));
      }
      start = nl + 1;
    }
    carry.append(chunk.substr(start));
  }
  if (std::ferror(file.get())) throw DataError("read error on " + path.string());
  if (!carry.empty()) handle(carry);
}

std::string Where(const std::filesystem::path& path, std::uint64_t line) {
  return path.filename().string() + ":" + std::to_string(line);
}

}  // namespace

IngestResult Ingest(const std::filesystem::path& interactions_path,
                    const std::filesystem::path& pages_path, const IngestOptions& options) {
  BiasScheme scheme =
      options.scheme_path ? BiasScheme::FromFile(*options.scheme_path) : BiasScheme::Default();
  InteractionTable::Builder builder(scheme);
  IngestDiagnostics diag;

  auto note = [&](std::string message) {
    if (diag.messages.size() < kMaxMessages) diag.messages.push_back(std::move(message));
  };

  bool first = true;
  ForEachLine(pages_path, [&](std::string_view line, std::uint64_t line_number) {
    std::string_view fields[2];
    const std::size_t n = Split(line, options.separator, fields, 2);
    if (first) {
      first = false;
      if (n >= 1 && fields[0] == "page_id") return;
    }
    if (n != 2 || fields[0].empty() || fields[1].empty()) {
      throw DataError(Where(pages_path, line_number) +
                      ": malformed pages row, expected page_id,bias_label");
    }
    try {
      builder.AddPage(fields[0], fields[1]);
    } catch (const DataError& e) {
      throw DataError(Where(pages_path, line_number) + ": " + e.what());
    }
    ++diag.page_rows;
  });

  for (const auto& kind : options.kinds.names) builder.DeclareKind(kind);

  first = true;
  ForEachLine(interactions_path, [&](std::string_view line, std::uint64_t line_number) {
    std::string_view fields[4];
    const std::size_t n = Split(line, options.separator, fields, 4);
    if (first) {
      first = false;
      if (n >= 1 && fields[0] == "user_id") return;
    }
    ++diag.interaction_rows;

    auto malformed = [&](const std::string& why) {
      const std::string message = Where(interactions_path, line_number) + ": " + why;
      if (!options.skip_malformed) throw DataError(message);
      ++diag.skipped_malformed;
      note(message);
    };

    if (n != 3 && n != 4) {
      malformed("expected 3 or 4 fields (user_id,page_id,kind[,count])");
      return;
    }
    if (fields[0].empty() || fields[1].empty()) {
      malformed("empty user or page id");
      return;
    }
    if (!options.kinds.Contains(fields[2])) {
      malformed("unknown interaction kind '" + std::string(fields[2]) + "'");
      return;
    }
    std::uint64_t count = 1;
    if (n == 4) {
      const auto* begin = fields[3].data();
      const auto* end = begin + fields[3].size();
      auto [ptr, ec] = std::from_chars(begin, end, count);
      if (ec != std::errc() || ptr != end || count == 0) {
        malformed("count must be a positive integer, got '" + std::string(fields[3]) + "'");
        return;
      }
    }
    if (!builder.HasPage(fields[1])) {
      const std::string message = Where(interactions_path, line_number) + ": unknown page id '" +
                                  std::string(fields[1]) + "'";
      if (!options.skip_unknown_pages) throw DataError(message);
      ++diag.skipped_unknown_page;
      note(message);
      return;
    }
    builder.AddInteraction(fields[0], fields[1], fields[2], count);
  });

  IngestResult result{std::move(builder).Build(), std::move(diag)};
  result.diagnostics.merged_edges = result.table.num_edges();
  return result;
}

void WriteInteractions(const InteractionTable& table, const std::filesystem::path& path,
                       char separator) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  std::string line;
  out << "user_id" << separator << "page_id" << separator << "kind" << separator << "count\n";
  for (KindId k = 0; k < table.num_kinds(); ++k) {
    const KindEdges& e = table.edges(k);
    for (UserId u = 0; u < table.num_users(); ++u) {
      for (auto i = e.user_offsets[u]; i < e.user_offsets[u + 1]; ++i) {
        line.clear();
        line += table.user_name(u);
        line += separator;
        line += table.page_name(e.pages[i]);
        line += separator;
        line += table.kind_name(k);
        line += separator;
        line += std::to_string(e.counts[i]);
        line += '\n';
        out.write(line.data(), static_cast<std::streamsize>(line.size()));
      }
    }
  }
  if (!out) throw DataError("write failed for " + path.string());
}

void WritePages(const InteractionTable& table, const std::filesystem::path& path,
                char separator) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "page_id" << separator << "bias_label\n";
  for (PageId p = 0; p < table.num_pages(); ++p) {
    out << table.page_name(p) << separator << table.scheme().name(table.page_bias(p)) << '\n';
  }
  if (!out) throw DataError("write failed for " + path.string());
}

void WriteScheme(const BiasScheme& scheme, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& label : scheme.labels()) out << label << '\n';
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace selex
