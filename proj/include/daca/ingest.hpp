#pragma once

// Joint-weight extraction from materialized query results: the
//   SELECT Rx.PK, COUNT(*) FROM S(q|D) GROUP BY Rx.PK
// aggregation performed in one streaming pass.

#include <zlib.h>

#include <charconv>
#include <cstdint>
#include <fstream>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "daca/error.hpp"
#include "daca/instance.hpp"

namespace daca {

/// One row of a query's materialized result set, projected to the attacked
/// relation's primary key.
struct ResultRow {
  QueryId query;
  TupleId tuple_pk;
};

/// A pre-aggregated (query, tuple, count) record. Count is signed so that bad
/// input can be reported instead of silently wrapping.
struct GroupedCount {
  std::size_t query;
  std::size_t tuple;
  std::int64_t count;
};

/// Streaming group-by counter. Memory is O(nnz) of the resulting matrix.
class JointWeightAccumulator {
public:
  JointWeightAccumulator(std::size_t n_tuples, std::size_t n_queries)
      : n_tuples_(n_tuples), counts_(n_queries) {}

  void add(const ResultRow& row, std::uint64_t row_number = 0) {
    if (row.query.index >= counts_.size()) {
      throw InputError("query " + std::to_string(row.query.index) + " outside 0.." +
                           std::to_string(counts_.size()) + ")",
                       row_number);
    }
    if (row.tuple_pk.index >= n_tuples_) {
      throw InputError("tuple " + std::to_string(row.tuple_pk.index) + " outside 0.." +
                           std::to_string(n_tuples_) + ")",
                       row_number);
    }
    ++counts_[row.query.index][row.tuple_pk.index];
  }

  JointWeightMatrix finish() && {
    std::vector<std::vector<TupleWeight>> lists(counts_.size());
    for (std::size_t j = 0; j < counts_.size(); ++j) {
      auto& list = lists[j];
      list.reserve(counts_[j].size());
      for (const auto& [tuple, count] : counts_[j]) list.push_back({tuple, count});
      std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) { return a.tuple < b.tuple; });
      counts_[j] = {};
    }
    return JointWeightMatrix(n_tuples_, std::move(lists));
  }

private:
  std::size_t n_tuples_;
  std::vector<std::unordered_map<std::size_t, Count>> counts_;
};

/// w_ij = number of rows with (query = j, tuple_pk = i).
inline JointWeightMatrix extract_joint_weights(std::span<const ResultRow> rows, std::size_t n_tuples,
                                               std::size_t n_queries) {
  JointWeightAccumulator acc(n_tuples, n_queries);
  std::uint64_t n = 0;
  for (const auto& row : rows) acc.add(row, ++n);
  return std::move(acc).finish();
}

/// Builds the matrix from already-grouped counts. Zero counts are accepted and
/// dropped; negative counts and repeated (query, tuple) pairs are errors.
inline JointWeightMatrix load_grouped_counts(std::span<const GroupedCount> records, std::size_t n_tuples,
                                             std::size_t n_queries) {
  std::vector<std::vector<TupleWeight>> lists(n_queries);
  std::unordered_set<std::uint64_t> seen;
  std::uint64_t n = 0;
  for (const auto& r : records) {
    ++n;
    if (r.count < 0) throw InputError("negative count " + std::to_string(r.count), n);
    if (r.query >= n_queries) throw InputError("query " + std::to_string(r.query) + " out of range", n);
    if (r.tuple >= n_tuples) throw InputError("tuple " + std::to_string(r.tuple) + " out of range", n);
    const auto key = static_cast<std::uint64_t>(r.query) * n_tuples + r.tuple;
    if (!seen.insert(key).second) {
      throw InputError("duplicate pair (query " + std::to_string(r.query) + ", tuple " +
                           std::to_string(r.tuple) + ")",
                       n);
    }
    lists[r.query].push_back({r.tuple, static_cast<Count>(r.count)});
  }
  for (auto& list : lists) {
    std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) { return a.tuple < b.tuple; });
  }
  return JointWeightMatrix(n_tuples, std::move(lists));
}

/// Groups raw rows into counts. The returned records are ordered by (query, tuple).
inline std::vector<GroupedCount> group_rows(std::span<const ResultRow> rows) {
  std::unordered_map<std::uint64_t, std::int64_t> counts;
  std::vector<std::pair<std::size_t, std::size_t>> keys;
  for (const auto& r : rows) {
    const auto key = (static_cast<std::uint64_t>(r.query.index) << 32) | r.tuple_pk.index;
    if (counts[key]++ == 0) keys.emplace_back(r.query.index, r.tuple_pk.index);
  }
  std::sort(keys.begin(), keys.end());
  std::vector<GroupedCount> out;
  out.reserve(keys.size());
  for (const auto& [q, t] : keys) {
    out.push_back({q, t, counts[(static_cast<std::uint64_t>(q) << 32) | t]});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Line-oriented file input, gzip-transparent for *.gz paths.

class LineReader {
public:
  explicit LineReader(const std::string& path) : path_(path) {
    if (path.ends_with(".gz")) {
      gz_ = gzopen(path.c_str(), "rb");
      if (gz_ == nullptr) throw InputError("cannot open " + path);
    } else {
      file_ = std::make_unique<std::ifstream>(path);
      if (!*file_) throw InputError("cannot open " + path);
    }
  }
  LineReader(const LineReader&) = delete;
  LineReader& operator=(const LineReader&) = delete;
  ~LineReader() {
    if (gz_ != nullptr) gzclose(gz_);
  }

  bool next(std::string& line) {
    line.clear();
    if (file_) {
      if (!std::getline(*file_, line)) return false;
    } else {
      char buf[4096];
      bool any = false;
      while (gzgets(gz_, buf, sizeof buf) != nullptr) {
        any = true;
        line += buf;
        if (!line.empty() && line.back() == '\n') break;
      }
      if (!any) return false;
      if (!line.empty() && line.back() == '\n') line.pop_back();
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++number_;
    return true;
  }

  std::uint64_t line_number() const noexcept { return number_; }
  const std::string& path() const noexcept { return path_; }

private:
  std::string path_;
  std::unique_ptr<std::ifstream> file_;
  gzFile gz_ = nullptr;
  std::uint64_t number_ = 0;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class Int>
Int parse_int(std::string_view field, std::uint64_t row, const char* name) {
  Int value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
    throw InputError("malformed " + std::string(name) + " field '" + std::string(field) + "'", row);
  }
  return value;
}

inline void expect_header(LineReader& reader, std::span<const std::string_view> columns) {
  std::string line;
  if (!reader.next(line)) throw InputError(reader.path() + ": empty file, expected header");
  auto fields = split_csv(line);
  bool ok = fields.size() == columns.size();
  for (std::size_t k = 0; ok && k < columns.size(); ++k) ok = fields[k] == columns[k];
  if (!ok) {
    std::string want;
    for (auto c : columns) want += (want.empty() ? "" : ",") + std::string(c);
    throw InputError("expected header '" + want + "'", 1);
  }
}

}  // namespace detail

/// Streams a `query_id,tuple_pk` CSV without buffering rows. Errors name the
/// 1-based line number of the offending row.
inline JointWeightMatrix extract_joint_weights_csv(const std::string& path, std::size_t n_tuples,
                                                   std::size_t n_queries) {
  LineReader reader(path);
  static constexpr std::string_view kCols[] = {"query_id", "tuple_pk"};
  detail::expect_header(reader, kCols);
  JointWeightAccumulator acc(n_tuples, n_queries);
  std::string line;
  while (reader.next(line)) {
    if (detail::trim(line).empty()) continue;
    const auto row = reader.line_number();
    auto fields = detail::split_csv(line);
    if (fields.size() != 2) throw InputError("expected 2 fields, got " + std::to_string(fields.size()), row);
    acc.add({QueryId{detail::parse_int<std::size_t>(fields[0], row, "query_id")},
             TupleId{detail::parse_int<std::size_t>(fields[1], row, "tuple_pk")}},
            row);
  }
  return std::move(acc).finish();
}

/// Reads a `query_id,tuple_pk,count` CSV.
inline JointWeightMatrix load_grouped_counts_csv(const std::string& path, std::size_t n_tuples,
                                                 std::size_t n_queries) {
  LineReader reader(path);
  static constexpr std::string_view kCols[] = {"query_id", "tuple_pk", "count"};
  detail::expect_header(reader, kCols);
  std::vector<GroupedCount> records;
  std::vector<std::uint64_t> lines;
  std::string line;
  while (reader.next(line)) {
    if (detail::trim(line).empty()) continue;
    const auto row = reader.line_number();
    auto fields = detail::split_csv(line);
    if (fields.size() != 3) throw InputError("expected 3 fields, got " + std::to_string(fields.size()), row);
    records.push_back({detail::parse_int<std::size_t>(fields[0], row, "query_id"),
                       detail::parse_int<std::size_t>(fields[1], row, "tuple_pk"),
                       detail::parse_int<std::int64_t>(fields[2], row, "count")});
    lines.push_back(row);
  }
  try {
    return load_grouped_counts(records, n_tuples, n_queries);
  } catch (const InputError& e) {
    // Re-anchor the record index to the file's line number.
    if (e.row() == 0 || e.row() > lines.size()) throw;
    std::string msg = e.what();
    auto colon = msg.find(": ");
    throw InputError(colon == std::string::npos ? msg : msg.substr(colon + 2), lines[e.row() - 1]);
  }
}

}  // namespace daca
