#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "strata/article.h"

namespace strata {

struct Bm25Params {
  double k1 = 0.9;
  double b = 0.4;

  friend bool operator==(const Bm25Params&, const Bm25Params&) = default;
};

struct Posting {
  std::uint32_t doc = 0;  // internal ordinal; ordinals follow unit_id order
  std::uint32_t tf = 0;

  friend bool operator==(const Posting&, const Posting&) = default;
};

struct ScoredUnit {
  std::string unit_id;
  double score = 0.0;

  friend bool operator==(const ScoredUnit&, const ScoredUnit&) = default;
};

/// Immutable in-memory inverted index over retrieval units with BM25 ranking.
///
/// Units are stored sorted by unit_id and identified internally by their
/// position in that order, so every postings list sorted by ordinal is also
/// sorted by unit_id. Concurrent readers are safe once built.
class InvertedIndex {
 public:
  InvertedIndex() = default;

  /// Throws DataError naming the first duplicate unit_id.
  static InvertedIndex build(std::vector<RetrievalUnit> units, Granularity granularity,
                             Bm25Params params = {});

  Granularity granularity() const { return granularity_; }
  const Bm25Params& params() const { return params_; }
  std::size_t size() const { return unit_ids_.size(); }
  double average_length() const { return avg_dl_; }
  std::size_t term_count() const { return postings_.size(); }

  std::size_t df(std::string_view term) const;
  /// ln(1 + (N - df + 0.5) / (df + 0.5)); never negative.
  double idf(std::string_view term) const;

  /// Empty span for unknown terms.
  std::span<const Posting> postings(std::string_view term) const;

  std::optional<std::uint32_t> ordinal(std::string_view unit_id) const;
  const std::string& unit_id(std::uint32_t ordinal) const { return unit_ids_[ordinal]; }
  const std::string& article_id(std::uint32_t ordinal) const { return article_ids_[ordinal]; }
  const std::string& text(std::uint32_t ordinal) const { return texts_[ordinal]; }
  std::uint32_t length(std::uint32_t ordinal) const { return lengths_[ordinal]; }

  /// Stored text of a unit; throws LookupError.
  const std::string& unit_text(std::string_view unit_id) const;

  /// Sorted list of all indexed terms.
  std::vector<std::string> vocabulary() const;

  /// BM25 of `unit_id` for the query tokens. Repeated query tokens contribute
  /// once per occurrence. Throws LookupError for an unknown unit.
  double bm25_score(std::span<const std::string> query, std::string_view unit_id) const;

  /// Top-k units by BM25, descending score, ties by ascending unit_id, zero
  /// scores excluded.
  std::vector<ScoredUnit> search(std::span<const std::string> query, std::size_t k) const;
  std::vector<ScoredUnit> search(std::string_view query_text, std::size_t k) const;

  /// Checks df/postings consistency, postings order and avg_dl; throws
  /// DataError describing the first violation.
  void validate() const;

  void write(std::ostream& out) const;
  static InvertedIndex read(std::istream& in);
  void save(const std::filesystem::path& path) const;
  static InvertedIndex load(const std::filesystem::path& path);

  friend bool operator==(const InvertedIndex&, const InvertedIndex&) = default;

 private:
  double term_weight(double idf, std::uint32_t tf, std::uint32_t doc_length) const;
  void finalize();

  Granularity granularity_ = Granularity::kAbstract;
  Bm25Params params_;
  double avg_dl_ = 0.0;
  std::vector<std::string> unit_ids_;
  std::vector<std::string> article_ids_;
  std::vector<std::string> texts_;
  std::vector<std::uint32_t> lengths_;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
  std::unordered_map<std::string, std::uint32_t> ordinals_;
};

inline InvertedIndex build_index(std::vector<RetrievalUnit> units, Granularity granularity) {
  return InvertedIndex::build(std::move(units), granularity);
}

}  // namespace strata
