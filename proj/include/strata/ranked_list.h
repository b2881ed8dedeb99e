#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace strata {

struct RankedEntry {
  std::string doc_id;
  int rank = 0;  // 1-based
  double score = 0.0;

  friend bool operator==(const RankedEntry&, const RankedEntry&) = default;
};

/// A per-topic ranking. Ranks are 1..n contiguous, scores non-increasing and
/// doc ids unique.
struct RankedList {
  int topic_id = 0;
  std::string tag;
  std::vector<RankedEntry> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }

  std::vector<std::string> doc_ids() const;

  /// Re-assigns ranks 1..n in current entry order.
  void renumber();

  /// Builds a list from (doc, score) pairs already in ranked order.
  static RankedList from_scored(int topic_id, std::string tag,
                                std::vector<std::pair<std::string, double>> scored);

  /// Throws DataError on the first invariant violation.
  void validate() const;

  friend bool operator==(const RankedList&, const RankedList&) = default;
};

}  // namespace strata
