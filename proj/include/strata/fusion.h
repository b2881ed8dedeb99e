#pragma once

#include <cstddef>
#include <span>

#include "strata/inverted_index.h"
#include "strata/ranked_list.h"
#include "strata/topics.h"

namespace strata {

inline constexpr double kDefaultRrfK = 60.0;
inline constexpr std::size_t kDefaultRunDepth = 1000;

/// Collapses a unit-level ranking to articles: each article keeps the score of
/// its best unit. Output is re-ranked by score desc, ties by article id.
/// Throws DataError naming a malformed unit id.
RankedList max_aggregate(const RankedList& units);

/// Reciprocal rank fusion. Each list contributes 1 / (k + rank) for entries
/// with rank <= depth; output is sorted by fused score desc, ties by doc id,
/// truncated to depth. Only ranks are read, never input scores.
/// Throws DataError when the lists disagree on topic_id.
RankedList rrf(std::span<const RankedList> lists, double k = kDefaultRrfK,
               std::size_t depth = kDefaultRunDepth);

/// The three first-stage indexes built over one corpus.
struct IndexSet {
  const InvertedIndex* abstract = nullptr;
  const InvertedIndex* fulltext = nullptr;
  const InvertedIndex* paragraph = nullptr;
};

enum class FusionVariant { kFusion1, kFusion2 };

/// Top `depth` articles by BM25 over one index. Paragraph hits are
/// max-aggregated, with the unit cutoff widened until `depth` articles remain.
RankedList first_stage(const InvertedIndex& index, int topic_id,
                       std::span<const std::string> query, std::size_t depth);

/// Searches all three indexes with one query representation, max-aggregates
/// the paragraph results and fuses the three article lists with RRF.
RankedList fuse_indexes(const IndexSet& indexes, const QueryRepresentation& query,
                        std::size_t depth, double k = kDefaultRrfK);

/// fusion1: query field only. fusion2: query field plus question expansion
/// harvested with the idf threshold (idf taken from the abstract index).
RankedList fusion_run(const Topic& topic, const IndexSet& indexes, FusionVariant variant,
                      std::size_t depth = kDefaultRunDepth,
                      double idf_threshold = kDefaultIdfThreshold);

}  // namespace strata
