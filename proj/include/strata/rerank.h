#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "strata/ranked_list.h"
#include "strata/scorer.h"

namespace strata {

inline constexpr std::size_t kWindowSentences = 10;
inline constexpr std::size_t kWindowStride = 5;
inline constexpr std::size_t kDefaultRerankDepth = 96;
inline constexpr std::size_t kDefaultMaxTokens = 256;
inline constexpr std::size_t kPairwiseCandidates = 50;

/// A span of consecutive sentences [first, last], both inclusive.
struct Window {
  std::size_t first = 0;
  std::size_t last = 0;
  std::string text;

  friend bool operator==(const Window&, const Window&) = default;
};

/// Sentence ranges for a text of `sentence_count` sentences: starts at
/// 0, 5, 10, ... each covering up to 10 sentences; a window whose sentences
/// are all covered by the previous kept window is dropped.
std::vector<std::pair<std::size_t, std::size_t>> window_ranges(std::size_t sentence_count);

std::vector<Window> make_windows(std::string_view text);

struct RerankOptions {
  std::size_t depth = kDefaultRerankDepth;
  std::size_t max_tokens = kDefaultMaxTokens;
  std::size_t batch_size = 64;
  /// Batches scored concurrently; only honored for thread-safe scorers.
  std::size_t max_in_flight = 1;
};

/// Returns the document text for a candidate id, or nullptr when unknown.
using DocumentLookup = std::function<const std::string*(const std::string& doc_id)>;

struct PointwiseResult {
  RankedList list;
  /// Highest-scoring window text of every rescored candidate.
  std::unordered_map<std::string, std::string> best_passage;
};

/// Scores every window of the top `depth` candidates and keeps the maximum
/// window probability as the document score. Rescored candidates are sorted
/// by score desc (ties keep prior order); the rest follow in their original
/// order with scores mapped below the rescored range.
/// Throws LookupError for a candidate without text and ScorerError on
/// scorer failure.
PointwiseResult pointwise_rerank(Scorer& scorer, std::string_view query, const RankedList& candidates,
                                 const DocumentLookup& documents, const RerankOptions& options = {});

/// Preference probabilities p(i, j) that candidate i beats candidate j.
/// The diagonal is unused.
class ScoreMatrix {
 public:
  explicit ScoreMatrix(std::size_t n = 0) : n_(n), p_(n * n, 0.0) {}

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return p_[i * n_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return p_[i * n_ + j]; }

 private:
  std::size_t n_;
  std::vector<double> p_;
};

/// s_i = sum over j != i of p(i, j) + (1 - p(j, i)).
std::vector<double> pairwise_aggregate(const ScoreMatrix& matrix);

/// Reorders the first matrix.size() candidates by aggregated score desc
/// (ties by prior rank); the remaining candidates follow in order with scores
/// mapped below.
RankedList apply_pairwise(const RankedList& candidates, const ScoreMatrix& matrix);

/// Pairwise stage over the top `top_n` candidates, each represented by its
/// best pointwise window from `passages`.
RankedList pairwise_rerank(Scorer& scorer, std::string_view query, const RankedList& candidates,
                           const std::unordered_map<std::string, std::string>& passages,
                           std::size_t top_n = kPairwiseCandidates, const RerankOptions& options = {});

/// Appends `tail` (in order) below `head`, mapping tail scores linearly into
/// [min(head) - 1, min(head) - 0.5]. Ranks are renumbered.
RankedList append_below(RankedList head, std::vector<RankedEntry> tail);

}  // namespace strata
