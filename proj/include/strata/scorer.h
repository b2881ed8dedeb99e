#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace strata {

class InvertedIndex;

struct PointwiseRequest {
  std::string query;
  std::string passage;

  /// "Query: {q} Document: {d} Relevant:"
  std::string prompt() const;
};

struct PairwiseRequest {
  std::string query;
  std::string passage_a;
  std::string passage_b;

  /// "Query: {q} Document0: {d_i} Document1: {d_j} Relevant:"
  std::string prompt() const;
};

/// A relevance model. Both modes return one probability in [0, 1] per request,
/// in request order, or throw ScorerError with the failing batch index.
/// The pairwise probability is that passage_a is more relevant than passage_b.
class Scorer {
 public:
  virtual ~Scorer() = default;

  virtual std::vector<double> score(std::span<const PointwiseRequest> batch) = 0;
  virtual std::vector<double> score(std::span<const PairwiseRequest> batch) = 0;

  /// True when concurrent calls to score() are safe.
  virtual bool thread_safe() const { return false; }
};

/// Deterministic stand-in for a neural reranker.
///
/// Let Q be the distinct non-stopword query tokens, w(t) their idf (1.0 for
/// every term when no idf source is given) and P the passage tokens.
///
///   coverage = sum_{t in Q, t in P} w(t) / sum_{t in Q} w(t)    (0 if Q empty)
///   density  = |{p in P : p in Q}| / |P|                         (0 if P empty)
///   pointwise = sigmoid(6 * coverage + 2 * density - 4)
///   pairwise(a, b) = sigmoid(pointwise(a) - pointwise(b))
///
/// Every output is rounded to a multiple of 2^-20, and pairwise(b, a) is
/// computed as exactly 1 - pairwise(a, b), so p_ij + p_ji == 1 holds bitwise.
class ReferenceScorer final : public Scorer {
 public:
  explicit ReferenceScorer(const InvertedIndex* idf_source = nullptr) : idf_source_(idf_source) {}

  double pointwise(std::string_view query, std::string_view passage) const;
  double pairwise(std::string_view query, std::string_view passage_a,
                  std::string_view passage_b) const;

  std::vector<double> score(std::span<const PointwiseRequest> batch) override;
  std::vector<double> score(std::span<const PairwiseRequest> batch) override;
  bool thread_safe() const override { return true; }

 private:
  const InvertedIndex* idf_source_;
};

/// Rounds to the nearest multiple of 2^-20.
double quantize_probability(double p);

}  // namespace strata
