#include "strata/scorer.h"

#include <cmath>
#include <unordered_set>

#include "strata/inverted_index.h"
#include "strata/text.h"

namespace strata {

namespace {

constexpr double kCoverageGain = 6.0;
constexpr double kDensityGain = 2.0;
constexpr double kBias = 4.0;
constexpr double kGrid = 1048576.0;  // 2^20

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

std::string PointwiseRequest::prompt() const {
  return "Query: " + query + " Document: " + passage + " Relevant:";
}

std::string PairwiseRequest::prompt() const {
  return "Query: " + query + " Document0: " + passage_a + " Document1: " + passage_b + " Relevant:";
}

double quantize_probability(double p) { return std::round(p * kGrid) / kGrid; }

double ReferenceScorer::pointwise(std::string_view query, std::string_view passage) const {
  std::vector<std::string> query_terms;
  std::unordered_set<std::string> query_set;
  for (std::string& t : strip_stopwords(tokenize(query))) {
    if (query_set.insert(t).second) query_terms.push_back(std::move(t));
  }
  const auto passage_tokens = tokenize(passage);
  const std::unordered_set<std::string> passage_set(passage_tokens.begin(), passage_tokens.end());

  double total = 0.0;
  double matched = 0.0;
  for (const std::string& t : query_terms) {
    const double w = idf_source_ ? idf_source_->idf(t) : 1.0;
    total += w;
    if (passage_set.contains(t)) matched += w;
  }
  const double coverage = total > 0.0 ? matched / total : 0.0;

  std::size_t hits = 0;
  for (const std::string& p : passage_tokens) hits += query_set.contains(p) ? 1 : 0;
  const double density =
      passage_tokens.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(passage_tokens.size());

  return quantize_probability(sigmoid(kCoverageGain * coverage + kDensityGain * density - kBias));
}

double ReferenceScorer::pairwise(std::string_view query, std::string_view passage_a,
                                 std::string_view passage_b) const {
  const double diff = pointwise(query, passage_a) - pointwise(query, passage_b);
  // Evaluate the sigmoid only for non-negative arguments; the mirrored pair
  // then sums to one exactly.
  if (diff >= 0.0) return quantize_probability(sigmoid(diff));
  return 1.0 - quantize_probability(sigmoid(-diff));
}

std::vector<double> ReferenceScorer::score(std::span<const PointwiseRequest> batch) {
  std::vector<double> out;
  out.reserve(batch.size());
  for (const PointwiseRequest& r : batch) out.push_back(pointwise(r.query, r.passage));
  return out;
}

std::vector<double> ReferenceScorer::score(std::span<const PairwiseRequest> batch) {
  std::vector<double> out;
  out.reserve(batch.size());
  for (const PairwiseRequest& r : batch) out.push_back(pairwise(r.query, r.passage_a, r.passage_b));
  return out;
}

}  // namespace strata
