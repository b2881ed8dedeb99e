#pragma once

#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "strata/inverted_index.h"

namespace strata {

struct Topic {
  int topic_id = 0;
  std::string query;
  std::string question;
  std::string narrative;

  friend bool operator==(const Topic&, const Topic&) = default;
};

enum class TermSource { kQueryField, kQuestionExpansion };

struct QueryTerm {
  std::string term;
  TermSource source = TermSource::kQueryField;

  friend bool operator==(const QueryTerm&, const QueryTerm&) = default;
};

/// Keyword query for one topic: stopword-free, duplicate-free.
struct QueryRepresentation {
  int topic_id = 0;
  std::vector<QueryTerm> terms;

  std::vector<std::string> tokens() const;

  friend bool operator==(const QueryRepresentation&, const QueryRepresentation&) = default;
};

/// Accepts either one JSON object per line (`number`, `query`, `question`,
/// `narrative`) or the TREC XML layout (`<topic number="..">` with `<query>`,
/// `<question>`, `<narrative>` children). Topics come back in file order.
std::vector<Topic> parse_topics(std::string_view content);
std::vector<Topic> load_topics(const std::filesystem::path& path);

/// Harvests rare terms from a natural-language question. Implementations must
/// return stopword-free, duplicate-free tokens in question order.
class KeyTermExtractor {
 public:
  virtual ~KeyTermExtractor() = default;
  virtual std::vector<std::string> extract(std::string_view question) = 0;
};

/// Default threshold: terms occurring in fewer than ~10% of units.
inline const double kDefaultIdfThreshold = 2.302585092994046;  // ln 10

inline constexpr double kNoExpansion = std::numeric_limits<double>::infinity();

/// Question tokens minus stopwords with idf >= threshold, order-preserving and
/// deduplicated. Unknown terms have maximal idf and are kept.
std::vector<std::string> extract_key_terms(std::string_view question, const InvertedIndex& idf_source,
                                           double threshold);

class IdfKeyTermExtractor final : public KeyTermExtractor {
 public:
  IdfKeyTermExtractor(const InvertedIndex& idf_source, double threshold)
      : index_(&idf_source), threshold_(threshold) {}

  std::vector<std::string> extract(std::string_view question) override {
    return extract_key_terms(question, *index_, threshold_);
  }

 private:
  const InvertedIndex* index_;
  double threshold_;
};

/// Query-field tokens minus stopwords, followed by question expansion terms
/// not already present.
QueryRepresentation generate_query(const Topic& topic, std::span<const std::string> expansion);
QueryRepresentation generate_query(const Topic& topic, const InvertedIndex& idf_source,
                                   double threshold);
QueryRepresentation generate_query(const Topic& topic, KeyTermExtractor& extractor);

}  // namespace strata
