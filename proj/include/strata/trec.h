#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "strata/qrels.h"
#include "strata/ranked_list.h"

namespace strata {

inline constexpr std::size_t kMaxRunEntriesPerTopic = 1000;

/// A TREC run: one ranked list per topic, iterated in ascending topic order.
struct RunFile {
  std::string tag;
  std::map<int, RankedList> topics;

  friend bool operator==(const RunFile&, const RunFile&) = default;
};

/// Shortest decimal text that parses back to the same double ("12.5").
std::string format_score(double score);

/// `topic Q0 doc rank score tag` lines, topics ascending. Lists are validated
/// and limited to kMaxRunEntriesPerTopic entries.
void write_run(std::ostream& out, const RunFile& run);
std::string write_run(const RunFile& run);
/// Writes to a temporary sibling and renames it into place.
void save_run(const std::filesystem::path& path, const RunFile& run);

/// Entries keep file order within each topic; the rank column must be an
/// integer but ranks are re-assigned 1..n. Wrong column counts, increasing
/// scores, duplicate docs and overlong topics raise ParseError with the line.
RunFile parse_run(std::istream& in);
RunFile parse_run(std::string_view content);
RunFile load_run(const std::filesystem::path& path);

// Metrics. Unjudged documents are nonrelevant; "relevant" means grade > 0.

/// Graded gain, log2(rank + 1) discount, normalized by the ideal ordering of
/// the topic's qrels grades. nullopt when the topic has no relevant docs.
std::optional<double> ndcg_at_k(const RankedList& list, const Qrels& qrels, std::size_t k = 10);

/// Relevant docs in the top k divided by k.
double precision_at_k(const RankedList& list, const Qrels& qrels, std::size_t k = 5);

/// nullopt when the topic has no relevant docs.
std::optional<double> average_precision(const RankedList& list, const Qrels& qrels,
                                        std::size_t depth = kMaxRunEntriesPerTopic);

/// Judged docs in the top k divided by k.
double judged_at_k(const RankedList& list, const Qrels& qrels, std::size_t k = 5);

struct MetricRow {
  int topic_id = 0;
  double ndcg_10 = 0.0;
  double p_5 = 0.0;
  double map = 0.0;
  double judged_5 = 0.0;
};

struct EvalReport {
  std::vector<MetricRow> rows;  // ascending topic id
  MetricRow mean;               // topic_id unused
  /// Run topics that were not evaluated, with the reason.
  std::vector<std::pair<int, std::string>> skipped;
};

/// Evaluates run topics that have at least one relevant judgment.
EvalReport evaluate(const RunFile& run, const Qrels& qrels);

/// Metric names accepted by format_report.
inline constexpr std::string_view kMetricNames[] = {"ndcg_cut_10", "P_5", "map", "judged_5"};

/// Aligned text table: one row per topic, then "all".
std::string format_report_text(const EvalReport& report, const std::vector<std::string>& metrics);
/// One JSON object per line per topic, then {"topic":"all",...}.
std::string format_report_jsonl(const EvalReport& report, const std::vector<std::string>& metrics);

}  // namespace strata
