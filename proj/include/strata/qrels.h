#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace strata {

struct Judgment {
  int grade = 0;          // 0, 1 or 2
  std::string iteration;  // second qrels column, kept verbatim for writing

  friend bool operator==(const Judgment&, const Judgment&) = default;
};

/// Graded relevance judgments keyed by topic, then doc id.
class Qrels {
 public:
  using TopicJudgments = std::map<std::string, Judgment, std::less<>>;

  /// Throws DataError if (topic, doc) is already judged or grade is out of range.
  void add(int topic_id, std::string doc_id, int grade, std::string iteration = "0");

  std::optional<int> grade(int topic_id, std::string_view doc_id) const;
  bool judged(int topic_id, std::string_view doc_id) const { return grade(topic_id, doc_id).has_value(); }

  bool has_topic(int topic_id) const { return topics_.contains(topic_id); }
  /// Empty map for unknown topics.
  const TopicJudgments& topic(int topic_id) const;
  std::vector<int> topic_ids() const;

  /// Number of docs with grade > 0.
  std::size_t relevant_count(int topic_id) const;
  std::size_t size() const;

  /// Union; judgments in `other` win on conflict.
  Qrels merged_with(const Qrels& other) const;

  friend bool operator==(const Qrels&, const Qrels&) = default;

 private:
  std::map<int, TopicJudgments> topics_;
};

struct QrelsLoad {
  Qrels qrels;
  /// One message per grade clamped into {0,1,2}.
  std::vector<std::string> warnings;
};

/// Whitespace-separated `topic iteration doc grade` lines.
QrelsLoad read_qrels(std::istream& in);
QrelsLoad load_qrels(const std::filesystem::path& path);
void write_qrels(std::ostream& out, const Qrels& qrels);

}  // namespace strata
