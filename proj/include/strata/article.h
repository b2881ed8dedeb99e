#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace strata {

/// One scientific article as ingested from the corpus file.
struct Article {
  std::string article_id;
  std::string title;
  std::string abstract;
  std::vector<std::string> paragraphs;  // empty: no full text available
  std::vector<std::string> authors;
  std::optional<std::string> journal;
  std::optional<std::string> source;
  std::optional<std::string> publish_time;  // "YYYY-MM-DD" or "YYYY"
  std::optional<std::string> url;

  /// Leading four-digit year of publish_time, if present.
  std::optional<int> year() const;

  friend bool operator==(const Article&, const Article&) = default;
};

enum class Granularity { kAbstract, kFullText, kParagraph };

std::string_view to_string(Granularity g);
Granularity parse_granularity(std::string_view name);  // throws UsageError

/// An indexable "document" derived from an article.
struct RetrievalUnit {
  std::string unit_id;
  std::string article_id;
  Granularity granularity = Granularity::kAbstract;
  std::string text;
  std::optional<std::size_t> paragraph_index;

  friend bool operator==(const RetrievalUnit&, const RetrievalUnit&) = default;
};

/// Parses one corpus line. Throws ParseError for malformed JSON or wrong field
/// types and RejectedRecord when `id` or `title` is missing or empty, or the
/// id cannot be used as a run-file token.
Article parse_article(std::string_view line, std::size_t line_number = 0);

/// Inverse of parse_article for the retained fields; no trailing newline.
std::string serialize_article(const Article& article);

/// Derives retrieval units. Paragraph granularity yields n + 1 units for an
/// article with n paragraphs; the extra unit is title + abstract and carries
/// the bare article id.
std::vector<RetrievalUnit> generate_units(const Article& article, Granularity g);

std::vector<RetrievalUnit> generate_units(const std::vector<Article>& articles,
                                          Granularity g);

/// "article.3" -> ("article", 3); "article" -> ("article", nullopt).
/// Throws DataError on an empty id, an empty article part, or a trailing '.'.
std::pair<std::string, std::optional<std::size_t>> split_unit_id(std::string_view unit_id);

struct CorpusLoad {
  std::vector<Article> articles;
  /// (line number, reason) for each record rejected at ingest.
  std::vector<std::pair<std::size_t, std::string>> rejected;
};

/// Reads a JSON-lines corpus. Blank lines are skipped, rejected records are
/// collected, malformed lines and duplicate ids throw.
CorpusLoad read_corpus(std::istream& in);
CorpusLoad load_corpus(const std::filesystem::path& path);

}  // namespace strata
