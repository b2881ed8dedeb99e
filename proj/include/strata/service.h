#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "strata/article.h"
#include "strata/pipeline.h"
#include "strata/rerank.h"
#include "strata/scorer.h"

namespace strata {

inline constexpr std::size_t kFacetDepth = 500;
inline constexpr std::size_t kDefaultPageSize = 10;
inline constexpr std::size_t kMaxPageSize = 50;
inline constexpr std::size_t kDefaultHighlights = 3;

struct ServiceState;

struct SearchRequest {
  std::string query;
  std::optional<int> year_from;
  std::optional<int> year_to;
  // Multi-valued filters: a result must match one value of every non-empty list.
  std::vector<std::string> journals;
  std::vector<std::string> sources;
  std::vector<std::string> authors;
  std::size_t page = 1;
  std::size_t page_size = kDefaultPageSize;
  std::string preset = "default";
};

/// Builds a request from query parameters (repeated keys add filter values).
/// Throws UsageError on malformed numbers and unknown keys are ignored.
SearchRequest parse_search_request(const std::vector<std::pair<std::string, std::string>>& params);

/// One highlighted sentence. paragraph_index is empty for the abstract;
/// [begin, end) are byte offsets into that abstract or paragraph.
struct Highlight {
  std::optional<std::size_t> paragraph_index;
  std::size_t sentence_index = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  double score = 0.0;

  friend bool operator==(const Highlight&, const Highlight&) = default;
};

/// Scores each abstract and paragraph sentence by the idf mass of distinct
/// non-stopword query terms it contains, divided by the mass of all query
/// terms. Returns the best `m` sentences with score > 0, ties in document
/// order, listed in document order.
std::vector<Highlight> highlight(std::string_view query, const Article& article, const InvertedIndex& idf_source,
                                 std::size_t m = kDefaultHighlights);

struct SearchResult {
  const Article* article = nullptr;
  double score = 0.0;
  std::vector<Highlight> highlights;
};

/// field -> value -> count for "dates" (year), "authors", "journals", "sources".
using FacetCounts = std::map<std::string, std::map<std::string, std::size_t>>;

/// Missing values count under "unknown"; every author of an article counts.
FacetCounts facet_counts(std::span<const Article* const> articles);

struct SearchResponse {
  std::vector<SearchResult> results;
  FacetCounts facets;
  std::size_t total = 0;  // filtered result count before pagination
  bool degraded = false;
  std::size_t page = 1;
  std::size_t page_size = kDefaultPageSize;
  /// Owns the articles that results point into.
  std::shared_ptr<const ServiceState> snapshot;
};

/// Immutable corpus + indexes shared by concurrent requests.
struct ServiceState {
  std::vector<Article> articles;
  std::unordered_map<std::string, const Article*> by_id;
  std::shared_ptr<const Collection> collection;
  /// FNV-1a over the serialized articles, hex.
  std::string corpus_fingerprint;

  /// Checks that the indexes cover exactly the given articles.
  static std::shared_ptr<const ServiceState> create(std::vector<Article> articles,
                                                    std::shared_ptr<const Collection> collection);
  /// Loads the corpus and either reads snapshots from `index_dir` or builds them.
  static std::shared_ptr<const ServiceState> load(const std::filesystem::path& corpus,
                                                  const std::optional<std::filesystem::path>& index_dir);

  const Article* article(const std::string& id) const;
};

/// A bounded set of scorer instances. Each call checks one out, so at most
/// `size` scoring calls run at once. An instance that fails is discarded and
/// recreated from the factory on the next checkout.
class ScorerPool final : public Scorer {
 public:
  using Factory = std::function<std::unique_ptr<Scorer>()>;

  ScorerPool(Factory factory, std::size_t size);

  std::vector<double> score(std::span<const PointwiseRequest> batch) override;
  std::vector<double> score(std::span<const PairwiseRequest> batch) override;
  bool thread_safe() const override { return true; }

 private:
  template <typename Request>
  std::vector<double> score_with(std::span<const Request> batch);

  Factory factory_;
  std::mutex mutex_;
  std::condition_variable available_;
  std::vector<std::unique_ptr<Scorer>> idle_;
  std::size_t free_slots_;
};

struct ServiceOptions {
  std::size_t rerank_depth = kDefaultRerankDepth;
  std::size_t max_tokens = kDefaultMaxTokens;
};

/// Search presets:
///   default, paragraph  paragraph BM25 -> max_aggregate -> pointwise rerank
///   abstract            abstract BM25 -> pointwise rerank
///   fulltext            fulltext BM25 -> pointwise rerank
///   bm25                paragraph BM25 -> max_aggregate, no rerank
class SearchService {
 public:
  SearchService(std::shared_ptr<const ServiceState> state, Scorer& scorer, ServiceOptions options = {});

  /// UsageError for an empty query, unknown preset or bad paging.
  SearchResponse search(const SearchRequest& request) const;

  /// LookupError for an unknown id. The snapshot keeps the article alive.
  std::pair<std::shared_ptr<const ServiceState>, const Article*> article(const std::string& id) const;

  std::shared_ptr<const ServiceState> state() const;
  /// Requests already running finish against the previous snapshot.
  void replace_state(std::shared_ptr<const ServiceState> state);

 private:
  mutable std::mutex state_mutex_;
  std::shared_ptr<const ServiceState> state_;
  Scorer* scorer_;
  ServiceOptions options_;
};

std::string search_response_json(const SearchResponse& response);
std::string article_json(const Article& article);

struct HttpOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::size_t threads = 32;
  std::optional<std::filesystem::path> ui_dir;
  std::string version = "dev";
};

/// GET /api/search, GET /api/article/{id}, GET /healthz; errors as
/// {"error": "..."} with 400, 404 or 500.
class HttpServer {
 public:
  HttpServer(SearchService& service, HttpOptions options);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds the socket and returns the bound port. Throws Error on failure.
  int bind();
  /// Serves until stop(); call bind() first.
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace strata
