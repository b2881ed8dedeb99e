#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "strata/article.h"
#include "strata/feedback.h"
#include "strata/fusion.h"
#include "strata/inverted_index.h"
#include "strata/qrels.h"
#include "strata/rerank.h"
#include "strata/scorer.h"
#include "strata/topics.h"
#include "strata/trec.h"

namespace strata {

/// The abstract, fulltext and paragraph indexes of one corpus. Article-level
/// text for reranking comes from the fulltext index (title, abstract and all
/// paragraphs); classifier text from the abstract index (title + abstract).
class Collection {
 public:
  Collection(InvertedIndex abstract, InvertedIndex fulltext, InvertedIndex paragraph);

  static Collection build(const std::vector<Article>& articles);
  /// Reads abstract.idx, fulltext.idx and paragraph.idx from `dir`.
  static Collection load(const std::filesystem::path& dir);
  void save(const std::filesystem::path& dir) const;

  static std::string snapshot_name(Granularity g);

  const InvertedIndex& abstract() const { return abstract_; }
  const InvertedIndex& fulltext() const { return fulltext_; }
  const InvertedIndex& paragraph() const { return paragraph_; }
  const InvertedIndex& index(Granularity g) const;
  IndexSet set() const { return {&abstract_, &fulltext_, &paragraph_}; }

  const std::string* article_text(const std::string& article_id) const;
  const std::string* title_abstract(const std::string& article_id) const;

 private:
  InvertedIndex abstract_;
  InvertedIndex fulltext_;
  InvertedIndex paragraph_;
};

enum class RunVariant { kFusion1, kFusion2, kMonoT5, kDuoT5, kT5Lr };

std::string_view to_string(RunVariant v);
RunVariant parse_variant(std::string_view name);  // throws UsageError

struct RunOptions {
  RunVariant variant = RunVariant::kFusion1;
  std::size_t depth = kDefaultRunDepth;
  double idf_threshold = kDefaultIdfThreshold;
  double rrf_k = kDefaultRrfK;
  RerankOptions rerank;
  std::size_t pairwise_candidates = kPairwiseCandidates;
  double alpha = 0.5;
  /// Judgments for t5_lr training and residual filtering.
  const Qrels* qrels = nullptr;
  bool residual = false;
  /// Output tag; the variant name when empty.
  std::string tag;
  /// Overrides the idf-threshold question expansion used by fusion2.
  KeyTermExtractor* extractor = nullptr;
};

/// Composes the run recipes:
///   fusion1 / fusion2  RRF over the three indexes (query field / expanded)
///   monot5             RRF(pointwise(fusion1), pointwise(fusion2))
///   duot5              pairwise stage over the top candidates of monot5
///   t5_lr              per-topic classifier interpolated with monot5 scores
/// The reranker query is the topic's query field.
class RunPipeline {
 public:
  RunPipeline(const Collection& collection, Scorer& scorer, RunOptions options);

  RankedList run_topic(const Topic& topic) const;

  /// Topics processed by up to `jobs` threads; the first failure is rethrown.
  RunFile run(const std::vector<Topic>& topics, std::size_t jobs = 1) const;

  /// Warnings collected during the last run (e.g. topics without feedback).
  std::vector<std::string> warnings() const;

 private:
  RankedList first_stage_run(const Topic& topic, FusionVariant variant) const;
  RankedList finish(RankedList list) const;

  const Collection* collection_;
  Scorer* scorer_;
  RunOptions options_;
  std::shared_ptr<const FeatureSpace> features_;
  mutable std::mutex warnings_mutex_;
  mutable std::vector<std::pair<int, std::string>> warnings_;
};

}  // namespace strata
