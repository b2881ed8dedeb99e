#include "strata/pipeline.h"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

#include "strata/errors.h"

namespace strata {

Collection::Collection(InvertedIndex abstract, InvertedIndex fulltext, InvertedIndex paragraph)
    : abstract_(std::move(abstract)), fulltext_(std::move(fulltext)), paragraph_(std::move(paragraph)) {
  if (abstract_.granularity() != Granularity::kAbstract || fulltext_.granularity() != Granularity::kFullText ||
      paragraph_.granularity() != Granularity::kParagraph) {
    throw DataError("index granularities do not match abstract/fulltext/paragraph");
  }
}

Collection Collection::build(const std::vector<Article>& articles) {
  return Collection(InvertedIndex::build(generate_units(articles, Granularity::kAbstract), Granularity::kAbstract),
                    InvertedIndex::build(generate_units(articles, Granularity::kFullText), Granularity::kFullText),
                    InvertedIndex::build(generate_units(articles, Granularity::kParagraph), Granularity::kParagraph));
}

std::string Collection::snapshot_name(Granularity g) { return std::string(to_string(g)) + ".idx"; }

Collection Collection::load(const std::filesystem::path& dir) {
  return Collection(InvertedIndex::load(dir / snapshot_name(Granularity::kAbstract)),
                    InvertedIndex::load(dir / snapshot_name(Granularity::kFullText)),
                    InvertedIndex::load(dir / snapshot_name(Granularity::kParagraph)));
}

void Collection::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  abstract_.save(dir / snapshot_name(Granularity::kAbstract));
  fulltext_.save(dir / snapshot_name(Granularity::kFullText));
  paragraph_.save(dir / snapshot_name(Granularity::kParagraph));
}

const InvertedIndex& Collection::index(Granularity g) const {
  switch (g) {
    case Granularity::kAbstract: return abstract_;
    case Granularity::kFullText: return fulltext_;
    case Granularity::kParagraph: return paragraph_;
  }
  return abstract_;
}

const std::string* Collection::article_text(const std::string& article_id) const {
  auto doc = fulltext_.ordinal(article_id);
  return doc ? &fulltext_.text(*doc) : nullptr;
}

const std::string* Collection::title_abstract(const std::string& article_id) const {
  auto doc = abstract_.ordinal(article_id);
  return doc ? &abstract_.text(*doc) : nullptr;
}

std::string_view to_string(RunVariant v) {
  switch (v) {
    case RunVariant::kFusion1: return "fusion1";
    case RunVariant::kFusion2: return "fusion2";
    case RunVariant::kMonoT5: return "monot5";
    case RunVariant::kDuoT5: return "duot5";
    case RunVariant::kT5Lr: return "t5_lr";
  }
  return "fusion1";
}

RunVariant parse_variant(std::string_view name) {
  for (RunVariant v : {RunVariant::kFusion1, RunVariant::kFusion2, RunVariant::kMonoT5, RunVariant::kDuoT5,
                       RunVariant::kT5Lr}) {
    if (to_string(v) == name) return v;
  }
  throw UsageError("unknown run variant '" + std::string(name) + "'");
}

RunPipeline::RunPipeline(const Collection& collection, Scorer& scorer, RunOptions options)
    : collection_(&collection), scorer_(&scorer), options_(std::move(options)) {
  if (options_.variant == RunVariant::kT5Lr && !options_.qrels) {
    throw UsageError("variant t5_lr needs judgments (--qrels)");
  }
  if (options_.residual && !options_.qrels) throw UsageError("--residual needs judgments (--qrels)");
  if (options_.depth == 0 || options_.depth > kMaxRunEntriesPerTopic) {
    throw UsageError("run depth must lie in [1, " + std::to_string(kMaxRunEntriesPerTopic) + "]");
  }
  if (options_.tag.empty()) options_.tag = std::string(to_string(options_.variant));
  if (options_.variant == RunVariant::kT5Lr) features_ = FeatureSpace::from_index(collection.abstract());
}

RankedList RunPipeline::first_stage_run(const Topic& topic, FusionVariant variant) const {
  RankedList list;
  if (variant == FusionVariant::kFusion2 && options_.extractor) {
    list = fuse_indexes(collection_->set(), generate_query(topic, *options_.extractor), options_.depth,
                        options_.rrf_k);
  } else {
    const double threshold = variant == FusionVariant::kFusion1 ? kNoExpansion : options_.idf_threshold;
    list = fuse_indexes(collection_->set(), generate_query(topic, collection_->abstract(), threshold),
                        options_.depth, options_.rrf_k);
  }
  // Judged documents leave the pool before any reranking depth is spent.
  if (options_.residual) list = residual_filter(list, *options_.qrels);
  return list;
}

RankedList RunPipeline::finish(RankedList list) const {
  if (options_.residual) list = residual_filter(list, *options_.qrels);
  if (list.size() > options_.depth) list.entries.resize(options_.depth);
  list.tag = options_.tag;
  return list;
}

RankedList RunPipeline::run_topic(const Topic& topic) const {
  if (options_.variant == RunVariant::kFusion1) return finish(first_stage_run(topic, FusionVariant::kFusion1));
  if (options_.variant == RunVariant::kFusion2) return finish(first_stage_run(topic, FusionVariant::kFusion2));

  const DocumentLookup article_text = [this](const std::string& id) { return collection_->article_text(id); };
  const PointwiseResult mono1 =
      pointwise_rerank(*scorer_, topic.query, first_stage_run(topic, FusionVariant::kFusion1), article_text,
                       options_.rerank);
  const PointwiseResult mono2 =
      pointwise_rerank(*scorer_, topic.query, first_stage_run(topic, FusionVariant::kFusion2), article_text,
                       options_.rerank);
  const RankedList lists[] = {mono1.list, mono2.list};
  RankedList mono = rrf(lists, options_.rrf_k, options_.depth);

  if (options_.variant == RunVariant::kMonoT5) return finish(std::move(mono));

  if (options_.variant == RunVariant::kDuoT5) {
    auto passages = mono1.best_passage;
    passages.insert(mono2.best_passage.begin(), mono2.best_passage.end());
    // RRF can lift a document that neither pointwise pass rescored into the
    // pairwise pool; give it a best window first.
    RankedList missing;
    missing.topic_id = topic.topic_id;
    const std::size_t pool = std::min(options_.pairwise_candidates, mono.size());
    for (std::size_t i = 0; i < pool; ++i) {
      if (!passages.contains(mono.entries[i].doc_id)) missing.entries.push_back(mono.entries[i]);
    }
    if (!missing.empty()) {
      missing.renumber();
      RerankOptions all = options_.rerank;
      all.depth = missing.size();
      auto extra = pointwise_rerank(*scorer_, topic.query, missing, article_text, all);
      passages.insert(extra.best_passage.begin(), extra.best_passage.end());
    }
    return finish(pairwise_rerank(*scorer_, topic.query, mono, passages, options_.pairwise_candidates,
                                  options_.rerank));
  }

  // t5_lr
  const TextLookup title_abstract = [this](const std::string& id) { return collection_->title_abstract(id); };
  try {
    const FeedbackModel model =
        train_classifier(topic.topic_id, *options_.qrels, title_abstract, features_);
    return finish(classify_interpolate(model, mono, title_abstract, options_.alpha));
  } catch (const SingleClassError& e) {
    std::lock_guard lock(warnings_mutex_);
    warnings_.emplace_back(topic.topic_id, e.what());
    return finish(std::move(mono));
  }
}

RunFile RunPipeline::run(const std::vector<Topic>& topics, std::size_t jobs) const {
  {
    std::lock_guard lock(warnings_mutex_);
    warnings_.clear();
  }
  std::vector<RankedList> results(topics.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= topics.size()) return;
      {
        std::lock_guard lock(failure_mutex);
        if (failure) return;
      }
      try {
        results[i] = run_topic(topics[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const std::size_t threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(1, topics.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  RunFile run;
  run.tag = options_.tag;
  for (RankedList& list : results) {
    const int id = list.topic_id;
    run.topics.emplace(id, std::move(list));
  }
  return run;
}

std::vector<std::string> RunPipeline::warnings() const {
  std::lock_guard lock(warnings_mutex_);
  auto sorted = warnings_;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::string> out;
  for (auto& [topic, message] : sorted) out.push_back(std::move(message));
  return out;
}

}  // namespace strata
