#include <gtest/gtest.h>

#include <set>

#include "fake_scorer.h"
#include "strata/pipeline.h"
#include "support.h"

using namespace strata;
namespace ts = testing_support;
using testing_support::FakeScorer;

namespace {

RunFile run_variant(RunVariant v, std::size_t jobs = 1, bool residual = false) {
  const auto& c = ts::fixture_collection();
  ReferenceScorer scorer(&c.abstract());
  RunOptions opts;
  opts.variant = v;
  opts.qrels = &ts::fixture_qrels();
  opts.residual = residual;
  const RunPipeline pipeline(c, scorer, opts);
  return pipeline.run(ts::fixture_topics(), jobs);
}

std::set<std::string> top(const RankedList& list, std::size_t n) {
  std::set<std::string> out;
  for (std::size_t i = 0; i < n && i < list.size(); ++i) out.insert(list.entries[i].doc_id);
  return out;
}

class Golden : public ::testing::TestWithParam<RunVariant> {};

}  // namespace

TEST_P(Golden, ByteIdenticalToFrozenRun) {
  const RunVariant v = GetParam();
  const auto expected = ts::read_file(ts::golden_dir() / (std::string(to_string(v)) + ".run"));
  ASSERT_FALSE(expected.empty());
  EXPECT_EQ(write_run(run_variant(v)), expected);
}

INSTANTIATE_TEST_SUITE_P(Variants, Golden,
                         ::testing::Values(RunVariant::kFusion1, RunVariant::kFusion2, RunVariant::kMonoT5,
                                           RunVariant::kDuoT5, RunVariant::kT5Lr),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Pipeline, SnapshotsReproduceInMemoryIndexes) {
  ts::TempDir dir("strata-pipeline");
  ts::fixture_collection().save(dir.path());
  const Collection loaded = Collection::load(dir.path());
  EXPECT_EQ(loaded.abstract(), ts::fixture_collection().abstract());
  EXPECT_EQ(loaded.fulltext(), ts::fixture_collection().fulltext());
  EXPECT_EQ(loaded.paragraph(), ts::fixture_collection().paragraph());
}

TEST(Pipeline, PairwiseStageKeepsMonoTopSet) {
  const auto mono = run_variant(RunVariant::kMonoT5);
  const auto duo = run_variant(RunVariant::kDuoT5);
  for (const auto& [topic, list] : mono.topics) {
    EXPECT_EQ(top(duo.topics.at(topic), kPairwiseCandidates), top(list, kPairwiseCandidates));
    EXPECT_EQ(duo.topics.at(topic).size(), list.size());
  }
}

TEST(Pipeline, MonoIsFusionOfTwoRescoredLists) {
  const auto& c = ts::fixture_collection();
  ReferenceScorer scorer(&c.abstract());
  const DocumentLookup text = [&c](const std::string& id) { return c.article_text(id); };
  RunOptions opts;
  opts.variant = RunVariant::kMonoT5;
  const RunPipeline pipeline(c, scorer, opts);
  for (const Topic& t : ts::fixture_topics()) {
    const auto f1 = fusion_run(t, c.set(), FusionVariant::kFusion1);
    const auto f2 = fusion_run(t, c.set(), FusionVariant::kFusion2);
    const RankedList lists[] = {pointwise_rerank(scorer, t.query, f1, text).list,
                                pointwise_rerank(scorer, t.query, f2, text).list};
    auto expected = rrf(lists);
    expected.tag = "monot5";
    EXPECT_EQ(pipeline.run_topic(t), expected);
  }
}

TEST(Pipeline, ResidualRunsContainNoJudgedDocuments) {
  const auto& q = ts::fixture_qrels();
  for (RunVariant v : {RunVariant::kFusion1, RunVariant::kMonoT5, RunVariant::kT5Lr}) {
    const auto run = run_variant(v, 1, true);
    for (const auto& [topic, list] : run.topics) {
      for (const auto& e : list.entries) EXPECT_FALSE(q.judged(topic, e.doc_id)) << e.doc_id;
      list.validate();
    }
  }
}

TEST(Pipeline, ResidualFirstStageIsFilteredFullRun) {
  const auto& q = ts::fixture_qrels();
  const auto full = run_variant(RunVariant::kFusion1);
  const auto residual = run_variant(RunVariant::kFusion1, 1, true);
  std::size_t kept = 0;
  for (const auto& [topic, list] : full.topics) {
    std::vector<std::string> expected;
    for (const auto& e : list.entries) {
      if (!q.judged(topic, e.doc_id)) expected.push_back(e.doc_id);
    }
    EXPECT_EQ(residual.topics.at(topic).doc_ids(), expected);
    kept += expected.size();
  }
  EXPECT_GT(kept, 0u);
}

TEST(Pipeline, ParallelTopicsMatchSequential) {
  for (RunVariant v : {RunVariant::kFusion2, RunVariant::kDuoT5, RunVariant::kT5Lr}) {
    EXPECT_EQ(run_variant(v, 4), run_variant(v, 1)) << to_string(v);
  }
}

TEST(Pipeline, FeedbackImprovesFixtureRanking) {
  const auto& q = ts::fixture_qrels();
  EXPECT_GT(evaluate(run_variant(RunVariant::kT5Lr), q).mean.ndcg_10,
            evaluate(run_variant(RunVariant::kMonoT5), q).mean.ndcg_10);
}

TEST(Pipeline, OptionValidation) {
  const auto& c = ts::fixture_collection();
  FakeScorer scorer;
  RunOptions opts;
  opts.variant = RunVariant::kT5Lr;
  EXPECT_THROW(RunPipeline(c, scorer, opts), UsageError);
  opts.variant = RunVariant::kFusion1;
  opts.residual = true;
  EXPECT_THROW(RunPipeline(c, scorer, opts), UsageError);
  opts.residual = false;
  opts.depth = 0;
  EXPECT_THROW(RunPipeline(c, scorer, opts), UsageError);
  opts.depth = 1001;
  EXPECT_THROW(RunPipeline(c, scorer, opts), UsageError);
  EXPECT_EQ(parse_variant("duot5"), RunVariant::kDuoT5);
  EXPECT_THROW(parse_variant("bm25"), UsageError);
}

TEST(Pipeline, DepthAndTag) {
  const auto& c = ts::fixture_collection();
  FakeScorer scorer;
  RunOptions opts;
  opts.variant = RunVariant::kMonoT5;
  opts.depth = 3;
  opts.tag = "mine";
  const auto run = RunPipeline(c, scorer, opts).run(ts::fixture_topics());
  ASSERT_EQ(run.topics.size(), 5u);
  EXPECT_EQ(run.tag, "mine");
  for (const auto& [topic, list] : run.topics) {
    EXPECT_EQ(list.size(), 3u);
    EXPECT_EQ(list.tag, "mine");
  }
}

TEST(Pipeline, ScorerFailurePropagates) {
  const auto& c = ts::fixture_collection();
  FakeScorer scorer;
  scorer.fail = true;
  RunOptions opts;
  opts.variant = RunVariant::kMonoT5;
  EXPECT_THROW(RunPipeline(c, scorer, opts).run(ts::fixture_topics(), 3), ScorerError);
  opts.variant = RunVariant::kFusion2;  // first-stage runs never touch the scorer
  EXPECT_NO_THROW(RunPipeline(c, scorer, opts).run(ts::fixture_topics()));
}

TEST(Pipeline, SingleClassTopicFallsBackWithWarning) {
  const auto& c = ts::fixture_collection();
  ReferenceScorer scorer(&c.abstract());
  Qrels q;
  q.add(1, "t1-r0", 2);
  q.add(1, "t1-d0", 0);
  q.add(2, "t2-r0", 2);  // positives only
  RunOptions opts;
  opts.variant = RunVariant::kT5Lr;
  opts.qrels = &q;
  const RunPipeline pipeline(c, scorer, opts);
  const auto run = pipeline.run(ts::fixture_topics());
  const auto warnings = pipeline.warnings();
  ASSERT_EQ(warnings.size(), 4u);
  EXPECT_NE(warnings[0].find("topic 2"), std::string::npos);

  RunOptions mono_opts;
  mono_opts.variant = RunVariant::kMonoT5;
  const auto mono = RunPipeline(c, scorer, mono_opts).run(ts::fixture_topics());
  EXPECT_EQ(run.topics.at(2).doc_ids(), mono.topics.at(2).doc_ids());
}
