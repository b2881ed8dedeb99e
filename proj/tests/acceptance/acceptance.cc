// Acceptance runner: one PASS/FAIL line per primary criterion, each checked
// against independent oracles at the stated tolerance and time budget.
// Exit status is nonzero if any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <future>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "fake_scorer.h"
#include "oracles.h"
#include "strata/feedback.h"
#include "strata/fusion.h"
#include "strata/inverted_index.h"
#include "strata/pipeline.h"
#include "strata/rerank.h"
#include "strata/service.h"
#include "strata/trec.h"
#include "support.h"

using namespace strata;
namespace ts = testing_support;

namespace {

/// Collects the first few mismatches of a criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    ++checks_;
    if (ok) return;
    ++failures_;
    if (notes_.size() < 3) notes_.push_back(what);
  }
  bool ok() const { return failures_ == 0; }
  std::string summary() const {
    std::string s = std::to_string(checks_) + " checks";
    if (failures_ > 0) s += ", " + std::to_string(failures_) + " failed";
    for (const auto& n : notes_) s += "; " + n;
    return s;
  }

 private:
  std::size_t checks_ = 0;
  std::size_t failures_ = 0;
  std::vector<std::string> notes_;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

// ---- BM25 -----------------------------------------------------------------

void bm25_suite(Check& c) {
  {
    // Hand case: a single unit "a a b" (dl = avgdl = 3), query "a":
    //   idf = ln(1 + 0.5 / 1.5) = ln(4/3), tf = 2
    //   score = ln(4/3) * 2 * 1.9 / (2 + 0.9) = 0.376963 (stated as 0.37697 +- 1e-4)
    RetrievalUnit u;
    u.unit_id = u.article_id = "only";
    u.text = "a a b";
    const auto index = InvertedIndex::build({u}, Granularity::kAbstract);
    const std::vector<std::string> q{"a"};
    const double got = index.bm25_score(q, "only");
    const double expected = std::log(4.0 / 3.0) * 3.8 / 2.9;
    c.expect(std::abs(got - 0.37697) <= 1e-4 && std::abs(got - expected) < 1e-12,
             "hand case gave " + fmt(got));
  }
  oracle::Rng rng(20240101);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t vocab = rng.between(1, 30);
    const std::size_t n = rng.between(1, 50);
    oracle::Bm25Corpus corpus;
    std::vector<RetrievalUnit> units;
    for (std::size_t u = 0; u < n; ++u) {
      std::vector<std::string> toks;
      std::string text;
      for (std::size_t i = rng.between(1, 25); i > 0; --i) {
        toks.push_back("w" + std::to_string(rng.below(vocab)));
        text += toks.back() + " ";
      }
      char id[32];
      std::snprintf(id, sizeof(id), "u%03zu", u);
      corpus.ids.push_back(id);
      corpus.tokens.push_back(toks);
      RetrievalUnit unit;
      unit.unit_id = unit.article_id = id;
      unit.text = text;
      units.push_back(std::move(unit));
    }
    const auto index = InvertedIndex::build(units, Granularity::kAbstract);
    std::vector<std::string> query;
    for (std::size_t i = rng.between(1, 5); i > 0; --i) query.push_back("w" + std::to_string(rng.below(vocab + 2)));
    const std::size_t k = rng.between(1, n + 3);
    const auto expected = oracle::bm25_search(corpus, query, k);
    const auto got = index.search(query, k);
    bool same = got.size() == expected.size();
    for (std::size_t i = 0; same && i < got.size(); ++i) {
      same = got[i].unit_id == expected[i].first && std::abs(got[i].score - expected[i].second) <= 1e-9;
    }
    c.expect(same, "corpus " + std::to_string(trial) + " differs from exhaustive scorer");
  }
}

// ---- RRF ------------------------------------------------------------------

RankedList list_from(int topic, const oracle::Ranking& docs, const std::vector<double>& scores) {
  RankedList l;
  l.topic_id = topic;
  l.tag = "t";
  for (std::size_t i = 0; i < docs.size(); ++i) l.entries.push_back({docs[i], static_cast<int>(i + 1), scores[i]});
  return l;
}

void rrf_suite(Check& c) {
  oracle::Rng rng(61);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t pool = rng.between(1, 60);
    const std::size_t m = rng.between(1, 5);
    std::vector<RankedList> lists;
    std::vector<oracle::Ranking> rankings;
    std::vector<RankedList> rescaled;
    for (std::size_t l = 0; l < m; ++l) {
      oracle::Ranking docs;
      for (std::size_t d = 0; d < pool; ++d) docs.push_back("d" + std::to_string(d));
      rng.shuffle(docs);
      docs.resize(rng.between(0, pool));
      std::vector<double> scores(docs.size());
      double s = rng.uniform(10, 20);
      for (double& x : scores) x = (s -= rng.uniform(0, 1));
      std::vector<double> warped(docs.size());
      for (std::size_t i = 0; i < docs.size(); ++i) warped[i] = std::exp(scores[i]) * 3.0 - 7.0;
      lists.push_back(list_from(4, docs, scores));
      rescaled.push_back(list_from(4, docs, warped));
      rankings.push_back(docs);
    }
    const std::size_t depth = rng.between(1, 80);
    const RankedList fused = rrf(lists, 60.0, depth);
    const auto expected = oracle::rrf(rankings, 60.0, depth);
    bool same = fused.size() == expected.size();
    for (std::size_t i = 0; same && i < expected.size(); ++i) {
      same = fused.entries[i].doc_id == expected[i].first && fused.entries[i].score == expected[i].second;
    }
    c.expect(same, "formula mismatch in trial " + std::to_string(trial));

    auto shuffled = lists;
    rng.shuffle(shuffled);
    c.expect(rrf(shuffled, 60.0, depth) == fused, "list order changed the fusion");
    c.expect(rrf(rescaled, 60.0, depth) == fused, "monotone rescaling changed the fusion");
  }
}

// ---- Pairwise aggregation -------------------------------------------------

void pairwise_suite(Check& c) {
  oracle::Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + trial % 49;  // covers 2..50
    oracle::Matrix p(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) p[i][j] = rng.uniform();
    std::vector<std::string> ids;
    std::unordered_map<std::string, std::string> passages;
    for (std::size_t i = 0; i < n; ++i) {
      ids.push_back("c" + std::to_string(i));
      passages[ids.back()] = std::to_string(i);
    }
    ts::FakeScorer scorer({}, [&p](const PairwiseRequest& r) {
      return p[std::stoul(r.passage_a)][std::stoul(r.passage_b)];
    });
    const auto got = pairwise_rerank(scorer, "q", ts::make_list(1, ids), passages, n).doc_ids();
    const auto order = oracle::order_by(oracle::pairwise_scores(p));
    bool same = got.size() == n;
    for (std::size_t r = 0; same && r < n; ++r) same = got[r] == ids[order[r]];
    c.expect(same, "ordering differs from brute force at n = " + std::to_string(n));

    // Antisymmetric matrix on a 2^-20 grid: the sum identity is exact.
    ScoreMatrix anti(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        anti(i, j) = std::ldexp(static_cast<double>(rng.between(0, 1u << 20)), -20);
        anti(j, i) = 1.0 - anti(i, j);
      }
    }
    double total = 0.0;
    for (double s : pairwise_aggregate(anti)) total += s;
    c.expect(total == static_cast<double>(n * (n - 1)), "sum identity off at n = " + std::to_string(n));
  }
}

// ---- Windows --------------------------------------------------------------

void window_suite(Check& c) {
  for (std::size_t n = 0; n <= 40; ++n) {
    std::string text;
    for (std::size_t s = 0; s < n; ++s) text += "Sentence number " + std::to_string(s) + ". ";
    const auto windows = make_windows(text);
    const auto expected = oracle::windows(n);
    bool same = windows.size() == expected.size();
    for (std::size_t i = 0; same && i < expected.size(); ++i) {
      same = windows[i].first == expected[i].first && windows[i].last == expected[i].second;
    }
    c.expect(same, "windows differ for " + std::to_string(n) + " sentences");
  }
}

// ---- Metrics --------------------------------------------------------------

void metrics_suite(Check& c) {
  {
    Qrels q;
    q.add(1, "r", 1);
    const double ndcg = *ndcg_at_k(ts::make_list(1, {"n", "r"}), q, 10);
    c.expect(std::abs(ndcg - 0.6309) < 1e-4 && std::abs(ndcg - 1.0 / std::log2(3.0)) < 1e-6,
             "worked nDCG case gave " + fmt(ndcg));
    Qrels q2;
    q2.add(1, "a", 1);
    q2.add(1, "b", 2);
    q2.add(1, "x", 0);
    const double ap = *average_precision(ts::make_list(1, {"a", "x", "b"}), q2);
    c.expect(std::abs(ap - 5.0 / 6.0) < 1e-6, "worked AP case gave " + fmt(ap));
  }
  oracle::Rng rng(100);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t pool = rng.between(1, 60);
    oracle::Grades grades;
    Qrels q;
    for (std::size_t d = 0; d < pool; ++d) {
      if (rng.coin(0.5)) {
        const int g = static_cast<int>(rng.below(3));
        grades["d" + std::to_string(d)] = g;
        q.add(1, "d" + std::to_string(d), g);
      }
    }
    if (std::none_of(grades.begin(), grades.end(), [](auto& g) { return g.second > 0; })) {
      grades["d0"] = 1;
      q = Qrels{};
      for (auto& [doc, g] : grades) q.add(1, doc, g);
    }
    oracle::Ranking ranking;
    for (std::size_t d = 0; d < pool + 10; ++d) ranking.push_back("d" + std::to_string(d));
    rng.shuffle(ranking);
    ranking.resize(rng.between(1, ranking.size()));
    const auto list = ts::make_list(1, ranking);
    const std::string id = " (instance " + std::to_string(trial) + ")";
    c.expect(std::abs(*ndcg_at_k(list, q, 10) - oracle::ndcg(ranking, grades, 10)) < 1e-12, "nDCG@10" + id);
    c.expect(std::abs(precision_at_k(list, q, 5) - oracle::precision(ranking, grades, 5)) < 1e-12, "P@5" + id);
    c.expect(std::abs(*average_precision(list, q) - oracle::average_precision(ranking, grades)) < 1e-12, "AP" + id);
    c.expect(std::abs(judged_at_k(list, q, 5) - oracle::judged(ranking, grades, 5)) < 1e-12, "judged@5" + id);
  }
}

// ---- Feedback -------------------------------------------------------------

void gradient_check(Check& c) {
  oracle::Rng rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t dims = rng.between(1, 8);
    const std::size_t m = rng.between(2, 10);
    std::vector<SparseVector> xs(m);
    std::vector<int> ys(m);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::uint32_t d = 0; d < dims; ++d)
        if (rng.coin(0.7)) xs[i].emplace_back(d, rng.uniform(-1, 1));
      ys[i] = rng.coin() ? 1 : 0;
    }
    std::vector<double> w(dims);
    for (double& x : w) x = rng.uniform(-2, 2);
    const double b = rng.uniform(-1, 1);
    const Objective obj = logistic_objective(w, b, xs, ys, 1.0);
    const double h = 1e-6;
    auto agree = [](double analytic, double numeric) {
      return std::abs(analytic - numeric) <= 1e-5 * std::max(1.0, std::abs(numeric));
    };
    for (std::size_t d = 0; d < dims; ++d) {
      auto up = w, down = w;
      up[d] += h;
      down[d] -= h;
      const double numeric =
          (logistic_objective(up, b, xs, ys, 1.0).loss - logistic_objective(down, b, xs, ys, 1.0).loss) / (2 * h);
      c.expect(agree(obj.grad_w[d], numeric), "weight gradient " + fmt(obj.grad_w[d]) + " vs " + fmt(numeric));
    }
    const double numeric_b =
        (logistic_objective(w, b + h, xs, ys, 1.0).loss - logistic_objective(w, b - h, xs, ys, 1.0).loss) / (2 * h);
    c.expect(agree(obj.grad_b, numeric_b), "bias gradient");
  }
}

void feedback_suite(Check& c) {
  gradient_check(c);

  const auto& collection = ts::fixture_collection();
  const auto& qrels = ts::fixture_qrels();
  const TextLookup text = [&collection](const std::string& id) { return collection.title_abstract(id); };
  const auto features = FeatureSpace::from_index(collection.abstract());

  ReferenceScorer scorer(&collection.abstract());
  RunOptions opts;
  opts.variant = RunVariant::kMonoT5;
  const RunFile mono = RunPipeline(collection, scorer, opts).run(ts::fixture_topics());

  // Fixed-seed split of each topic's judgments: train on 3 positives and 3
  // negatives, hold out the rest; both rankings exclude the training docs.
  oracle::Rng rng(424242);
  double ap_mixed = 0.0, ap_input = 0.0;
  int topics = 0;
  for (const auto& [topic, list] : mono.topics) {
    std::vector<std::string> pos, neg;
    for (const auto& [doc, j] : qrels.topic(topic)) (j.grade > 0 ? pos : neg).push_back(doc);
    c.expect(pos.size() >= 3 && neg.size() >= 5, "fixture topic " + std::to_string(topic) + " under-judged");
    rng.shuffle(pos);
    rng.shuffle(neg);
    Qrels train, held_out;
    for (std::size_t i = 0; i < pos.size(); ++i) (i < 3 ? train : held_out).add(topic, pos[i], *qrels.grade(topic, pos[i]));
    for (std::size_t i = 0; i < neg.size(); ++i) (i < 3 ? train : held_out).add(topic, neg[i], 0);

    const RankedList candidates = residual_filter(list, train);
    const FeedbackModel model = train_classifier(topic, train, text, features);

    const RankedList unchanged = classify_interpolate(model, candidates, text, 0.0);
    c.expect(unchanged.doc_ids() == candidates.doc_ids(), "alpha = 0 reordered topic " + std::to_string(topic));

    const RankedList mixed = classify_interpolate(model, candidates, text, 0.5);
    oracle::Grades grades;
    for (const auto& [doc, j] : held_out.topic(topic)) grades[doc] = j.grade;
    ap_mixed += oracle::average_precision(mixed.doc_ids(), grades);
    ap_input += oracle::average_precision(candidates.doc_ids(), grades);
    ++topics;
  }
  ap_mixed /= topics;
  ap_input /= topics;
  c.expect(ap_mixed >= ap_input, "held-out AP " + fmt(ap_mixed) + " < input " + fmt(ap_input));
  std::cout << "  held-out mean AP: input " << fmt(ap_input) << ", interpolated " << fmt(ap_mixed) << '\n';

  // alpha = 0 on random lists: argsort of the input is preserved.
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::string> docs;
    for (int i = 0; i < 30; ++i) docs.push_back(ts::fixture_articles()[rng.below(50)].article_id + "#" + std::to_string(i));
    auto list = ts::make_list(1, docs);
    for (auto& e : list.entries) e.score = std::floor(e.score / 3.0);  // ties included
    const FeedbackModel model = [&] {
      FeedbackModel m;
      m.features = features;
      m.weights.assign(features->size(), 0.0);
      for (double& w : m.weights) w = rng.uniform(-3, 3);
      return m;
    }();
    c.expect(classify_interpolate(model, list, text, 0.0).doc_ids() == list.doc_ids(), "alpha = 0 on random list");
  }
}

// ---- End to end -----------------------------------------------------------

int shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void end_to_end_suite(Check& c) {
  ts::TempDir dir("strata-acceptance");
  const std::string cli = ts::cli_path().string();
  const std::string fx = ts::fixture_dir().string();
  const std::string idx = (dir.path() / "idx").string();
  c.expect(shell(cli + " index --corpus " + fx + "/corpus.jsonl --granularity all --out " + idx + " > /dev/null") == 0,
           "index build failed");
  for (const char* variant : {"fusion1", "fusion2", "monot5", "duot5", "t5_lr"}) {
    const auto out = dir.path() / (std::string(variant) + ".run");
    const int code = shell(cli + " run --topics " + fx + "/topics.xml --indexes " + idx + " --qrels " + fx +
                           "/qrels.txt --variant " + variant + " --out " + out.string());
    const std::string golden = ts::read_file(ts::golden_dir() / (std::string(variant) + ".run"));
    c.expect(code == 0 && !golden.empty() && ts::read_file(out) == golden,
             std::string(variant) + " differs from its golden run");
    c.expect(write_run(parse_run(golden)) == golden, std::string(variant) + " does not round-trip");
  }
}

// ---- Residual -------------------------------------------------------------

void residual_suite(Check& c) {
  const auto& collection = ts::fixture_collection();
  const auto& qrels = ts::fixture_qrels();
  ReferenceScorer scorer(&collection.abstract());
  for (RunVariant v : {RunVariant::kFusion1, RunVariant::kFusion2, RunVariant::kMonoT5, RunVariant::kT5Lr}) {
    RunOptions opts;
    opts.variant = v;
    opts.qrels = &qrels;
    const RunFile full = RunPipeline(collection, scorer, opts).run(ts::fixture_topics());
    opts.residual = true;
    const RunFile residual = RunPipeline(collection, scorer, opts).run(ts::fixture_topics());
    const std::string name(to_string(v));
    for (const auto& [topic, list] : residual.topics) {
      c.expect(residual_filter(list, qrels) == list, name + ": filtering is not idempotent");
      c.expect(residual_filter(residual_filter(full.topics.at(topic), qrels), qrels) ==
                   residual_filter(full.topics.at(topic), qrels),
               name + ": double filtering differs");
      for (const auto& e : list.entries) c.expect(!qrels.judged(topic, e.doc_id), name + ": judged doc " + e.doc_id);
    }
    // Against the judgments that caused the removal, nothing is counted.
    const EvalReport old_round = evaluate(residual, qrels);
    for (const MetricRow& r : old_round.rows) {
      c.expect(r.judged_5 == 0.0 && r.p_5 == 0.0 && r.ndcg_10 == 0.0 && r.map == 0.0,
               name + ": removed docs counted for topic " + std::to_string(r.topic_id));
    }
    // With a later round judged on top, early-precision metrics see only the
    // new judgments.
    Qrels next_round;
    for (const auto& [topic, list] : residual.topics) {
      for (std::size_t i = 0; i < list.size(); i += 2) next_round.add(topic, list.entries[i].doc_id, 1);
    }
    const EvalReport merged = evaluate(residual, qrels.merged_with(next_round));
    const EvalReport fresh = evaluate(residual, next_round);
    for (std::size_t i = 0; i < merged.rows.size() && i < fresh.rows.size(); ++i) {
      c.expect(merged.rows[i].p_5 == fresh.rows[i].p_5 && merged.rows[i].judged_5 == fresh.rows[i].judged_5,
               name + ": old judgments leaked into P@5 / judged@5");
    }
  }
}

// ---- Service --------------------------------------------------------------

void service_suite(Check& c) {
  const auto state = ServiceState::create(ts::fixture_articles(),
                                          std::make_shared<const Collection>(ts::fixture_collection()));
  ScorerPool pool([&] { return std::make_unique<ReferenceScorer>(&state->collection->abstract()); }, 4);
  SearchService service(state, pool);
  HttpOptions http;
  http.port = 0;
  HttpServer server(service, http);
  const int port = server.bind();
  std::thread listener([&] { server.listen(); });

  const std::vector<std::string> queries{"antibodies", "masks transmission", "vaccine trials",
                                         "ventilation treatment", "coronavirus origin", "coronavirus"};
  auto get = [port](const std::string& path) {
    httplib::Client client("127.0.0.1", port);
    client.set_read_timeout(10, 0);
    return client.Get(path);
  };
  auto search_path = [](const std::string& q, std::size_t page, std::size_t size) {
    return "/api/search?q=" + httplib::detail::encode_url(q) + "&page=" + std::to_string(page) +
           "&page_size=" + std::to_string(size);
  };

  // Sequential reference answers: the full result list per query.
  std::map<std::string, std::vector<std::string>> reference;
  for (const auto& q : queries) {
    const auto res = get(search_path(q, 1, 50));
    if (!res || res->status != 200) {
      c.expect(false, "reference query failed: " + q);
      continue;
    }
    for (const auto& r : nlohmann::json::parse(res->body)["results"]) reference[q].push_back(r["article_id"]);
  }

  // 32 requests in flight: pages of 3 stitched together must equal the
  // reference list; latency is measured per request.
  constexpr int kInFlight = 32;
  std::vector<std::future<std::tuple<std::string, std::size_t, std::vector<std::string>, double, int>>> futures;
  for (int i = 0; i < kInFlight; ++i) {
    const std::string q = queries[static_cast<std::size_t>(i) % queries.size()];
    const std::size_t page = 1 + static_cast<std::size_t>(i) / queries.size();
    futures.push_back(std::async(std::launch::async, [&, q, page] {
      const auto start = std::chrono::steady_clock::now();
      const auto res = get(search_path(q, page, 3));
      const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      std::vector<std::string> ids;
      if (res && res->status == 200) {
        for (const auto& r : nlohmann::json::parse(res->body)["results"]) ids.push_back(r["article_id"]);
      }
      return std::make_tuple(q, page, ids, ms, res ? res->status : -1);
    }));
  }
  std::vector<double> latencies;
  for (auto& f : futures) {
    auto [q, page, ids, ms, status] = f.get();
    latencies.push_back(ms);
    c.expect(status == 200, "status " + std::to_string(status));
    const auto& all = reference[q];
    const std::size_t begin = std::min(all.size(), (page - 1) * 3);
    const std::vector<std::string> expected(all.begin() + static_cast<std::ptrdiff_t>(begin),
                                            all.begin() + static_cast<std::ptrdiff_t>(std::min(all.size(), begin + 3)));
    c.expect(ids == expected, "page " + std::to_string(page) + " of '" + q + "' inconsistent");
  }
  std::sort(latencies.begin(), latencies.end());
  const double p95 = latencies[static_cast<std::size_t>(std::ceil(0.95 * kInFlight)) - 1];
  c.expect(p95 < 200.0, "p95 latency " + fmt(p95) + " ms");
  std::cout << "  p95 latency over " << kInFlight << " in-flight requests: " << fmt(p95) << " ms\n";
  server.stop();
  listener.join();

  // Scorer outage: degraded flag and first-stage order.
  ts::FakeScorer failing;
  failing.fail = true;
  const SearchService degraded(state, failing);
  for (const auto& q : queries) {
    SearchRequest r;
    r.query = q;
    r.page_size = kMaxPageSize;
    const auto got = degraded.search(r);
    const auto first = first_stage(state->collection->paragraph(), 0,
                                   generate_query(Topic{.query = q}, std::span<const std::string>{}).tokens(),
                                   kFacetDepth);
    std::vector<std::string> got_ids, first_ids;
    for (const auto& res : got.results) got_ids.push_back(res.article->article_id);
    for (std::size_t i = 0; i < first.size() && i < kMaxPageSize; ++i) first_ids.push_back(first.entries[i].doc_id);
    c.expect(got.degraded && got_ids == first_ids, "outage fallback for '" + q + "'");
  }
}

struct Criterion {
  const char* name;
  double budget_seconds;
  std::function<void(Check&)> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"bm25-oracle", 10, bm25_suite},
      {"rrf", 5, rrf_suite},
      {"pairwise-aggregation", 5, pairwise_suite},
      {"windowing", 1, window_suite},
      {"metrics-oracle", 5, metrics_suite},
      {"feedback", 30, feedback_suite},
      {"end-to-end-determinism", 60, end_to_end_suite},
      {"residual", 60, residual_suite},
      {"service", 60, service_suite},
  };
  int failed = 0;
  for (const Criterion& criterion : criteria) {
    Check check;
    const auto start = std::chrono::steady_clock::now();
    try {
      criterion.run(check);
    } catch (const std::exception& e) {
      check.expect(false, std::string("exception: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    check.expect(seconds < criterion.budget_seconds,
                 "took " + fmt(seconds) + " s, budget " + fmt(criterion.budget_seconds) + " s");
    const bool ok = check.ok();
    failed += ok ? 0 : 1;
    std::cout << (ok ? "PASS " : "FAIL ") << criterion.name << " (" << check.summary() << ", " << fmt(seconds)
              << " s)" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
