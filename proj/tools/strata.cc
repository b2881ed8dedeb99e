// strata: indexing, batch runs, evaluation, fusion and the search service.
//
// Every subcommand accepts --config FILE with flat `key = value` lines whose
// keys are the subcommand's long flag names; flags given on the command line
// win. Exit codes: 0 success, 1 usage, 2 data, 3 scorer.

#include <pthread.h>
#include <signal.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "strata/config.h"
#include "strata/errors.h"
#include "strata/pipeline.h"
#include "strata/qrels.h"
#include "strata/service.h"
#include "strata/trec.h"
#include "strata/wire_protocol.h"

#ifndef STRATA_VERSION
#define STRATA_VERSION "dev"
#endif

namespace {

using namespace strata;
namespace fs = std::filesystem;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitScorer = 3;

void warn(const std::string& message) { std::cerr << "strata: warning: " << message << '\n'; }

struct IndexArgs {
  std::string corpus;
  std::string granularity;
  std::string out;
};

struct RunArgs {
  std::string topics;
  std::string indexes;
  std::string variant = "fusion1";
  std::string qrels;
  bool residual = false;
  std::size_t depth = kDefaultRunDepth;
  std::string tag;
  std::string out;
  std::string scorer = "reference";
  std::string extractor = "idf";
  std::size_t jobs = 1;
  double theta = kDefaultIdfThreshold;
  double rrf_k = kDefaultRrfK;
  std::size_t rerank_depth = kDefaultRerankDepth;
  std::size_t max_tokens = kDefaultMaxTokens;
  std::size_t batch_size = 64;
  double alpha = 0.5;
  long scorer_timeout_ms = 30000;
};

struct EvalArgs {
  std::string run;
  std::string qrels;
  std::vector<std::string> metrics{std::begin(kMetricNames), std::end(kMetricNames)};
  std::string format = "text";
};

struct FuseArgs {
  std::vector<std::string> runs;
  double k = kDefaultRrfK;
  std::size_t depth = kDefaultRunDepth;
  std::string tag = "fused";
  std::string out;
};

struct ServeArgs {
  std::string corpus;
  std::string indexes;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t threads = 32;
  std::string scorer = "reference";
  std::size_t pool_size = 4;
  long scorer_timeout_ms = 30000;
  std::string ui_dir;
  std::size_t rerank_depth = kDefaultRerankDepth;
  std::size_t max_tokens = kDefaultMaxTokens;
};

class SnapshotScorer final : public Scorer {
 public:
  SnapshotScorer(std::shared_ptr<const ServiceState> snapshot, std::unique_ptr<Scorer> inner)
      : snapshot_(std::move(snapshot)), inner_(std::move(inner)) {}

  std::vector<double> score(std::span<const PointwiseRequest> batch) override { return inner_->score(batch); }
  std::vector<double> score(std::span<const PairwiseRequest> batch) override { return inner_->score(batch); }
  bool thread_safe() const override { return inner_->thread_safe(); }

 private:
  std::shared_ptr<const ServiceState> snapshot_;
  std::unique_ptr<Scorer> inner_;
};

int cmd_index(const IndexArgs& a) {
  CorpusLoad load = load_corpus(a.corpus);
  for (const auto& [line, reason] : load.rejected) warn("line " + std::to_string(line) + ": " + reason);
  auto report = [](const InvertedIndex& index) {
    std::printf("%s N=%zu avg_dl=%.6f terms=%zu\n", std::string(to_string(index.granularity())).c_str(),
                index.size(), index.average_length(), index.term_count());
  };
  if (a.granularity == "all") {
    const Collection collection = Collection::build(load.articles);
    collection.save(a.out);
    for (Granularity g : {Granularity::kAbstract, Granularity::kFullText, Granularity::kParagraph}) {
      report(collection.index(g));
    }
    return 0;
  }
  const Granularity g = parse_granularity(a.granularity);
  const InvertedIndex index = InvertedIndex::build(generate_units(load.articles, g), g);
  index.save(a.out);
  report(index);
  return 0;
}

int cmd_run(const RunArgs& a) {
  const RunVariant variant = parse_variant(a.variant);
  if (variant == RunVariant::kT5Lr && a.qrels.empty()) throw UsageError("variant t5_lr requires --qrels");
  if (a.residual && a.qrels.empty()) throw UsageError("--residual requires --qrels");

  const auto topics = load_topics(a.topics);
  const Collection collection = Collection::load(a.indexes);
  std::optional<Qrels> qrels;
  if (!a.qrels.empty()) {
    QrelsLoad load = load_qrels(a.qrels);
    for (const std::string& w : load.warnings) warn(w);
    qrels = std::move(load.qrels);
  }

  const std::chrono::milliseconds timeout(a.scorer_timeout_ms);
  std::unique_ptr<Scorer> scorer = make_scorer(a.scorer, &collection.abstract(), timeout);
  std::unique_ptr<Scorer> extractor_endpoint;
  std::unique_ptr<KeyTermExtractor> extractor;
  if (a.extractor != "idf") {
    extractor_endpoint = make_scorer(a.extractor, nullptr, timeout);
    auto* external = dynamic_cast<ExternalScorer*>(extractor_endpoint.get());
    if (!external) throw UsageError("--extractor must be idf, exec:CMD or tcp:HOST:PORT");
    extractor = std::make_unique<ExternalKeyTermExtractor>(*external);
  }

  RunOptions options;
  options.variant = variant;
  options.depth = a.depth;
  options.idf_threshold = a.theta;
  options.rrf_k = a.rrf_k;
  options.rerank.depth = a.rerank_depth;
  options.rerank.max_tokens = a.max_tokens;
  options.rerank.batch_size = a.batch_size;
  options.alpha = a.alpha;
  options.qrels = qrels ? &*qrels : nullptr;
  options.residual = a.residual;
  options.tag = a.tag;
  options.extractor = extractor.get();

  const RunPipeline pipeline(collection, *scorer, options);
  const RunFile run = pipeline.run(topics, a.jobs);
  for (const std::string& w : pipeline.warnings()) warn(w);
  if (a.out.empty() || a.out == "-") {
    write_run(std::cout, run);
  } else {
    save_run(a.out, run);
  }
  return 0;
}

int cmd_eval(const EvalArgs& a) {
  for (const std::string& m : a.metrics) {
    if (std::find(std::begin(kMetricNames), std::end(kMetricNames), m) == std::end(kMetricNames)) {
      throw UsageError("unknown metric '" + m + "'");
    }
  }
  const RunFile run = load_run(a.run);
  QrelsLoad load = load_qrels(a.qrels);
  for (const std::string& w : load.warnings) warn(w);
  const EvalReport report = evaluate(run, load.qrels);
  if (a.format == "text") {
    std::cout << format_report_text(report, a.metrics);
  } else if (a.format == "jsonl") {
    std::cout << format_report_jsonl(report, a.metrics);
  } else {
    throw UsageError("--format must be text or jsonl");
  }
  return 0;
}

int cmd_fuse(const FuseArgs& a) {
  if (a.runs.empty()) throw UsageError("--runs needs at least one run file");
  std::vector<RunFile> inputs;
  for (const std::string& path : a.runs) inputs.push_back(load_run(path));
  std::set<int> topic_ids;
  for (const RunFile& r : inputs) {
    for (const auto& [id, list] : r.topics) topic_ids.insert(id);
  }
  RunFile fused;
  fused.tag = a.tag;
  for (int id : topic_ids) {
    std::vector<RankedList> lists;
    for (const RunFile& r : inputs) {
      auto it = r.topics.find(id);
      if (it != r.topics.end()) lists.push_back(it->second);
    }
    RankedList list = rrf(lists, a.k, a.depth);
    list.tag = a.tag;
    fused.topics.emplace(id, std::move(list));
  }
  if (a.out.empty() || a.out == "-") {
    write_run(std::cout, fused);
  } else {
    save_run(a.out, fused);
  }
  return 0;
}

int cmd_serve(const ServeArgs& a) {
  if (a.corpus.empty()) throw UsageError("serve needs --corpus (or corpus = in the config)");
  const std::optional<fs::path> index_dir = a.indexes.empty() ? std::nullopt : std::optional<fs::path>(a.indexes);
  auto state = ServiceState::load(a.corpus, index_dir);

  // Pooled reference scorers read idf from the snapshot that was current when
  // they were created and keep that snapshot alive; external scorers ignore it.
  const std::string scorer_endpoint = a.scorer;
  const std::chrono::milliseconds timeout(a.scorer_timeout_ms);
  std::shared_ptr<const ServiceState> idf_owner = state;
  std::mutex idf_mutex;
  ScorerPool pool(
      [&]() -> std::unique_ptr<Scorer> {
        std::lock_guard lock(idf_mutex);
        return std::make_unique<SnapshotScorer>(
            idf_owner, make_scorer(scorer_endpoint, &idf_owner->collection->abstract(), timeout));
      },
      a.pool_size);

  ServiceOptions service_options;
  service_options.rerank_depth = a.rerank_depth;
  service_options.max_tokens = a.max_tokens;
  SearchService service(state, pool, service_options);

  HttpOptions http;
  http.host = a.host;
  http.port = a.port;
  http.threads = a.threads;
  http.version = STRATA_VERSION;
  if (!a.ui_dir.empty()) http.ui_dir = a.ui_dir;

  // Signals are consumed by a dedicated thread: HUP reloads, INT/TERM stop.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGHUP);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  HttpServer server(service, http);
  const int port = server.bind();
  std::cerr << "strata: listening on " << a.host << ':' << port << " (" << state->articles.size()
            << " articles, corpus " << state->corpus_fingerprint << ")" << std::endl;

  std::thread signal_thread([&] {
    while (true) {
      int sig = 0;
      if (sigwait(&signals, &sig) != 0) continue;
      if (sig == SIGHUP) {
        try {
          auto fresh = ServiceState::load(a.corpus, index_dir);
          {
            std::lock_guard lock(idf_mutex);
            idf_owner = fresh;
          }
          service.replace_state(fresh);
          std::cerr << "strata: reloaded corpus " << fresh->corpus_fingerprint << std::endl;
        } catch (const std::exception& e) {
          warn(std::string("reload failed, keeping previous snapshot: ") + e.what());
        }
        continue;
      }
      server.stop();
      return;
    }
  });
  server.listen();
  // Wake the signal thread if the server stopped on its own.
  kill(getpid(), SIGTERM);
  signal_thread.join();
  return 0;
}

/// Splices `--key=value` arguments from the config file in front of the
/// subcommand's own arguments; with last-wins parsing the flags override.
std::vector<std::string> apply_config(CLI::App* sub, const std::vector<std::string>& args) {
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].starts_with("--config=")) path = args[i].substr(9);
  }
  if (!path) return args;
  const Config config = Config::load(*path);
  std::vector<std::string> spliced;
  for (const auto& [key, value] : config.entries()) {
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (!opt || key == "config" || key == "help") {
      throw UsageError("unknown config key '" + key + "' for " + sub->get_name());
    }
    if (opt->get_expected_max() == 0) {
      if (value == "true" || value == "1" || value == "yes") {
        spliced.push_back("--" + key);
      } else if (value != "false" && value != "0" && value != "no") {
        throw UsageError("config key '" + key + "' expects true or false");
      }
    } else if (opt->get_items_expected_max() > 1) {
      std::istringstream in(value);
      std::string item;
      spliced.push_back("--" + key);
      while (in >> item) spliced.push_back(item);
    } else {
      spliced.push_back("--" + key + "=" + value);
    }
  }
  spliced.insert(spliced.end(), args.begin(), args.end());
  return spliced;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"strata: multi-stage retrieval, reranking and evaluation"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_version_flag("--version", STRATA_VERSION);
  std::string config_path;

  IndexArgs index_args;
  auto* index = app.add_subcommand("index", "build an index snapshot from a corpus");
  index->add_option("--corpus", index_args.corpus, "JSON-lines corpus")->required();
  index->add_option("--granularity", index_args.granularity, "abstract, fulltext, paragraph, or all")->required();
  index->add_option("--out", index_args.out, "snapshot file (a directory for 'all')")->required();

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "produce a TREC run for a topic set");
  run->add_option("--topics", run_args.topics, "topics file (XML or JSON lines)")->required();
  run->add_option("--indexes", run_args.indexes, "directory with abstract.idx, fulltext.idx, paragraph.idx")
      ->required();
  run->add_option("--variant", run_args.variant, "fusion1, fusion2, monot5, duot5, t5_lr");
  run->add_option("--qrels", run_args.qrels, "judgments for t5_lr and --residual");
  run->add_flag("--residual", run_args.residual, "drop judged documents");
  run->add_option("--depth", run_args.depth, "entries per topic");
  run->add_option("--tag", run_args.tag, "run tag (default: variant name)");
  run->add_option("--out", run_args.out, "run file (default: stdout)");
  run->add_option("--scorer", run_args.scorer, "reference, exec:CMD or tcp:HOST:PORT");
  run->add_option("--extractor", run_args.extractor, "question expansion: idf, exec:CMD or tcp:HOST:PORT");
  run->add_option("--jobs", run_args.jobs, "topics processed in parallel");
  run->add_option("--theta", run_args.theta, "idf threshold for question expansion");
  run->add_option("--rrf-k", run_args.rrf_k, "RRF constant");
  run->add_option("--rerank-depth", run_args.rerank_depth, "candidates rescored pointwise");
  run->add_option("--max-tokens", run_args.max_tokens, "passage truncation for the scorer");
  run->add_option("--batch-size", run_args.batch_size, "requests per scorer batch");
  run->add_option("--alpha", run_args.alpha, "classifier mixing weight for t5_lr");
  run->add_option("--scorer-timeout-ms", run_args.scorer_timeout_ms, "per-response timeout");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "score a run against judgments");
  eval->add_option("--run", eval_args.run, "run file")->required();
  eval->add_option("--qrels", eval_args.qrels, "judgments")->required();
  eval->add_option("--metrics", eval_args.metrics, "ndcg_cut_10,P_5,map,judged_5")->delimiter(',')
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  eval->add_option("--format", eval_args.format, "text or jsonl");

  FuseArgs fuse_args;
  auto* fuse = app.add_subcommand("fuse", "reciprocal rank fusion of run files");
  fuse->add_option("--runs", fuse_args.runs, "run files")->required()->multi_option_policy(
      CLI::MultiOptionPolicy::TakeAll);
  fuse->add_option("--k", fuse_args.k, "RRF constant");
  fuse->add_option("--depth", fuse_args.depth, "entries per topic");
  fuse->add_option("--tag", fuse_args.tag, "run tag");
  fuse->add_option("--out", fuse_args.out, "run file (default: stdout)");

  ServeArgs serve_args;
  auto* serve = app.add_subcommand("serve", "run the HTTP search service");
  serve->add_option("--corpus", serve_args.corpus, "JSON-lines corpus");
  serve->add_option("--indexes", serve_args.indexes, "snapshot directory (built from the corpus if absent)");
  serve->add_option("--host", serve_args.host, "bind address");
  serve->add_option("--port", serve_args.port, "port (0 picks a free one)");
  serve->add_option("--threads", serve_args.threads, "HTTP worker threads");
  serve->add_option("--scorer", serve_args.scorer, "reference, exec:CMD or tcp:HOST:PORT");
  serve->add_option("--pool-size", serve_args.pool_size, "scorer instances");
  serve->add_option("--scorer-timeout-ms", serve_args.scorer_timeout_ms, "per-response timeout");
  serve->add_option("--ui-dir", serve_args.ui_dir, "static files served at /");
  serve->add_option("--rerank-depth", serve_args.rerank_depth, "candidates rescored pointwise");
  serve->add_option("--max-tokens", serve_args.max_tokens, "passage truncation for the scorer");

  for (CLI::App* sub : {index, run, eval, fuse, serve}) {
    sub->add_option("--config", config_path, "flat key = value file; flags override it");
  }

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    if (!args.empty()) {
      for (CLI::App* sub : {index, run, eval, fuse, serve}) {
        if (args.front() == sub->get_name()) {
          std::vector<std::string> rest = apply_config(sub, {args.begin() + 1, args.end()});
          rest.insert(rest.begin(), args.front());
          args = std::move(rest);
        }
      }
    }
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "strata: error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "strata: error: " << e.what() << '\n';
    return kExitData;
  }

  try {
    if (*index) return cmd_index(index_args);
    if (*run) return cmd_run(run_args);
    if (*eval) return cmd_eval(eval_args);
    if (*fuse) return cmd_fuse(fuse_args);
    if (*serve) return cmd_serve(serve_args);
  } catch (const UsageError& e) {
    std::cerr << "strata: error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ScorerError& e) {
    std::cerr << "strata: error: " << e.what() << '\n';
    return kExitScorer;
  } catch (const std::exception& e) {
    std::cerr << "strata: error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
