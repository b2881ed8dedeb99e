#include "strata/service.h"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <numeric>
#include <unordered_set>

#include <httplib.h>
#include <json.hpp>

#include "strata/errors.h"
#include "strata/fusion.h"
#include "strata/text.h"
#include "strata/topics.h"

namespace strata {

namespace {

using nlohmann::ordered_json;

int parse_int(const std::string& key, const std::string& value) {
  int out = 0;
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || p != value.data() + value.size()) {
    throw UsageError("parameter '" + key + "' must be an integer, got '" + value + "'");
  }
  return out;
}

std::vector<std::string> query_terms(std::string_view query) {
  Topic topic;
  topic.query = std::string(query);
  return generate_query(topic, std::span<const std::string>{}).tokens();
}

bool matches_any(const std::optional<std::string>& value, const std::vector<std::string>& wanted) {
  if (wanted.empty()) return true;
  const std::string v = value.value_or("unknown");
  return std::find(wanted.begin(), wanted.end(), v) != wanted.end();
}

bool passes_filters(const Article& a, const SearchRequest& r) {
  if (r.year_from || r.year_to) {
    const auto year = a.year();
    if (!year) return false;
    if (r.year_from && *year < *r.year_from) return false;
    if (r.year_to && *year > *r.year_to) return false;
  }
  if (!matches_any(a.journal, r.journals) || !matches_any(a.source, r.sources)) return false;
  if (!r.authors.empty()) {
    const bool hit = std::any_of(a.authors.begin(), a.authors.end(), [&](const std::string& name) {
      return std::find(r.authors.begin(), r.authors.end(), name) != r.authors.end();
    });
    if (!hit) return false;
  }
  return true;
}

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

std::uint64_t fnv1a(std::string_view data, std::uint64_t hash) {
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string hex64(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

struct Preset {
  Granularity granularity;
  bool rerank;
};

Preset find_preset(const std::string& name) {
  if (name == "default" || name == "paragraph") return {Granularity::kParagraph, true};
  if (name == "abstract") return {Granularity::kAbstract, true};
  if (name == "fulltext") return {Granularity::kFullText, true};
  if (name == "bm25") return {Granularity::kParagraph, false};
  throw UsageError("unknown preset '" + name + "'");
}

ordered_json article_fields(const Article& a) {
  auto opt = [](const std::optional<std::string>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
  ordered_json obj;
  obj["article_id"] = a.article_id;
  obj["title"] = a.title;
  obj["abstract"] = a.abstract;
  obj["url"] = opt(a.url);
  obj["journal"] = opt(a.journal);
  obj["source"] = opt(a.source);
  obj["authors"] = a.authors;
  obj["publish_time"] = opt(a.publish_time);
  return obj;
}

std::string error_json(const std::string& message) {
  ordered_json obj;
  obj["error"] = message;
  return obj.dump(-1, ' ', false, ordered_json::error_handler_t::replace);
}

}  // namespace

SearchRequest parse_search_request(const std::vector<std::pair<std::string, std::string>>& params) {
  SearchRequest r;
  for (const auto& [key, value] : params) {
    if (key == "query" || key == "q") {
      r.query = value;
    } else if (key == "year_from") {
      if (!value.empty()) r.year_from = parse_int(key, value);
    } else if (key == "year_to") {
      if (!value.empty()) r.year_to = parse_int(key, value);
    } else if (key == "year") {
      if (!value.empty()) r.year_from = r.year_to = parse_int(key, value);
    } else if (key == "journal") {
      if (!value.empty()) r.journals.push_back(value);
    } else if (key == "source") {
      if (!value.empty()) r.sources.push_back(value);
    } else if (key == "author") {
      if (!value.empty()) r.authors.push_back(value);
    } else if (key == "page") {
      if (!value.empty()) {
        const int page = parse_int(key, value);
        if (page < 1) throw UsageError("page must be >= 1");
        r.page = static_cast<std::size_t>(page);
      }
    } else if (key == "page_size") {
      if (!value.empty()) {
        const int size = parse_int(key, value);
        if (size < 1 || static_cast<std::size_t>(size) > kMaxPageSize) {
          throw UsageError("page_size must lie in [1, " + std::to_string(kMaxPageSize) + "]");
        }
        r.page_size = static_cast<std::size_t>(size);
      }
    } else if (key == "preset") {
      if (!value.empty()) r.preset = value;
    }
  }
  return r;
}

std::vector<Highlight> highlight(std::string_view query, const Article& article, const InvertedIndex& idf_source,
                                 std::size_t m) {
  std::vector<std::string> terms;  // distinct, first-occurrence order
  double total = 0.0;
  std::unordered_map<std::string, double> weight;
  for (std::string& t : query_terms(query)) {
    const double w = idf_source.idf(t);
    if (!weight.emplace(t, w).second) continue;
    total += w;
    terms.push_back(std::move(t));
  }
  std::vector<Highlight> scored;
  if (total <= 0.0 || m == 0) return scored;

  auto scan = [&](std::string_view text, std::optional<std::size_t> paragraph) {
    const auto spans = split_sentence_spans(text);
    for (std::size_t s = 0; s < spans.size(); ++s) {
      std::unordered_set<std::string> present;
      for (std::string& tok : tokenize(text.substr(spans[s].begin, spans[s].end - spans[s].begin))) {
        if (weight.contains(tok)) present.insert(std::move(tok));
      }
      double mass = 0.0;
      for (const std::string& t : terms) mass += present.contains(t) ? weight[t] : 0.0;
      if (mass > 0.0) scored.push_back({paragraph, s, spans[s].begin, spans[s].end, mass / total});
    }
  };
  scan(article.abstract, std::nullopt);
  for (std::size_t p = 0; p < article.paragraphs.size(); ++p) scan(article.paragraphs[p], p);

  // `scored` is in document order, so a stable sort keeps ties in that order.
  std::vector<std::size_t> order(scored.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scored[a].score > scored[b].score; });
  order.resize(std::min(m, order.size()));
  std::sort(order.begin(), order.end());
  std::vector<Highlight> out;
  for (std::size_t i : order) out.push_back(scored[i]);
  return out;
}

FacetCounts facet_counts(std::span<const Article* const> articles) {
  FacetCounts counts{{"dates", {}}, {"authors", {}}, {"journals", {}}, {"sources", {}}};
  for (const Article* a : articles) {
    const auto year = a->year();
    ++counts["dates"][year ? std::to_string(*year) : "unknown"];
    if (a->authors.empty()) ++counts["authors"]["unknown"];
    // An author listed twice on one article still counts once for it.
    std::unordered_set<std::string_view> seen;
    for (const std::string& name : a->authors) {
      if (seen.insert(name).second) ++counts["authors"][name];
    }
    ++counts["journals"][a->journal ? *a->journal : "unknown"];
    ++counts["sources"][a->source ? *a->source : "unknown"];
  }
  return counts;
}

std::shared_ptr<const ServiceState> ServiceState::create(std::vector<Article> articles,
                                                         std::shared_ptr<const Collection> collection) {
  auto state = std::make_shared<ServiceState>();
  state->articles = std::move(articles);
  state->collection = std::move(collection);
  std::uint64_t hash = kFnvOffset;
  for (const Article& a : state->articles) {
    if (!state->by_id.emplace(a.article_id, &a).second) throw DataError("duplicate article id '" + a.article_id + "'");
    if (!state->collection->fulltext().ordinal(a.article_id)) {
      throw DataError("indexes do not cover article '" + a.article_id + "'");
    }
    hash = fnv1a(serialize_article(a), hash);
    hash = fnv1a("\n", hash);
  }
  if (state->collection->fulltext().size() != state->articles.size()) {
    throw DataError("indexes hold " + std::to_string(state->collection->fulltext().size()) +
                    " articles, corpus has " + std::to_string(state->articles.size()));
  }
  state->corpus_fingerprint = hex64(hash);
  return state;
}

std::shared_ptr<const ServiceState> ServiceState::load(const std::filesystem::path& corpus,
                                                       const std::optional<std::filesystem::path>& index_dir) {
  CorpusLoad load = load_corpus(corpus);
  auto collection = std::make_shared<const Collection>(index_dir ? Collection::load(*index_dir)
                                                                 : Collection::build(load.articles));
  return create(std::move(load.articles), std::move(collection));
}

const Article* ServiceState::article(const std::string& id) const {
  auto it = by_id.find(id);
  return it == by_id.end() ? nullptr : it->second;
}

ScorerPool::ScorerPool(Factory factory, std::size_t size) : factory_(std::move(factory)), free_slots_(size) {
  if (size == 0) throw UsageError("scorer pool size must be positive");
}

template <typename Request>
std::vector<double> ScorerPool::score_with(std::span<const Request> batch) {
  std::unique_ptr<Scorer> scorer;
  {
    std::unique_lock lock(mutex_);
    available_.wait(lock, [&] { return free_slots_ > 0; });
    --free_slots_;
    if (!idle_.empty()) {
      scorer = std::move(idle_.back());
      idle_.pop_back();
    }
  }
  auto release = [&](bool keep) {
    std::lock_guard lock(mutex_);
    if (keep && scorer) idle_.push_back(std::move(scorer));
    ++free_slots_;
    available_.notify_one();
  };
  try {
    if (!scorer) scorer = factory_();
    auto scores = scorer->score(batch);
    release(true);
    return scores;
  } catch (const ScorerError&) {
    release(false);
    throw;
  } catch (const std::exception& e) {
    release(false);
    throw ScorerError(e.what(), 0);
  }
}

std::vector<double> ScorerPool::score(std::span<const PointwiseRequest> batch) { return score_with(batch); }
std::vector<double> ScorerPool::score(std::span<const PairwiseRequest> batch) { return score_with(batch); }

SearchService::SearchService(std::shared_ptr<const ServiceState> state, Scorer& scorer, ServiceOptions options)
    : state_(std::move(state)), scorer_(&scorer), options_(options) {
  if (!state_) throw UsageError("search service needs a loaded state");
}

std::shared_ptr<const ServiceState> SearchService::state() const {
  std::lock_guard lock(state_mutex_);
  return state_;
}

void SearchService::replace_state(std::shared_ptr<const ServiceState> state) {
  if (!state) throw UsageError("cannot install an empty service state");
  std::lock_guard lock(state_mutex_);
  state_ = std::move(state);
}

std::pair<std::shared_ptr<const ServiceState>, const Article*> SearchService::article(const std::string& id) const {
  auto snapshot = state();
  const Article* a = snapshot->article(id);
  if (!a) throw LookupError("unknown article '" + id + "'");
  return {std::move(snapshot), a};
}

SearchResponse SearchService::search(const SearchRequest& request) const {
  if (collapse_whitespace(request.query).empty()) throw UsageError("query must not be empty");
  const Preset preset = find_preset(request.preset);
  if (request.page < 1) throw UsageError("page must be >= 1");
  if (request.page_size < 1 || request.page_size > kMaxPageSize) {
    throw UsageError("page_size must lie in [1, " + std::to_string(kMaxPageSize) + "]");
  }

  SearchResponse response;
  response.snapshot = state();
  response.page = request.page;
  response.page_size = request.page_size;
  const ServiceState& st = *response.snapshot;
  const Collection& collection = *st.collection;

  const auto terms = query_terms(request.query);
  RankedList ranked = first_stage(collection.index(preset.granularity), 0, terms, kFacetDepth);
  if (preset.rerank) {
    RerankOptions opts;
    opts.depth = options_.rerank_depth;
    opts.max_tokens = options_.max_tokens;
    try {
      ranked = pointwise_rerank(
                   *scorer_, request.query, ranked,
                   [&](const std::string& id) { return collection.article_text(id); }, opts)
                   .list;
    } catch (const ScorerError&) {
      response.degraded = true;
    }
  }

  std::vector<const Article*> top;
  top.reserve(ranked.size());
  for (const RankedEntry& e : ranked.entries) top.push_back(st.article(e.doc_id));
  response.facets = facet_counts(top);

  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < top.size(); ++i) {
    if (passes_filters(*top[i], request)) kept.push_back(i);
  }
  response.total = kept.size();
  const std::size_t begin = std::min(kept.size(), (request.page - 1) * request.page_size);
  const std::size_t end = std::min(kept.size(), begin + request.page_size);
  for (std::size_t k = begin; k < end; ++k) {
    const std::size_t i = kept[k];
    response.results.push_back(
        {top[i], ranked.entries[i].score, highlight(request.query, *top[i], collection.paragraph())});
  }
  return response;
}

std::string search_response_json(const SearchResponse& response) {
  ordered_json obj;
  ordered_json results = ordered_json::array();
  for (const SearchResult& r : response.results) {
    ordered_json item = article_fields(*r.article);
    item["score"] = r.score;
    ordered_json highlights = ordered_json::array();
    for (const Highlight& h : r.highlights) {
      ordered_json hj;
      hj["paragraph_index"] = h.paragraph_index ? ordered_json(*h.paragraph_index) : ordered_json(nullptr);
      hj["sentence_index"] = h.sentence_index;
      hj["begin"] = h.begin;
      hj["end"] = h.end;
      hj["score"] = h.score;
      highlights.push_back(std::move(hj));
    }
    item["highlights"] = std::move(highlights);
    results.push_back(std::move(item));
  }
  obj["results"] = std::move(results);
  ordered_json facets = ordered_json::object();
  for (const auto& [field, values] : response.facets) {
    ordered_json counts = ordered_json::object();
    for (const auto& [value, count] : values) counts[value] = count;
    facets[field] = std::move(counts);
  }
  obj["facets"] = std::move(facets);
  obj["total"] = response.total;
  obj["page"] = response.page;
  obj["page_size"] = response.page_size;
  obj["degraded"] = response.degraded;
  return obj.dump(-1, ' ', false, ordered_json::error_handler_t::replace);
}

std::string article_json(const Article& article) {
  ordered_json obj = article_fields(article);
  obj["paragraphs"] = article.paragraphs;
  return obj.dump(-1, ' ', false, ordered_json::error_handler_t::replace);
}

struct HttpServer::Impl {
  SearchService* service;
  HttpOptions options;
  httplib::Server server;
  int port = -1;
};

HttpServer::HttpServer(SearchService& service, HttpOptions options) : impl_(std::make_unique<Impl>()) {
  impl_->service = &service;
  impl_->options = std::move(options);
  auto& srv = impl_->server;
  const std::size_t threads = std::max<std::size_t>(1, impl_->options.threads);
  srv.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };

  auto guarded = [](auto handler) {
    return [handler](const httplib::Request& req, httplib::Response& res) {
      try {
        handler(req, res);
      } catch (const UsageError& e) {
        res.status = 400;
        res.set_content(error_json(e.what()), "application/json");
      } catch (const LookupError& e) {
        res.status = 404;
        res.set_content(error_json(e.what()), "application/json");
      } catch (const std::exception& e) {
        res.status = 500;
        res.set_content(error_json(e.what()), "application/json");
      }
    };
  };

  SearchService* svc = &service;
  srv.Get("/api/search", guarded([svc](const httplib::Request& req, httplib::Response& res) {
            std::vector<std::pair<std::string, std::string>> params(req.params.begin(), req.params.end());
            res.set_content(search_response_json(svc->search(parse_search_request(params))), "application/json");
          }));
  srv.Get(R"(/api/article/(.+))", guarded([svc](const httplib::Request& req, httplib::Response& res) {
            auto [snapshot, article] = svc->article(req.matches[1].str());
            res.set_content(article_json(*article), "application/json");
          }));
  const std::string version = impl_->options.version;
  srv.Get("/healthz", guarded([svc, version](const httplib::Request&, httplib::Response& res) {
            auto st = svc->state();
            ordered_json obj;
            obj["status"] = "ok";
            obj["version"] = version;
            obj["corpus"] = st->corpus_fingerprint;
            obj["articles"] = st->articles.size();
            res.set_content(obj.dump(), "application/json");
          }));
  if (impl_->options.ui_dir) {
    if (!srv.set_mount_point("/", impl_->options.ui_dir->string())) {
      throw UsageError("ui directory not found: " + impl_->options.ui_dir->string());
    }
  }
  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) res.set_content(error_json(httplib::status_message(res.status)), "application/json");
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
  auto& o = impl_->options;
  if (o.port == 0) {
    impl_->port = impl_->server.bind_to_any_port(o.host);
  } else {
    impl_->port = impl_->server.bind_to_port(o.host, o.port) ? o.port : -1;
  }
  if (impl_->port < 0) throw Error("cannot bind " + o.host + ":" + std::to_string(o.port));
  return impl_->port;
}

void HttpServer::listen() {
  if (impl_->port < 0) throw Error("HttpServer::listen before bind");
  impl_->server.listen_after_bind();
}

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace strata
