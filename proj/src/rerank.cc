#include "strata/rerank.h"

#include <algorithm>
#include <future>
#include <numeric>

#include "strata/errors.h"
#include "strata/text.h"

namespace strata {

namespace {

// Splits `requests` into batches, scores up to options.max_in_flight batches
// at a time and re-associates results by position.
template <typename Request>
std::vector<double> score_batched(Scorer& scorer, const std::vector<Request>& requests,
                                  const RerankOptions& options) {
  std::vector<double> scores(requests.size(), 0.0);
  const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
  const std::size_t in_flight = scorer.thread_safe() ? std::max<std::size_t>(1, options.max_in_flight) : 1;

  auto run_one = [&](std::size_t begin) {
    const std::size_t end = std::min(begin + batch, requests.size());
    std::span<const Request> slice(requests.data() + begin, end - begin);
    std::vector<double> out;
    try {
      out = scorer.score(slice);
    } catch (const ScorerError& e) {
      throw ScorerError(e.detail(), begin + e.batch_index());
    }
    if (out.size() != slice.size()) {
      throw ScorerError("expected " + std::to_string(slice.size()) + " scores, got " +
                            std::to_string(out.size()),
                        begin + std::min(out.size(), slice.size()));
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (!(out[i] >= 0.0 && out[i] <= 1.0)) {
        throw ScorerError("score outside [0,1]", begin + i);
      }
      scores[begin + i] = out[i];
    }
  };

  std::size_t next = 0;
  while (next < requests.size()) {
    if (in_flight == 1) {
      run_one(next);
      next += batch;
      continue;
    }
    std::vector<std::future<void>> wave;
    for (std::size_t k = 0; k < in_flight && next < requests.size(); ++k, next += batch) {
      wave.push_back(std::async(std::launch::async, run_one, next));
    }
    for (auto& f : wave) f.get();
  }
  return scores;
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> window_ranges(std::size_t sentence_count) {
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  for (std::size_t start = 0; start < sentence_count; start += kWindowStride) {
    const std::size_t last = std::min(start + kWindowSentences, sentence_count) - 1;
    if (!ranges.empty() && last <= ranges.back().second) continue;
    ranges.emplace_back(start, last);
  }
  return ranges;
}

std::vector<Window> make_windows(std::string_view text) {
  const auto sentences = split_sentences(text);
  std::vector<Window> windows;
  for (auto [first, last] : window_ranges(sentences.size())) {
    Window w{first, last, {}};
    for (std::size_t i = first; i <= last; ++i) {
      if (i > first) w.text.push_back(' ');
      w.text.append(sentences[i]);
    }
    windows.push_back(std::move(w));
  }
  return windows;
}

RankedList append_below(RankedList head, std::vector<RankedEntry> tail) {
  if (!head.empty() && !tail.empty()) {
    double floor = head.entries.front().score;
    for (const RankedEntry& e : head.entries) floor = std::min(floor, e.score);
    double lo = tail.front().score;
    double hi = tail.front().score;
    for (const RankedEntry& e : tail) {
      lo = std::min(lo, e.score);
      hi = std::max(hi, e.score);
    }
    for (RankedEntry& e : tail) {
      const double unit = hi > lo ? (e.score - lo) / (hi - lo) : 0.0;
      e.score = floor - 1.0 + 0.5 * unit;
    }
  }
  std::move(tail.begin(), tail.end(), std::back_inserter(head.entries));
  head.renumber();
  return head;
}

PointwiseResult pointwise_rerank(Scorer& scorer, std::string_view query, const RankedList& candidates,
                                 const DocumentLookup& documents, const RerankOptions& options) {
  const std::size_t depth = std::min(options.depth, candidates.size());

  std::vector<PointwiseRequest> requests;
  std::vector<std::size_t> owner;  // request -> candidate position
  for (std::size_t i = 0; i < depth; ++i) {
    const std::string& doc_id = candidates.entries[i].doc_id;
    const std::string* text = documents(doc_id);
    if (!text) throw LookupError("no text for candidate '" + doc_id + "'");
    std::vector<Window> windows = make_windows(*text);
    if (windows.empty()) windows.push_back({});  // sentence-free text is still scored, as one empty passage
    for (Window& w : windows) {
      requests.push_back({std::string(query), truncate_tokens(w.text, options.max_tokens)});
      owner.push_back(i);
    }
  }
  const std::vector<double> scores = score_batched(scorer, requests, options);

  std::vector<double> best(depth, 0.0);
  std::vector<std::ptrdiff_t> best_request(depth, -1);
  for (std::size_t r = 0; r < requests.size(); ++r) {
    const std::size_t i = owner[r];
    if (best_request[i] < 0 || scores[r] > best[i]) {
      best[i] = scores[r];
      best_request[i] = static_cast<std::ptrdiff_t>(r);
    }
  }

  PointwiseResult result;
  result.list.topic_id = candidates.topic_id;
  result.list.tag = candidates.tag;
  std::vector<std::size_t> order(depth);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return best[a] > best[b]; });
  for (std::size_t i : order) {
    const RankedEntry& e = candidates.entries[i];
    result.list.entries.push_back({e.doc_id, 0, best[i]});
    result.best_passage[e.doc_id] =
        best_request[i] >= 0 ? requests[static_cast<std::size_t>(best_request[i])].passage : std::string();
  }
  std::vector<RankedEntry> tail(candidates.entries.begin() + static_cast<std::ptrdiff_t>(depth),
                                candidates.entries.end());
  result.list = append_below(std::move(result.list), std::move(tail));
  return result;
}

std::vector<double> pairwise_aggregate(const ScoreMatrix& m) {
  const std::size_t n = m.size();
  std::vector<double> s(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      s[i] += m(i, j) + (1.0 - m(j, i));
    }
  }
  return s;
}

RankedList apply_pairwise(const RankedList& candidates, const ScoreMatrix& matrix) {
  const std::size_t n = matrix.size();
  if (n > candidates.size()) throw UsageError("score matrix larger than candidate list");
  const std::vector<double> s = pairwise_aggregate(matrix);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });

  RankedList head;
  head.topic_id = candidates.topic_id;
  head.tag = candidates.tag;
  for (std::size_t i : order) head.entries.push_back({candidates.entries[i].doc_id, 0, s[i]});
  std::vector<RankedEntry> tail(candidates.entries.begin() + static_cast<std::ptrdiff_t>(n),
                                candidates.entries.end());
  return append_below(std::move(head), std::move(tail));
}

RankedList pairwise_rerank(Scorer& scorer, std::string_view query, const RankedList& candidates,
                           const std::unordered_map<std::string, std::string>& passages,
                           std::size_t top_n, const RerankOptions& options) {
  const std::size_t n = std::min(top_n, candidates.size());
  std::vector<const std::string*> text(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = passages.find(candidates.entries[i].doc_id);
    if (it == passages.end()) {
      throw LookupError("no pointwise passage for candidate '" + candidates.entries[i].doc_id + "'");
    }
    text[i] = &it->second;
  }

  std::vector<PairwiseRequest> requests;
  requests.reserve(n * (n > 0 ? n - 1 : 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) requests.push_back({std::string(query), *text[i], *text[j]});
    }
  }
  const std::vector<double> p = score_batched(scorer, requests, options);

  ScoreMatrix matrix(n);
  std::size_t r = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) matrix(i, j) = p[r++];
    }
  }
  return apply_pairwise(candidates, matrix);
}

}  // namespace strata
