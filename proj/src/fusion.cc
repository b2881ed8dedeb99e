#include "strata/fusion.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "strata/errors.h"

namespace strata {

RankedList max_aggregate(const RankedList& units) {
  std::unordered_map<std::string, double> best;
  std::vector<std::string> order;
  for (const RankedEntry& e : units.entries) {
    std::string article;
    try {
      article = split_unit_id(e.doc_id).first;
    } catch (const DataError&) {
      throw DataError("topic " + std::to_string(units.topic_id) + ": malformed unit id '" +
                      e.doc_id + "' at rank " + std::to_string(e.rank));
    }
    auto [it, inserted] = best.emplace(article, e.score);
    if (inserted) {
      order.push_back(std::move(article));
    } else if (e.score > it->second) {
      it->second = e.score;
    }
  }
  std::vector<std::pair<std::string, double>> scored;
  scored.reserve(order.size());
  for (std::string& article : order) {
    const double s = best.at(article);
    scored.emplace_back(std::move(article), s);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return RankedList::from_scored(units.topic_id, units.tag, std::move(scored));
}

RankedList rrf(std::span<const RankedList> lists, double k, std::size_t depth) {
  if (!(k > 0.0)) throw UsageError("rrf constant k must be positive");
  RankedList fused;
  if (lists.empty()) return fused;
  fused.topic_id = lists.front().topic_id;
  fused.tag = lists.front().tag;

  std::unordered_map<std::string, std::vector<double>> contributions;
  for (const RankedList& list : lists) {
    if (list.topic_id != fused.topic_id) {
      throw DataError("rrf inputs disagree on topic: " + std::to_string(fused.topic_id) + " vs " +
                      std::to_string(list.topic_id));
    }
    for (const RankedEntry& e : list.entries) {
      if (e.rank < 1 || static_cast<std::size_t>(e.rank) > depth) continue;
      contributions[e.doc_id].push_back(1.0 / (k + static_cast<double>(e.rank)));
    }
  }

  std::vector<std::pair<std::string, double>> scored;
  scored.reserve(contributions.size());
  for (auto& [doc, terms] : contributions) {
    // A fixed summation order makes the fused score independent of list order.
    std::sort(terms.begin(), terms.end());
    double sum = 0.0;
    for (double t : terms) sum += t;
    scored.emplace_back(doc, sum);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (scored.size() > depth) scored.resize(depth);
  RankedList out = RankedList::from_scored(fused.topic_id, fused.tag, std::move(scored));
  return out;
}

RankedList first_stage(const InvertedIndex& index, int topic_id,
                       std::span<const std::string> query, std::size_t depth) {
  const std::string tag(to_string(index.granularity()));
  auto to_list = [&](std::vector<ScoredUnit> hits) {
    std::vector<std::pair<std::string, double>> scored;
    scored.reserve(hits.size());
    for (ScoredUnit& hit : hits) scored.emplace_back(std::move(hit.unit_id), hit.score);
    return RankedList::from_scored(topic_id, tag, std::move(scored));
  };
  if (index.granularity() != Granularity::kParagraph) return to_list(index.search(query, depth));

  // Several paragraphs can collapse onto one article, so widen the unit
  // cutoff until `depth` articles survive aggregation or the index runs dry.
  std::size_t k = depth;
  while (true) {
    auto hits = index.search(query, k);
    const bool exhausted = hits.size() < k;
    RankedList articles = max_aggregate(to_list(std::move(hits)));
    if (exhausted || articles.size() >= depth) {
      if (articles.size() > depth) articles.entries.resize(depth);
      return articles;
    }
    k *= 2;
  }
}

RankedList fuse_indexes(const IndexSet& indexes, const QueryRepresentation& query,
                        std::size_t depth, double k) {
  if (!indexes.abstract || !indexes.fulltext || !indexes.paragraph) {
    throw UsageError("fusion requires abstract, fulltext and paragraph indexes");
  }
  const auto tokens = query.tokens();
  const RankedList lists[] = {
      first_stage(*indexes.abstract, query.topic_id, tokens, depth),
      first_stage(*indexes.fulltext, query.topic_id, tokens, depth),
      first_stage(*indexes.paragraph, query.topic_id, tokens, depth),
  };
  return rrf(lists, k, depth);
}

RankedList fusion_run(const Topic& topic, const IndexSet& indexes, FusionVariant variant,
                      std::size_t depth, double idf_threshold) {
  if (!indexes.abstract) throw UsageError("fusion requires an abstract index");
  const double threshold = variant == FusionVariant::kFusion1 ? kNoExpansion : idf_threshold;
  const QueryRepresentation query = generate_query(topic, *indexes.abstract, threshold);
  RankedList fused = fuse_indexes(indexes, query, depth);
  fused.tag = variant == FusionVariant::kFusion1 ? "fusion1" : "fusion2";
  return fused;
}

}  // namespace strata
