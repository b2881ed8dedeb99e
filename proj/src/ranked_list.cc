#include "strata/ranked_list.h"

#include <cmath>
#include <string_view>
#include <unordered_map>

#include "strata/errors.h"

namespace strata {

std::vector<std::string> RankedList::doc_ids() const {
  std::vector<std::string> ids;
  ids.reserve(entries.size());
  for (const RankedEntry& e : entries) ids.push_back(e.doc_id);
  return ids;
}

void RankedList::renumber() {
  for (std::size_t i = 0; i < entries.size(); ++i) entries[i].rank = static_cast<int>(i + 1);
}

RankedList RankedList::from_scored(int topic_id, std::string tag,
                                   std::vector<std::pair<std::string, double>> scored) {
  RankedList list;
  list.topic_id = topic_id;
  list.tag = std::move(tag);
  list.entries.reserve(scored.size());
  int rank = 0;
  for (auto& [doc, score] : scored) list.entries.push_back({std::move(doc), ++rank, score});
  return list;
}

void RankedList::validate() const {
  std::unordered_map<std::string_view, int> seen;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const RankedEntry& e = entries[i];
    if (e.rank != static_cast<int>(i + 1)) {
      throw DataError("topic " + std::to_string(topic_id) + ": rank " + std::to_string(e.rank) +
                      " at position " + std::to_string(i + 1));
    }
    if (!std::isfinite(e.score)) {
      throw DataError("topic " + std::to_string(topic_id) + ": non-finite score for '" + e.doc_id + "'");
    }
    if (i > 0 && e.score > entries[i - 1].score) {
      throw DataError("topic " + std::to_string(topic_id) + ": scores increase at rank " +
                      std::to_string(e.rank));
    }
    if (!seen.emplace(e.doc_id, e.rank).second) {
      throw DataError("topic " + std::to_string(topic_id) + ": duplicate doc '" + e.doc_id + "'");
    }
  }
}

}  // namespace strata
