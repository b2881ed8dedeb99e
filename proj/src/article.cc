#include "strata/article.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <unordered_set>

#include <json.hpp>

#include "strata/errors.h"

namespace strata {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::optional<std::string> optional_string(const json& obj, const char* key,
                                           std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw ParseError(std::string("field '") + key + "' must be a string", line);
  }
  return it->get<std::string>();
}

std::vector<std::string> string_array(const json& obj, const char* key,
                                      std::size_t line) {
  std::vector<std::string> out;
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return out;
  if (!it->is_array()) {
    throw ParseError(std::string("field '") + key + "' must be an array of strings", line);
  }
  for (const json& item : *it) {
    if (!item.is_string()) {
      throw ParseError(std::string("field '") + key + "' must be an array of strings", line);
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

std::string join_nonempty(std::initializer_list<std::string_view> parts) {
  std::string out;
  for (std::string_view p : parts) {
    if (p.empty()) continue;
    if (!out.empty()) out.push_back(' ');
    out.append(p);
  }
  return out;
}

}  // namespace

std::optional<int> Article::year() const {
  if (!publish_time || publish_time->size() < 4) return std::nullopt;
  const std::string_view prefix = std::string_view(*publish_time).substr(0, 4);
  if (!all_digits(prefix)) return std::nullopt;
  int value = 0;
  std::from_chars(prefix.data(), prefix.data() + prefix.size(), value);
  return value;
}

std::string_view to_string(Granularity g) {
  switch (g) {
    case Granularity::kAbstract: return "abstract";
    case Granularity::kFullText: return "fulltext";
    case Granularity::kParagraph: return "paragraph";
  }
  return "abstract";
}

Granularity parse_granularity(std::string_view name) {
  if (name == "abstract") return Granularity::kAbstract;
  if (name == "fulltext") return Granularity::kFullText;
  if (name == "paragraph") return Granularity::kParagraph;
  throw UsageError("unknown granularity '" + std::string(name) + "'");
}

Article parse_article(std::string_view line, std::size_t line_number) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed corpus record: ") + e.what(), line_number);
  }
  if (!obj.is_object()) throw ParseError("corpus record is not an object", line_number);

  Article a;
  auto id = optional_string(obj, "id", line_number);
  if (!id || id->empty()) throw RejectedRecord("record has no 'id'", line_number);
  if (std::any_of(id->begin(), id->end(), [](unsigned char c) { return c <= ' '; })) {
    throw RejectedRecord("id '" + *id + "' contains whitespace", line_number);
  }
  // "x.12" would be indistinguishable from paragraph 12 of article "x".
  if (auto dot = id->rfind('.'); dot != std::string::npos &&
                                 (dot + 1 == id->size() || all_digits(std::string_view(*id).substr(dot + 1)))) {
    throw RejectedRecord("id '" + *id + "' ends with a paragraph-style suffix", line_number);
  }
  a.article_id = std::move(*id);

  auto title = optional_string(obj, "title", line_number);
  if (!title || title->empty()) {
    throw RejectedRecord("record '" + a.article_id + "' has no 'title'", line_number);
  }
  a.title = std::move(*title);
  a.abstract = optional_string(obj, "abstract", line_number).value_or("");
  a.paragraphs = string_array(obj, "paragraphs", line_number);
  a.authors = string_array(obj, "authors", line_number);
  a.journal = optional_string(obj, "journal", line_number);
  a.source = optional_string(obj, "source", line_number);
  a.publish_time = optional_string(obj, "publish_time", line_number);
  a.url = optional_string(obj, "url", line_number);
  return a;
}

std::string serialize_article(const Article& a) {
  ordered_json obj;
  obj["id"] = a.article_id;
  obj["title"] = a.title;
  obj["abstract"] = a.abstract;
  obj["paragraphs"] = a.paragraphs;
  obj["authors"] = a.authors;
  if (a.journal) obj["journal"] = *a.journal;
  if (a.source) obj["source"] = *a.source;
  if (a.publish_time) obj["publish_time"] = *a.publish_time;
  if (a.url) obj["url"] = *a.url;
  return obj.dump();
}

std::vector<RetrievalUnit> generate_units(const Article& a, Granularity g) {
  std::vector<RetrievalUnit> units;
  const std::string head = join_nonempty({a.title, a.abstract});
  switch (g) {
    case Granularity::kAbstract:
      units.push_back({a.article_id, a.article_id, g, head, std::nullopt});
      break;
    case Granularity::kFullText: {
      std::string text = head;
      for (const std::string& p : a.paragraphs) {
        if (p.empty()) continue;
        text.push_back(' ');
        text.append(p);
      }
      units.push_back({a.article_id, a.article_id, g, std::move(text), std::nullopt});
      break;
    }
    case Granularity::kParagraph:
      units.reserve(a.paragraphs.size() + 1);
      units.push_back({a.article_id, a.article_id, g, head, std::nullopt});
      for (std::size_t i = 0; i < a.paragraphs.size(); ++i) {
        units.push_back({a.article_id + "." + std::to_string(i), a.article_id, g,
                         join_nonempty({head, a.paragraphs[i]}), i});
      }
      break;
  }
  return units;
}

std::vector<RetrievalUnit> generate_units(const std::vector<Article>& articles,
                                          Granularity g) {
  std::vector<RetrievalUnit> units;
  for (const Article& a : articles) {
    auto more = generate_units(a, g);
    std::move(more.begin(), more.end(), std::back_inserter(units));
  }
  return units;
}

std::pair<std::string, std::optional<std::size_t>> split_unit_id(std::string_view unit_id) {
  if (unit_id.empty()) throw DataError("empty unit id");
  const auto dot = unit_id.rfind('.');
  if (dot == std::string_view::npos) return {std::string(unit_id), std::nullopt};
  if (dot + 1 == unit_id.size()) {
    throw DataError("malformed unit id '" + std::string(unit_id) + "'");
  }
  const std::string_view suffix = unit_id.substr(dot + 1);
  if (!all_digits(suffix)) return {std::string(unit_id), std::nullopt};
  if (dot == 0) throw DataError("malformed unit id '" + std::string(unit_id) + "'");
  std::size_t index = 0;
  auto [ptr, ec] = std::from_chars(suffix.data(), suffix.data() + suffix.size(), index);
  if (ec != std::errc()) {
    throw DataError("malformed unit id '" + std::string(unit_id) + "'");
  }
  return {std::string(unit_id.substr(0, dot)), index};
}

CorpusLoad read_corpus(std::istream& in) {
  CorpusLoad load;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      Article a = parse_article(line, line_number);
      if (!seen.insert(a.article_id).second) {
        throw DataError("duplicate article id '" + a.article_id + "'", line_number);
      }
      load.articles.push_back(std::move(a));
    } catch (const RejectedRecord& e) {
      load.rejected.emplace_back(line_number, e.what());
    }
  }
  return load;
}

CorpusLoad load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file " + path.string());
  return read_corpus(in);
}

}  // namespace strata
