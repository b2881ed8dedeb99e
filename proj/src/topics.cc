#include "strata/topics.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "strata/errors.h"
#include "strata/text.h"

namespace strata {

namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

int parse_topic_number(std::string_view raw, std::size_t line) {
  const std::string s = trim(raw);
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || value <= 0) {
    throw ParseError("topic number '" + s + "' is not a positive integer", line);
  }
  return value;
}

std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') {
      out.push_back(s[i]);
      continue;
    }
    static constexpr std::pair<std::string_view, char> kEntities[] = {
        {"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'}, {"&quot;", '"'}, {"&apos;", '\''}};
    bool matched = false;
    for (const auto& [name, ch] : kEntities) {
      if (s.substr(i).starts_with(name)) {
        out.push_back(ch);
        i += name.size() - 1;
        matched = true;
        break;
      }
    }
    if (!matched) out.push_back('&');
  }
  return out;
}

std::size_t line_of(std::string_view content, std::size_t offset) {
  return 1 + static_cast<std::size_t>(std::count(content.begin(), content.begin() + offset, '\n'));
}

std::optional<std::string> xml_element(std::string_view body, std::string_view name) {
  const std::string open = "<" + std::string(name);
  const std::string close = "</" + std::string(name) + ">";
  auto start = body.find(open);
  while (start != std::string_view::npos) {
    const char after = start + open.size() < body.size() ? body[start + open.size()] : '\0';
    if (after == '>' || after == ' ' || after == '\t' || after == '\n' || after == '\r') break;
    start = body.find(open, start + 1);
  }
  if (start == std::string_view::npos) return std::nullopt;
  const auto gt = body.find('>', start);
  if (gt == std::string_view::npos) return std::nullopt;
  const auto end = body.find(close, gt + 1);
  if (end == std::string_view::npos) return std::nullopt;
  return decode_entities(trim(body.substr(gt + 1, end - gt - 1)));
}

std::vector<Topic> parse_xml_topics(std::string_view content) {
  std::vector<Topic> topics;
  std::size_t pos = 0;
  while ((pos = content.find("<topic", pos)) != std::string_view::npos) {
    const char after = pos + 6 < content.size() ? content[pos + 6] : '\0';
    if (after != ' ' && after != '\t' && after != '\n' && after != '\r' && after != '>') {
      pos += 6;  // <topics> or another element sharing the prefix
      continue;
    }
    const std::size_t line = line_of(content, pos);
    const auto tag_end = content.find('>', pos);
    if (tag_end == std::string_view::npos) throw ParseError("unterminated <topic> tag", line);
    const std::string_view tag = content.substr(pos, tag_end - pos);
    const auto attr = tag.find("number");
    if (attr == std::string_view::npos) throw ParseError("<topic> without number attribute", line);
    auto eq = tag.find('=', attr);
    if (eq == std::string_view::npos) throw ParseError("malformed number attribute", line);
    std::string_view value = tag.substr(eq + 1);
    value = value.substr(0, value.find_first_of(" \t\r\n/"));
    if (!value.empty() && (value.front() == '"' || value.front() == '\'')) {
      const char q = value.front();
      const auto closing = value.find(q, 1);
      if (closing == std::string_view::npos) throw ParseError("unterminated number attribute", line);
      value = value.substr(1, closing - 1);
    }
    const auto close = content.find("</topic>", tag_end);
    if (close == std::string_view::npos) throw ParseError("missing </topic>", line);
    const std::string_view body = content.substr(tag_end + 1, close - tag_end - 1);

    Topic t;
    t.topic_id = parse_topic_number(value, line);
    auto query = xml_element(body, "query");
    if (!query || query->empty()) throw ParseError("topic " + std::to_string(t.topic_id) + " has no query", line);
    t.query = std::move(*query);
    t.question = xml_element(body, "question").value_or("");
    t.narrative = xml_element(body, "narrative").value_or("");
    topics.push_back(std::move(t));
    pos = close + 1;
  }
  return topics;
}

std::string json_text_field(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_string()) throw ParseError(std::string("field '") + key + "' must be a string", line);
  return it->get<std::string>();
}

std::vector<Topic> parse_json_topics(std::string_view content) {
  std::vector<Topic> topics;
  std::istringstream in{std::string(content)};
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (trim(raw).empty()) continue;
    json obj;
    try {
      obj = json::parse(raw);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed topic record: ") + e.what(), line);
    }
    if (!obj.is_object()) throw ParseError("topic record is not an object", line);
    Topic t;
    auto number = obj.find("number");
    if (number == obj.end()) throw ParseError("topic record has no number", line);
    if (number->is_number_integer()) {
      t.topic_id = number->get<int>();
      if (t.topic_id <= 0) throw ParseError("topic number must be positive", line);
    } else if (number->is_string()) {
      t.topic_id = parse_topic_number(number->get<std::string>(), line);
    } else {
      throw ParseError("topic number must be an integer", line);
    }
    t.query = json_text_field(obj, "query", line);
    if (trim(t.query).empty()) throw ParseError("topic " + std::to_string(t.topic_id) + " has no query", line);
    t.question = json_text_field(obj, "question", line);
    t.narrative = json_text_field(obj, "narrative", line);
    topics.push_back(std::move(t));
  }
  return topics;
}

}  // namespace

std::vector<std::string> QueryRepresentation::tokens() const {
  std::vector<std::string> out;
  out.reserve(terms.size());
  for (const QueryTerm& t : terms) out.push_back(t.term);
  return out;
}

std::vector<Topic> parse_topics(std::string_view content) {
  const auto first = content.find_first_not_of(" \t\r\n");
  std::vector<Topic> topics;
  if (first == std::string_view::npos) return topics;
  topics = content[first] == '<' ? parse_xml_topics(content) : parse_json_topics(content);
  std::unordered_set<int> seen;
  for (const Topic& t : topics) {
    if (!seen.insert(t.topic_id).second) {
      throw DataError("duplicate topic number " + std::to_string(t.topic_id));
    }
  }
  return topics;
}

std::vector<Topic> load_topics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open topics file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_topics(buffer.str());
}

std::vector<std::string> extract_key_terms(std::string_view question, const InvertedIndex& idf_source,
                                           double threshold) {
  std::vector<std::string> out;
  if (std::isinf(threshold) && threshold > 0) return out;
  std::unordered_set<std::string> seen;
  for (std::string& term : strip_stopwords(tokenize(question))) {
    if (idf_source.idf(term) < threshold) continue;
    if (seen.insert(term).second) out.push_back(std::move(term));
  }
  return out;
}

QueryRepresentation generate_query(const Topic& topic, std::span<const std::string> expansion) {
  QueryRepresentation rep;
  rep.topic_id = topic.topic_id;
  std::unordered_set<std::string> seen;
  for (std::string& term : strip_stopwords(tokenize(topic.query))) {
    if (seen.insert(term).second) rep.terms.push_back({std::move(term), TermSource::kQueryField});
  }
  for (const std::string& raw : expansion) {
    // Extractors may hand back multi-word entities; normalize them the same way.
    for (std::string& term : strip_stopwords(tokenize(raw))) {
      if (seen.insert(term).second) {
        rep.terms.push_back({std::move(term), TermSource::kQuestionExpansion});
      }
    }
  }
  return rep;
}

QueryRepresentation generate_query(const Topic& topic, const InvertedIndex& idf_source,
                                   double threshold) {
  const auto expansion = extract_key_terms(topic.question, idf_source, threshold);
  return generate_query(topic, expansion);
}

QueryRepresentation generate_query(const Topic& topic, KeyTermExtractor& extractor) {
  const auto expansion = extractor.extract(topic.question);
  return generate_query(topic, expansion);
}

}  // namespace strata
