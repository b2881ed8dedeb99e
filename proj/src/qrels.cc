#include "strata/qrels.h"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "strata/errors.h"

namespace strata {

namespace {

template <typename T>
bool parse_number(std::string_view s, T& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

void Qrels::add(int topic_id, std::string doc_id, int grade, std::string iteration) {
  if (grade < 0 || grade > 2) throw DataError("grade " + std::to_string(grade) + " outside {0,1,2}");
  auto& judgments = topics_[topic_id];
  auto [it, inserted] = judgments.emplace(std::move(doc_id), Judgment{grade, std::move(iteration)});
  if (!inserted) {
    throw DataError("topic " + std::to_string(topic_id) + " judges '" + it->first + "' twice");
  }
}

std::optional<int> Qrels::grade(int topic_id, std::string_view doc_id) const {
  auto t = topics_.find(topic_id);
  if (t == topics_.end()) return std::nullopt;
  auto d = t->second.find(doc_id);
  if (d == t->second.end()) return std::nullopt;
  return d->second.grade;
}

const Qrels::TopicJudgments& Qrels::topic(int topic_id) const {
  static const TopicJudgments kEmpty;
  auto t = topics_.find(topic_id);
  return t == topics_.end() ? kEmpty : t->second;
}

std::vector<int> Qrels::topic_ids() const {
  std::vector<int> ids;
  for (const auto& [id, judgments] : topics_) ids.push_back(id);
  return ids;
}

std::size_t Qrels::relevant_count(int topic_id) const {
  std::size_t count = 0;
  for (const auto& [doc, j] : topic(topic_id)) count += j.grade > 0 ? 1 : 0;
  return count;
}

std::size_t Qrels::size() const {
  std::size_t n = 0;
  for (const auto& [id, judgments] : topics_) n += judgments.size();
  return n;
}

Qrels Qrels::merged_with(const Qrels& other) const {
  Qrels out = *this;
  for (const auto& [topic_id, judgments] : other.topics_) {
    auto& target = out.topics_[topic_id];
    for (const auto& [doc, j] : judgments) target[doc] = j;
  }
  return out;
}

QrelsLoad read_qrels(std::istream& in) {
  QrelsLoad load;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::istringstream fields(raw);
    std::vector<std::string> cols;
    for (std::string col; fields >> col;) cols.push_back(std::move(col));
    if (cols.empty()) continue;
    if (cols.size() != 4) {
      throw ParseError("expected 4 qrels columns, found " + std::to_string(cols.size()), line);
    }
    int topic = 0;
    int grade = 0;
    if (!parse_number(cols[0], topic)) throw ParseError("bad topic id '" + cols[0] + "'", line);
    if (!parse_number(cols[3], grade)) throw ParseError("bad grade '" + cols[3] + "'", line);
    if (grade < 0 || grade > 2) {
      const int clamped = grade < 0 ? 0 : 2;
      load.warnings.push_back("line " + std::to_string(line) + ": grade " + std::to_string(grade) +
                              " clamped to " + std::to_string(clamped));
      grade = clamped;
    }
    try {
      load.qrels.add(topic, std::move(cols[2]), grade, std::move(cols[1]));
    } catch (const DataError& e) {
      throw DataError(e.what(), line);
    }
  }
  return load;
}

QrelsLoad load_qrels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open qrels file " + path.string());
  return read_qrels(in);
}

void write_qrels(std::ostream& out, const Qrels& qrels) {
  for (int topic : qrels.topic_ids()) {
    for (const auto& [doc, j] : qrels.topic(topic)) {
      out << topic << ' ' << j.iteration << ' ' << doc << ' ' << j.grade << '\n';
    }
  }
}

}  // namespace strata
