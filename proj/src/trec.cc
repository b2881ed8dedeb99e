#include "strata/trec.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "strata/errors.h"

namespace strata {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i == line.size()) break;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    out.push_back(line.substr(start, i - start));
  }
  return out;
}

double metric_value(const MetricRow& row, std::string_view name) {
  if (name == "ndcg_cut_10") return row.ndcg_10;
  if (name == "P_5") return row.p_5;
  if (name == "map") return row.map;
  if (name == "judged_5") return row.judged_5;
  throw UsageError("unknown metric '" + std::string(name) + "'");
}

}  // namespace

std::string format_score(double score) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), score);
  if (ec != std::errc()) throw DataError("cannot format score");
  return std::string(buf, ptr);
}

void write_run(std::ostream& out, const RunFile& run) {
  for (const auto& [topic_id, list] : run.topics) {
    if (list.topic_id != topic_id) {
      throw DataError("run list filed under topic " + std::to_string(topic_id) + " carries topic " +
                      std::to_string(list.topic_id));
    }
    list.validate();
    if (list.size() > kMaxRunEntriesPerTopic) {
      throw DataError("topic " + std::to_string(topic_id) + " has more than " +
                      std::to_string(kMaxRunEntriesPerTopic) + " entries");
    }
    const std::string& tag = list.tag.empty() ? run.tag : list.tag;
    if (tag.empty() || tag.find_first_of(" \t\r\n") != std::string::npos) {
      throw DataError("run tag must be a single non-empty token");
    }
    for (const RankedEntry& e : list.entries) {
      out << topic_id << " Q0 " << e.doc_id << ' ' << e.rank << ' ' << format_score(e.score) << ' ' << tag << '\n';
    }
  }
}

std::string write_run(const RunFile& run) {
  std::ostringstream out;
  write_run(out, run);
  return out.str();
}

void save_run(const std::filesystem::path& path, const RunFile& run) {
  const std::string content = write_run(run);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write run file " + tmp);
    out << content;
    if (!out) throw DataError("failed writing run file " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

RunFile parse_run(std::istream& in) {
  RunFile run;
  std::unordered_map<int, std::unordered_set<std::string>> seen;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto cols = split_ws(raw);
    if (cols.empty()) continue;
    if (cols.size() != 6) throw ParseError("expected 6 run columns, found " + std::to_string(cols.size()), line);
    int topic = 0;
    if (auto [p, ec] = std::from_chars(cols[0].data(), cols[0].data() + cols[0].size(), topic);
        ec != std::errc() || p != cols[0].data() + cols[0].size()) {
      throw ParseError("bad topic id '" + std::string(cols[0]) + "'", line);
    }
    long rank = 0;
    if (auto [p, ec] = std::from_chars(cols[3].data(), cols[3].data() + cols[3].size(), rank);
        ec != std::errc() || p != cols[3].data() + cols[3].size()) {
      throw ParseError("bad rank '" + std::string(cols[3]) + "'", line);
    }
    double score = 0.0;
    if (auto [p, ec] = std::from_chars(cols[4].data(), cols[4].data() + cols[4].size(), score);
        ec != std::errc() || p != cols[4].data() + cols[4].size() || !std::isfinite(score)) {
      throw ParseError("bad score '" + std::string(cols[4]) + "'", line);
    }
    if (run.tag.empty()) run.tag = std::string(cols[5]);

    auto [it, fresh] = run.topics.try_emplace(topic);
    RankedList& list = it->second;
    if (fresh) {
      list.topic_id = topic;
      list.tag = std::string(cols[5]);
    }
    if (!list.entries.empty() && score > list.entries.back().score) {
      throw ParseError("scores increase within topic " + std::to_string(topic), line);
    }
    if (!seen[topic].insert(std::string(cols[2])).second) {
      throw ParseError("duplicate doc '" + std::string(cols[2]) + "' in topic " + std::to_string(topic), line);
    }
    if (list.entries.size() >= kMaxRunEntriesPerTopic) {
      throw ParseError("topic " + std::to_string(topic) + " exceeds " + std::to_string(kMaxRunEntriesPerTopic) +
                           " entries",
                       line);
    }
    list.entries.push_back({std::string(cols[2]), static_cast<int>(list.entries.size() + 1), score});
  }
  return run;
}

RunFile parse_run(std::string_view content) {
  std::istringstream in{std::string(content)};
  return parse_run(in);
}

RunFile load_run(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open run file " + path.string());
  return parse_run(in);
}

std::optional<double> ndcg_at_k(const RankedList& list, const Qrels& qrels, std::size_t k) {
  std::vector<int> ideal;
  for (const auto& [doc, j] : qrels.topic(list.topic_id)) {
    if (j.grade > 0) ideal.push_back(j.grade);
  }
  if (ideal.empty()) return std::nullopt;
  std::sort(ideal.begin(), ideal.end(), std::greater<>());

  double dcg = 0.0;
  const std::size_t n = std::min(k, list.size());
  for (std::size_t i = 0; i < n; ++i) {
    const int g = qrels.grade(list.topic_id, list.entries[i].doc_id).value_or(0);
    if (g > 0) dcg += g / std::log2(static_cast<double>(i) + 2.0);
  }
  double idcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i) {
    idcg += ideal[i] / std::log2(static_cast<double>(i) + 2.0);
  }
  return dcg / idcg;
}

double precision_at_k(const RankedList& list, const Qrels& qrels, std::size_t k) {
  if (k == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < std::min(k, list.size()); ++i) {
    hits += qrels.grade(list.topic_id, list.entries[i].doc_id).value_or(0) > 0 ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(k);
}

std::optional<double> average_precision(const RankedList& list, const Qrels& qrels, std::size_t depth) {
  const std::size_t relevant = qrels.relevant_count(list.topic_id);
  if (relevant == 0) return std::nullopt;
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < std::min(depth, list.size()); ++i) {
    if (qrels.grade(list.topic_id, list.entries[i].doc_id).value_or(0) > 0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(relevant);
}

double judged_at_k(const RankedList& list, const Qrels& qrels, std::size_t k) {
  if (k == 0) return 0.0;
  std::size_t judged = 0;
  for (std::size_t i = 0; i < std::min(k, list.size()); ++i) {
    judged += qrels.judged(list.topic_id, list.entries[i].doc_id) ? 1 : 0;
  }
  return static_cast<double>(judged) / static_cast<double>(k);
}

EvalReport evaluate(const RunFile& run, const Qrels& qrels) {
  EvalReport report;
  for (const auto& [topic_id, list] : run.topics) {
    if (!qrels.has_topic(topic_id)) {
      report.skipped.emplace_back(topic_id, "no judgments");
      continue;
    }
    if (qrels.relevant_count(topic_id) == 0) {
      report.skipped.emplace_back(topic_id, "no relevant judgments");
      continue;
    }
    MetricRow row;
    row.topic_id = topic_id;
    row.ndcg_10 = *ndcg_at_k(list, qrels, 10);
    row.p_5 = precision_at_k(list, qrels, 5);
    row.map = *average_precision(list, qrels);
    row.judged_5 = judged_at_k(list, qrels, 5);
    report.rows.push_back(row);
  }
  if (!report.rows.empty()) {
    const double n = static_cast<double>(report.rows.size());
    for (const MetricRow& r : report.rows) {
      report.mean.ndcg_10 += r.ndcg_10;
      report.mean.p_5 += r.p_5;
      report.mean.map += r.map;
      report.mean.judged_5 += r.judged_5;
    }
    report.mean.ndcg_10 /= n;
    report.mean.p_5 /= n;
    report.mean.map /= n;
    report.mean.judged_5 /= n;
  }
  return report;
}

std::string format_report_text(const EvalReport& report, const std::vector<std::string>& metrics) {
  std::ostringstream out;
  char cell[64];
  out << "topic";
  for (const std::string& m : metrics) {
    std::snprintf(cell, sizeof(cell), "  %12s", m.c_str());
    out << cell;
  }
  out << '\n';
  auto emit = [&](const std::string& label, const MetricRow& row) {
    std::snprintf(cell, sizeof(cell), "%-5s", label.c_str());
    out << cell;
    for (const std::string& m : metrics) {
      std::snprintf(cell, sizeof(cell), "  %12.4f", metric_value(row, m));
      out << cell;
    }
    out << '\n';
  };
  for (const MetricRow& r : report.rows) emit(std::to_string(r.topic_id), r);
  emit("all", report.mean);
  for (const auto& [topic, reason] : report.skipped) {
    out << "# skipped topic " << topic << ": " << reason << '\n';
  }
  return out.str();
}

std::string format_report_jsonl(const EvalReport& report, const std::vector<std::string>& metrics) {
  std::ostringstream out;
  auto emit = [&](nlohmann::ordered_json label, const MetricRow& row) {
    nlohmann::ordered_json obj;
    obj["topic"] = std::move(label);
    for (const std::string& m : metrics) obj[m] = metric_value(row, m);
    out << obj.dump() << '\n';
  };
  for (const MetricRow& r : report.rows) emit(r.topic_id, r);
  emit("all", report.mean);
  for (const auto& [topic, reason] : report.skipped) {
    nlohmann::ordered_json obj;
    obj["topic"] = topic;
    obj["skipped"] = reason;
    out << obj.dump() << '\n';
  }
  return out.str();
}

}  // namespace strata
