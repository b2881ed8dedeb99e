#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "strata/article.h"
#include "strata/pipeline.h"
#include "strata/qrels.h"
#include "strata/topics.h"

namespace testing_support {

inline std::filesystem::path fixture_dir() { return STRATA_FIXTURE_DIR; }
inline std::filesystem::path golden_dir() { return std::filesystem::path(STRATA_FIXTURE_DIR) / "golden"; }
inline std::filesystem::path cli_path() { return STRATA_CLI_PATH; }

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& stem) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            (stem + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline const std::vector<strata::Article>& fixture_articles() {
  static const auto articles = strata::load_corpus(fixture_dir() / "corpus.jsonl").articles;
  return articles;
}

inline const strata::Collection& fixture_collection() {
  static const auto collection = strata::Collection::build(fixture_articles());
  return collection;
}

inline const std::vector<strata::Topic>& fixture_topics() {
  static const auto topics = strata::load_topics(fixture_dir() / "topics.xml");
  return topics;
}

inline const strata::Qrels& fixture_qrels() {
  static const auto qrels = strata::load_qrels(fixture_dir() / "qrels.txt").qrels;
  return qrels;
}

inline strata::Article make_article(std::string id, std::string title, std::string abstract,
                                    std::vector<std::string> paragraphs = {}) {
  strata::Article a;
  a.article_id = std::move(id);
  a.title = std::move(title);
  a.abstract = std::move(abstract);
  a.paragraphs = std::move(paragraphs);
  return a;
}

inline strata::RankedList make_list(int topic, const std::vector<std::string>& docs, std::string tag = "t") {
  strata::RankedList list;
  list.topic_id = topic;
  list.tag = std::move(tag);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    list.entries.push_back({docs[i], static_cast<int>(i + 1), static_cast<double>(docs.size() - i)});
  }
  return list;
}

}  // namespace testing_support
