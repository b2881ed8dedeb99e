#include "strata/inverted_index.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

#include "strata/errors.h"
#include "strata/text.h"

namespace strata {

namespace {

// Snapshot layout (all integers little-endian):
//   "STRATAIX" | u32 version | u8 granularity | f64 k1 | f64 b | u64 N
//   N x { str unit_id | str article_id | str text | u32 length }
//   u64 T | T x { str term | u64 n | n x { u32 ordinal | u32 tf } }
// str = u64 byte length followed by the bytes. Terms are written sorted.
constexpr char kMagic[8] = {'S', 'T', 'R', 'A', 'T', 'A', 'I', 'X'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.put(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
  }
}

void put_double(std::ostream& out, double value) { put(out, std::bit_cast<std::uint64_t>(value)); }

void put_string(std::ostream& out, std::string_view s) {
  put<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T get(std::istream& in) {
  static_assert(std::is_integral_v<T>);
  std::uint64_t value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw DataError("truncated index snapshot");
    value |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return static_cast<T>(value);
}

double get_double(std::istream& in) { return std::bit_cast<double>(get<std::uint64_t>(in)); }

std::string get_string(std::istream& in) {
  const auto size = get<std::uint64_t>(in);
  if (size > (std::uint64_t{1} << 34)) throw DataError("corrupt index snapshot (string length)");
  std::string s(size, '\0');
  in.read(s.data(), static_cast<std::streamsize>(size));
  if (static_cast<std::uint64_t>(in.gcount()) != size) throw DataError("truncated index snapshot");
  return s;
}

}  // namespace

InvertedIndex InvertedIndex::build(std::vector<RetrievalUnit> units, Granularity granularity,
                                   Bm25Params params) {
  std::sort(units.begin(), units.end(),
            [](const RetrievalUnit& a, const RetrievalUnit& b) { return a.unit_id < b.unit_id; });
  for (std::size_t i = 1; i < units.size(); ++i) {
    if (units[i].unit_id == units[i - 1].unit_id) {
      throw DataError("duplicate unit id '" + units[i].unit_id + "'");
    }
  }
  if (units.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw DataError("too many retrieval units for one index");
  }

  InvertedIndex idx;
  idx.granularity_ = granularity;
  idx.params_ = params;
  idx.unit_ids_.reserve(units.size());
  idx.article_ids_.reserve(units.size());
  idx.texts_.reserve(units.size());
  idx.lengths_.reserve(units.size());

  std::unordered_map<std::string, std::uint32_t> tf;
  for (std::uint32_t doc = 0; doc < units.size(); ++doc) {
    RetrievalUnit& u = units[doc];
    const auto tokens = tokenize(u.text);
    tf.clear();
    for (const std::string& t : tokens) ++tf[t];
    for (auto& [term, count] : tf) idx.postings_[term].push_back({doc, count});
    idx.unit_ids_.push_back(std::move(u.unit_id));
    idx.article_ids_.push_back(std::move(u.article_id));
    idx.texts_.push_back(std::move(u.text));
    idx.lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
  }
  idx.finalize();
  return idx;
}

void InvertedIndex::finalize() {
  ordinals_.clear();
  ordinals_.reserve(unit_ids_.size());
  for (std::uint32_t i = 0; i < unit_ids_.size(); ++i) ordinals_.emplace(unit_ids_[i], i);
  const double total = std::accumulate(lengths_.begin(), lengths_.end(), 0.0);
  avg_dl_ = unit_ids_.empty() ? 0.0 : total / static_cast<double>(unit_ids_.size());
}

std::size_t InvertedIndex::df(std::string_view term) const { return postings(term).size(); }

double InvertedIndex::idf(std::string_view term) const {
  const double n = static_cast<double>(size());
  const double d = static_cast<double>(df(term));
  return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

std::span<const Posting> InvertedIndex::postings(std::string_view term) const {
  auto it = postings_.find(std::string(term));
  if (it == postings_.end()) return {};
  return it->second;
}

std::optional<std::uint32_t> InvertedIndex::ordinal(std::string_view unit_id) const {
  auto it = ordinals_.find(std::string(unit_id));
  if (it == ordinals_.end()) return std::nullopt;
  return it->second;
}

const std::string& InvertedIndex::unit_text(std::string_view unit_id) const {
  auto doc = ordinal(unit_id);
  if (!doc) throw LookupError("unknown unit id '" + std::string(unit_id) + "'");
  return texts_[*doc];
}

std::vector<std::string> InvertedIndex::vocabulary() const {
  std::vector<std::string> terms;
  terms.reserve(postings_.size());
  for (const auto& [term, list] : postings_) terms.push_back(term);
  std::sort(terms.begin(), terms.end());
  return terms;
}

double InvertedIndex::term_weight(double idf, std::uint32_t tf, std::uint32_t doc_length) const {
  const double f = static_cast<double>(tf);
  const double norm = 1.0 - params_.b + params_.b * static_cast<double>(doc_length) / avg_dl_;
  return idf * f * (params_.k1 + 1.0) / (f + params_.k1 * norm);
}

double InvertedIndex::bm25_score(std::span<const std::string> query,
                                 std::string_view unit_id) const {
  auto doc = ordinal(unit_id);
  if (!doc) throw LookupError("unknown unit id '" + std::string(unit_id) + "'");
  double score = 0.0;
  for (const std::string& term : query) {
    auto list = postings(term);
    auto it = std::lower_bound(list.begin(), list.end(), *doc,
                               [](const Posting& p, std::uint32_t d) { return p.doc < d; });
    if (it == list.end() || it->doc != *doc) continue;
    score += term_weight(idf(term), it->tf, lengths_[*doc]);
  }
  return score;
}

std::vector<ScoredUnit> InvertedIndex::search(std::span<const std::string> query,
                                              std::size_t k) const {
  std::vector<ScoredUnit> out;
  if (k == 0 || query.empty() || unit_ids_.empty()) return out;

  std::vector<double> acc(unit_ids_.size(), 0.0);
  std::vector<std::uint32_t> touched;
  for (const std::string& term : query) {
    auto list = postings(term);
    if (list.empty()) continue;
    const double w = idf(term);
    for (const Posting& p : list) {
      if (acc[p.doc] == 0.0) touched.push_back(p.doc);
      acc[p.doc] += term_weight(w, p.tf, lengths_[p.doc]);
    }
  }
  std::erase_if(touched, [&](std::uint32_t d) { return !(acc[d] > 0.0); });
  std::sort(touched.begin(), touched.end());
  touched.erase(std::unique(touched.begin(), touched.end()), touched.end());

  auto better = [&](std::uint32_t a, std::uint32_t b) {
    if (acc[a] != acc[b]) return acc[a] > acc[b];
    return a < b;
  };
  const std::size_t n = std::min(k, touched.size());
  std::partial_sort(touched.begin(), touched.begin() + static_cast<std::ptrdiff_t>(n),
                    touched.end(), better);
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back({unit_ids_[touched[i]], acc[touched[i]]});
  return out;
}

std::vector<ScoredUnit> InvertedIndex::search(std::string_view query_text, std::size_t k) const {
  const auto tokens = tokenize(query_text);
  return search(tokens, k);
}

void InvertedIndex::validate() const {
  const std::size_t n = unit_ids_.size();
  if (article_ids_.size() != n || texts_.size() != n || lengths_.size() != n) {
    throw DataError("index unit tables have inconsistent sizes");
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (!(unit_ids_[i - 1] < unit_ids_[i])) throw DataError("unit ids not strictly sorted");
  }
  std::vector<std::uint64_t> length_from_postings(n, 0);
  for (const auto& [term, list] : postings_) {
    if (list.empty()) throw DataError("empty postings list for '" + term + "'");
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (list[i].doc >= n) throw DataError("posting out of range for '" + term + "'");
      if (list[i].tf == 0) throw DataError("zero tf posting for '" + term + "'");
      if (i > 0 && list[i - 1].doc >= list[i].doc) {
        throw DataError("postings for '" + term + "' not sorted by unit id");
      }
      length_from_postings[list[i].doc] += list[i].tf;
    }
    if (df(term) != list.size()) throw DataError("df mismatch for '" + term + "'");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (length_from_postings[i] != lengths_[i]) {
      throw DataError("length mismatch for unit '" + unit_ids_[i] + "'");
    }
  }
  const double total = std::accumulate(lengths_.begin(), lengths_.end(), 0.0);
  const double expected = n == 0 ? 0.0 : total / static_cast<double>(n);
  if (std::abs(expected - avg_dl_) > 1e-9) throw DataError("avg_dl mismatch");
}

void InvertedIndex::write(std::ostream& out) const {
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(granularity_));
  put_double(out, params_.k1);
  put_double(out, params_.b);
  put<std::uint64_t>(out, unit_ids_.size());
  for (std::size_t i = 0; i < unit_ids_.size(); ++i) {
    put_string(out, unit_ids_[i]);
    put_string(out, article_ids_[i]);
    put_string(out, texts_[i]);
    put<std::uint32_t>(out, lengths_[i]);
  }
  const auto terms = vocabulary();
  put<std::uint64_t>(out, terms.size());
  for (const std::string& term : terms) {
    const auto& list = postings_.at(term);
    put_string(out, term);
    put<std::uint64_t>(out, list.size());
    for (const Posting& p : list) {
      put<std::uint32_t>(out, p.doc);
      put<std::uint32_t>(out, p.tf);
    }
  }
  if (!out) throw DataError("failed writing index snapshot");
}

InvertedIndex InvertedIndex::read(std::istream& in) {
  char magic[sizeof(kMagic)] = {};
  in.read(magic, sizeof(magic));
  if (in.gcount() != sizeof(magic) || !std::equal(std::begin(magic), std::end(magic), kMagic)) {
    throw DataError("not an index snapshot (bad magic)");
  }
  if (const auto version = get<std::uint32_t>(in); version != kVersion) {
    throw DataError("unsupported index snapshot version " + std::to_string(version));
  }
  InvertedIndex idx;
  const auto g = get<std::uint8_t>(in);
  if (g > static_cast<std::uint8_t>(Granularity::kParagraph)) {
    throw DataError("corrupt index snapshot (granularity)");
  }
  idx.granularity_ = static_cast<Granularity>(g);
  idx.params_.k1 = get_double(in);
  idx.params_.b = get_double(in);
  const auto n = get<std::uint64_t>(in);
  if (n > std::numeric_limits<std::uint32_t>::max()) throw DataError("corrupt index snapshot (N)");
  for (std::uint64_t i = 0; i < n; ++i) {
    idx.unit_ids_.push_back(get_string(in));
    idx.article_ids_.push_back(get_string(in));
    idx.texts_.push_back(get_string(in));
    idx.lengths_.push_back(get<std::uint32_t>(in));
  }
  const auto term_count = get<std::uint64_t>(in);
  for (std::uint64_t t = 0; t < term_count; ++t) {
    std::string term = get_string(in);
    const auto count = get<std::uint64_t>(in);
    if (count > n) throw DataError("corrupt index snapshot (postings length)");
    std::vector<Posting> list;
    list.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
      const auto doc = get<std::uint32_t>(in);
      const auto tf = get<std::uint32_t>(in);
      list.push_back({doc, tf});
    }
    idx.postings_.emplace(std::move(term), std::move(list));
  }
  idx.finalize();
  idx.validate();
  return idx;
}

void InvertedIndex::save(const std::filesystem::path& path) const {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write index snapshot " + tmp);
    write(out);
  }
  std::filesystem::rename(tmp, path);
}

InvertedIndex InvertedIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open index snapshot " + path.string());
  return read(in);
}

}  // namespace strata
