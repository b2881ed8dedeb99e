#include "strata/text.h"

#include <algorithm>
#include <array>

namespace strata {

namespace {

constexpr std::array<std::string_view, 7> kAbbreviations = {
    "Fig.", "et al.", "e.g.", "i.e.", "Dr.", "vs.", "No.",
};

// Sorted so membership is a binary search.
constexpr std::array<std::string_view, 40> kStopwords = {
    "a",     "an",    "and",   "are",   "as",    "at",   "be",    "by",
    "can",   "do",    "does",  "for",   "from",  "has",  "have",  "how",
    "in",    "is",    "it",    "its",   "of",    "on",   "or",    "that",
    "the",   "their", "there", "these", "this",  "to",   "was",   "were",
    "what",  "when",  "where", "which", "who",   "why",  "will",  "with",
};

static_assert(std::is_sorted(kStopwords.begin(), kStopwords.end()));

bool is_ascii_alnum(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z');
}

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool is_upper_or_digit(unsigned char c) {
  return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

// True when text[0, end) finishes with a guarded abbreviation that starts at
// a word boundary.
bool ends_with_abbreviation(std::string_view text, std::size_t end) {
  const std::string_view head = text.substr(0, end);
  for (std::string_view abbr : kAbbreviations) {
    if (!head.ends_with(abbr)) continue;
    const std::size_t start = head.size() - abbr.size();
    if (start == 0 || !is_ascii_alnum(static_cast<unsigned char>(head[start - 1]))) {
      return true;
    }
  }
  return false;
}

void push_trimmed(std::string_view text, std::size_t begin, std::size_t end,
                  std::vector<SentenceSpan>& out) {
  while (begin < end && is_space(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && is_space(static_cast<unsigned char>(text[end - 1]))) --end;
  if (begin < end) out.push_back({begin, end});
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_ascii_alnum(c)) {
      current.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::size_t count_whitespace_tokens(std::string_view text) {
  std::size_t count = 0;
  bool in_token = false;
  for (char ch : text) {
    const bool space = is_space(static_cast<unsigned char>(ch));
    if (!space && !in_token) ++count;
    in_token = !space;
  }
  return count;
}

std::string truncate_tokens(std::string_view text, std::size_t max_tokens) {
  std::string out;
  std::size_t taken = 0;
  std::size_t i = 0;
  while (i < text.size() && taken < max_tokens) {
    while (i < text.size() && is_space(static_cast<unsigned char>(text[i]))) ++i;
    if (i == text.size()) break;
    const std::size_t start = i;
    while (i < text.size() && !is_space(static_cast<unsigned char>(text[i]))) ++i;
    if (!out.empty()) out.push_back(' ');
    out.append(text.substr(start, i - start));
    ++taken;
  }
  return out;
}

std::vector<SentenceSpan> split_sentence_spans(std::string_view text) {
  std::vector<SentenceSpan> spans;
  std::size_t sentence_start = 0;
  const std::size_t n = text.size();
  for (std::size_t i = 0; i < n; ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    std::size_t next = i + 1;
    if (next >= n || !is_space(static_cast<unsigned char>(text[next]))) continue;
    while (next < n && is_space(static_cast<unsigned char>(text[next]))) ++next;
    if (next >= n || !is_upper_or_digit(static_cast<unsigned char>(text[next]))) continue;
    if (c == '.' && ends_with_abbreviation(text, i + 1)) continue;
    push_trimmed(text, sentence_start, i + 1, spans);
    sentence_start = next;
    i = next - 1;
  }
  push_trimmed(text, sentence_start, n, spans);
  return spans;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> sentences;
  for (const SentenceSpan& span : split_sentence_spans(text)) {
    sentences.emplace_back(text.substr(span.begin, span.end - span.begin));
  }
  return sentences;
}

std::span<const std::string_view> sentence_abbreviations() { return kAbbreviations; }

std::span<const std::string_view> stopwords() { return kStopwords; }

bool is_stopword(std::string_view term) {
  return std::binary_search(kStopwords.begin(), kStopwords.end(), term);
}

std::vector<std::string> strip_stopwords(std::vector<std::string> terms) {
  std::erase_if(terms, [](const std::string& t) { return is_stopword(t); });
  return terms;
}

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char ch : text) {
    if (is_space(static_cast<unsigned char>(ch))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(ch);
  }
  return out;
}

}  // namespace strata
