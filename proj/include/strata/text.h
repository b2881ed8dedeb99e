#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace strata {

/// Lowercases ASCII letters and splits on every byte that is not an ASCII
/// letter or digit. Bytes >= 0x80 are separators. No stemming, no stopwords.
std::vector<std::string> tokenize(std::string_view text);

/// Number of whitespace-delimited tokens.
std::size_t count_whitespace_tokens(std::string_view text);

/// Keeps at most `max_tokens` whitespace-delimited tokens, rejoined with
/// single spaces.
std::string truncate_tokens(std::string_view text, std::size_t max_tokens);

/// Byte range [begin, end) of one sentence inside the source text.
struct SentenceSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const SentenceSpan&, const SentenceSpan&) = default;
};

/// Rule-based sentence segmentation. A boundary follows '.', '!' or '?' when
/// the next characters are whitespace and then an uppercase letter or digit,
/// unless the text up to the punctuation ends with a guarded abbreviation.
/// Spans are trimmed of surrounding whitespace and never empty.
std::vector<SentenceSpan> split_sentence_spans(std::string_view text);

std::vector<std::string> split_sentences(std::string_view text);

/// Abbreviations that never end a sentence ("Fig.", "et al.", ...).
std::span<const std::string_view> sentence_abbreviations();

/// The fixed 40-word English stopword list.
std::span<const std::string_view> stopwords();

bool is_stopword(std::string_view term);

/// Order-preserving removal of stopwords.
std::vector<std::string> strip_stopwords(std::vector<std::string> terms);

/// Collapses runs of ASCII whitespace to one space and trims both ends.
std::string collapse_whitespace(std::string_view text);

}  // namespace strata
