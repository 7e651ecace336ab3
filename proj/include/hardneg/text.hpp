#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Byte-level text helpers shared by the pipeline stages. Case folding is
// ASCII-only; non-ASCII bytes pass through untouched.
namespace hardneg::text {

bool is_valid_utf8(std::string_view s);

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);

/// Trim, then collapse every internal whitespace run to one space.
std::string normalize_ws(std::string_view s);

std::vector<std::string_view> split_ws(std::string_view s);

/// Strips leading/trailing punctuation (ASCII plus common Unicode marks such
/// as curly quotes, dashes and ellipses).
std::string_view strip_punct(std::string_view token);

/// Lowercase alphanumeric word tokens; apostrophes inside a word are kept
/// ("what's"), everything else separates words.
std::vector<std::string> words(std::string_view s);

enum class Polarity { Yes, No };

/// Leading "yes"/"no" of a response, tolerant of case and punctuation.
std::optional<Polarity> leading_polarity(std::string_view s);

bool contains_word(std::string_view haystack_lower, std::string_view word_lower);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace hardneg::text
