#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace advforge {

/// A token plus its byte offset in the string it was cut from.
struct Token {
    std::string text;
    std::size_t char_start = 0;

    std::size_t char_end() const { return char_start + text.size(); }
};

/// Splits text into word and punctuation tokens with byte offsets.
///
/// A word token is a maximal run of alphanumeric characters where '.', '\''
/// and '-' are kept inside the run only when flanked by alphanumerics on both
/// sides ("don't", "well-known", "3.5", "U.S"). Any other non-space character
/// becomes a single-character token. Whitespace separates tokens and is never
/// part of one.
std::vector<Token> tokenize(std::string_view text);

/// Token texts only, in order.
std::vector<std::string> token_texts(std::string_view text);

/// ASCII lowercase copy.
std::string lower(std::string_view s);

bool is_word(std::string_view token);

/// First character is an ASCII uppercase letter.
bool is_capitalized(std::string_view token);

/// Digits possibly mixed with '.' or ',' separators ("1917", "3.5", "10,000").
bool is_number(std::string_view token);

} // namespace advforge
