#include "advforge/text.hpp"

#include <cctype>

namespace advforge {

namespace {

bool alnum(unsigned char c) { return std::isalnum(c) != 0; }

bool joiner(unsigned char c) { return c == '.' || c == '\'' || c == '-'; }

} // namespace

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> out;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        if (std::isspace(c)) {
            ++i;
            continue;
        }
        if (alnum(c)) {
            std::size_t start = i;
            ++i;
            while (i < n) {
                unsigned char d = static_cast<unsigned char>(text[i]);
                if (alnum(d)) {
                    ++i;
                } else if (joiner(d) && i + 1 < n &&
                           alnum(static_cast<unsigned char>(text[i + 1]))) {
                    i += 2;
                } else {
                    break;
                }
            }
            out.push_back({std::string(text.substr(start, i - start)), start});
        } else {
            out.push_back({std::string(1, text[i]), i});
            ++i;
        }
    }
    return out;
}

std::vector<std::string> token_texts(std::string_view text) {
    std::vector<std::string> out;
    for (auto& t : tokenize(text)) out.push_back(std::move(t.text));
    return out;
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool is_word(std::string_view token) {
    return !token.empty() && alnum(static_cast<unsigned char>(token.front()));
}

bool is_capitalized(std::string_view token) {
    return !token.empty() && token.front() >= 'A' && token.front() <= 'Z';
}

bool is_number(std::string_view token) {
    if (token.empty()) return false;
    bool digit_seen = false;
    for (char c : token) {
        if (std::isdigit(static_cast<unsigned char>(c)))
            digit_seen = true;
        else if (c != '.' && c != ',')
            return false;
    }
    return digit_seen;
}

} // namespace advforge
