#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace kgfuse {

// Tokenization contract (shared by indexing, seed mining and embeddings):
//  - a word char is an ASCII alphanumeric, '-', or any byte >= 0x80;
//  - tokens are maximal runs of word chars, ASCII-lowercased, with leading
//    and trailing hyphens stripped;
//  - no stemming, so entity surfaces survive round-trips.
struct Token {
    std::string text;
    std::size_t begin = 0;  // byte offsets into the source, [begin, end)
    std::size_t end = 0;
};

bool is_word_char(unsigned char c);

std::vector<Token> tokenize(std::string_view text);

std::vector<std::string> token_texts(std::string_view text);

// Collapse whitespace runs to single spaces and trim; case is preserved.
std::string collapse_whitespace(std::string_view text);

std::string to_lower_ascii(std::string_view text);

// True when [begin, end) is not flanked by word chars.
bool is_word_bounded(std::string_view text, std::size_t begin, std::size_t end);

// Count of non-overlapping, word-bounded, case-insensitive occurrences of
// `phrase` in `text`. `phrase` must be lowercase already.
std::size_t count_phrase_occurrences(std::string_view text, std::string_view phrase);

}  // namespace kgfuse
