#include "kgfuse/corpus/tokenizer.hpp"

#include <cctype>

namespace kgfuse {

bool is_word_char(unsigned char c) {
    if (c >= 0x80) return true;
    if (std::isalnum(c)) return true;
    return c == '-';
}

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> out;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        if (!is_word_char(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        std::size_t begin = i;
        while (i < n && is_word_char(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t end = i;
        while (begin < end && text[begin] == '-') ++begin;
        while (end > begin && text[end - 1] == '-') --end;
        if (begin == end) continue;
        Token tok;
        tok.begin = begin;
        tok.end = end;
        tok.text.reserve(end - begin);
        for (std::size_t j = begin; j < end; ++j) {
            tok.text.push_back(static_cast<char>(
                std::tolower(static_cast<unsigned char>(text[j]))));
        }
        out.push_back(std::move(tok));
    }
    return out;
}

std::vector<std::string> token_texts(std::string_view text) {
    std::vector<std::string> out;
    for (auto& tok : tokenize(text)) out.push_back(std::move(tok.text));
    return out;
}

std::string collapse_whitespace(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(c));
    }
    return out;
}

std::string to_lower_ascii(std::string_view text) {
    std::string out(text);
    for (char& c : out)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool is_word_bounded(std::string_view text, std::size_t begin, std::size_t end) {
    if (begin > 0 && is_word_char(static_cast<unsigned char>(text[begin - 1])))
        return false;
    if (end < text.size() && is_word_char(static_cast<unsigned char>(text[end])))
        return false;
    return true;
}

std::size_t count_phrase_occurrences(std::string_view text, std::string_view phrase) {
    if (phrase.empty()) return 0;
    std::string lowered = to_lower_ascii(text);
    std::size_t count = 0;
    std::size_t pos = 0;
    while ((pos = lowered.find(phrase, pos)) != std::string::npos) {
        if (is_word_bounded(lowered, pos, pos + phrase.size())) {
            ++count;
            pos += phrase.size();
        } else {
            ++pos;
        }
    }
    return count;
}

}  // namespace kgfuse
