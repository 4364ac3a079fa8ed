#include "kgfuse/extract/triplet_parse.hpp"

#include <cctype>

#include "kgfuse/corpus/tokenizer.hpp"
#include "kgfuse/graph/relation.hpp"

namespace kgfuse {

namespace {

std::string_view trim_view(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

}  // namespace

bool is_none_response(std::string_view text) {
    std::string lowered = to_lower_ascii(trim_view(text));
    while (!lowered.empty() && (lowered.back() == '.' || lowered.back() == '!'))
        lowered.pop_back();
    return lowered == "none";
}

std::string strip_enumeration(std::string_view field) {
    std::string_view s = trim_view(field);
    bool changed = true;
    while (changed && !s.empty()) {
        changed = false;
        // bullets: -, *, and the UTF-8 bullet
        if (s[0] == '-' || s[0] == '*') {
            std::size_t j = 1;
            while (j < s.size() && (s[j] == '-' || s[j] == '*')) ++j;
            if (j < s.size() && s[j] == ' ') {
                s = trim_view(s.substr(j));
                changed = true;
                continue;
            }
        }
        if (s.size() >= 3 && static_cast<unsigned char>(s[0]) == 0xE2 &&
            static_cast<unsigned char>(s[1]) == 0x80 &&
            static_cast<unsigned char>(s[2]) == 0xA2) {
            s = trim_view(s.substr(3));
            changed = true;
            continue;
        }
        // "12." / "12)" / "(12)" with following space
        std::size_t i = 0;
        bool open_paren = i < s.size() && s[i] == '(';
        std::size_t j = i + (open_paren ? 1 : 0);
        std::size_t digits = 0;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) {
            ++j;
            ++digits;
        }
        if (digits >= 1 && digits <= 3 && j < s.size() && (s[j] == '.' || s[j] == ')')) {
            bool closes = s[j] == ')';
            if ((!open_paren || closes) &&
                (j + 1 == s.size() || s[j + 1] == ' ')) {
                s = trim_view(s.substr(j + 1));
                changed = true;
                continue;
            }
        }
        // "a." / "a)" single-letter enumerators with following space
        if (s.size() >= 2 && std::isalpha(static_cast<unsigned char>(s[0])) &&
            (s[1] == '.' || s[1] == ')') &&
            (s.size() == 2 || s[2] == ' ')) {
            s = trim_view(s.substr(2));
            changed = true;
            continue;
        }
    }
    return std::string(s);
}

ParsedTriplets parse_triplets(std::string_view text) {
    ParsedTriplets out;
    if (is_none_response(text)) return out;

    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        if (text[i] != '(') {
            ++i;
            continue;
        }
        std::size_t start = i;
        int depth = 1;
        std::vector<std::string> fields;
        std::string cur;
        ++i;
        bool closed = false;
        for (; i < n; ++i) {
            char c = text[i];
            if (c == '(') {
                ++depth;
                cur.push_back(c);
            } else if (c == ')') {
                --depth;
                if (depth == 0) {
                    fields.push_back(cur);
                    closed = true;
                    ++i;
                    break;
                }
                cur.push_back(c);
            } else if (c == ',' && depth == 1) {
                fields.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        std::string fragment{text.substr(start, (closed ? i : n) - start)};
        if (!closed) {
            out.skipped.push_back({fragment, "unterminated triplet"});
            break;
        }
        if (fields.size() != 3) {
            out.skipped.push_back(
                {fragment, "expected 3 comma-separated fields, got " +
                               std::to_string(fields.size())});
            continue;
        }
        std::string head_raw = strip_enumeration(fields[0]);
        std::string rel_raw = strip_enumeration(fields[1]);
        std::string tail_raw = strip_enumeration(fields[2]);
        if (head_raw.empty()) {
            out.skipped.push_back({fragment, "empty head entity"});
            continue;
        }
        if (tail_raw.empty()) {
            out.skipped.push_back({fragment, "empty tail entity"});
            continue;
        }
        auto relation = parse_relation(rel_raw);
        if (!relation) {
            out.skipped.push_back(
                {fragment, "unknown relation '" + std::string(trim_view(fields[1])) + "'"});
            continue;
        }
        std::string head = normalize_surface(head_raw);
        std::string tail = normalize_surface(tail_raw);
        if (head == tail) {
            out.skipped.push_back({fragment, "self-loop"});
            continue;
        }
        Triplet t;
        t.head = std::move(head);
        t.relation = *relation;
        t.tail = std::move(tail);
        t.source = TripletSource::extracted;
        out.triplets.push_back(std::move(t));
    }
    return out;
}

std::string format_triplets_as_prompt(std::span<const Triplet> triplets) {
    if (triplets.empty()) return "None";
    std::string out;
    for (const Triplet& t : triplets) {
        out += '(';
        out += t.head;
        out += ", ";
        out += prompt_name(t.relation);
        out += ", ";
        out += t.tail;
        out += ')';
    }
    return out;
}

}  // namespace kgfuse
