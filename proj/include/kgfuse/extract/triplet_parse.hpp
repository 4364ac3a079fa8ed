#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgfuse/graph/graph.hpp"

namespace kgfuse {

struct SkippedFragment {
    std::string fragment;  // raw text, preserved verbatim
    std::string reason;
};

struct ParsedTriplets {
    std::vector<Triplet> triplets;
    std::vector<SkippedFragment> skipped;
};

// Strip leading enumeration tokens ("1.", "a)", "-", "*", bullets) and
// surrounding whitespace from a field.
std::string strip_enumeration(std::string_view field);

// True for "None" (any case, optional trailing punctuation), the marker the
// prompts use for an empty triplet list.
bool is_none_response(std::string_view text);

// Grammar for LLM responses: top-level parenthesized groups split on depth-1
// commas; inner parentheses stay literal. "None" parses to an empty result.
// Unknown relations, self-loops and empty fields land in `skipped` with a
// reason; the parse itself is total.
ParsedTriplets parse_triplets(std::string_view text);

// The "(entity, relation, entity)(entity, relation, entity)" concatenation
// used inside prompts. Empty input renders as "None".
std::string format_triplets_as_prompt(std::span<const Triplet> triplets);

}  // namespace kgfuse
