#include "kgfuse/graph/relation.hpp"

#include <cctype>
#include <unordered_map>

namespace kgfuse {

std::string_view storage_name(RelationType r) {
    switch (r) {
        case RelationType::PrerequisiteOf: return "Prerequisite_of";
        case RelationType::UsedFor: return "Used_for";
        case RelationType::Compare: return "Compare";
        case RelationType::Conjunction: return "Conjunction";
        case RelationType::HyponymOf: return "Hyponym_of";
        case RelationType::EvaluateFor: return "Evaluate_for";
        case RelationType::PartOf: return "Part_of";
    }
    return "Unknown";
}

std::string_view prompt_name(RelationType r) {
    switch (r) {
        case RelationType::PrerequisiteOf: return "Is-a-Prerequisite-of";
        case RelationType::UsedFor: return "Used-for";
        case RelationType::Compare: return "Compare";
        case RelationType::Conjunction: return "Conjunction";
        case RelationType::HyponymOf: return "Hyponym-Of";
        case RelationType::EvaluateFor: return "Evaluate-for";
        case RelationType::PartOf: return "Part-of";
    }
    return "Unknown";
}

std::optional<RelationType> parse_relation(std::string_view s) {
    // Collapse case and separator style: "Is-a-Prerequisite-of", "
    // Prerequisite_of" and "prerequisite of" all map to one key.
    std::string key;
    key.reserve(s.size());
    bool pending_sep = false;
    for (char raw : s) {
        unsigned char c = static_cast<unsigned char>(raw);
        if (c == '-' || c == '_' || std::isspace(c)) {
            if (!key.empty()) pending_sep = true;
            continue;
        }
        if (pending_sep) {
            key.push_back('_');
            pending_sep = false;
        }
        key.push_back(static_cast<char>(std::tolower(c)));
    }

    static const std::unordered_map<std::string, RelationType> kTable = {
        {"prerequisite_of", RelationType::PrerequisiteOf},
        {"is_a_prerequisite_of", RelationType::PrerequisiteOf},
        {"used_for", RelationType::UsedFor},
        {"compare", RelationType::Compare},
        {"conjunction", RelationType::Conjunction},
        {"hyponym_of", RelationType::HyponymOf},
        {"evaluate_for", RelationType::EvaluateFor},
        {"part_of", RelationType::PartOf},
    };
    auto it = kTable.find(key);
    if (it == kTable.end()) return std::nullopt;
    return it->second;
}

}  // namespace kgfuse
