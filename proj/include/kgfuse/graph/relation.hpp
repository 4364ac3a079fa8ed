#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace kgfuse {

// The seven relation types. Compare and Conjunction are the only
// direction-insensitive ones.
enum class RelationType {
    PrerequisiteOf,
    UsedFor,
    Compare,
    Conjunction,
    HyponymOf,
    EvaluateFor,
    PartOf,
};

inline constexpr std::array<RelationType, 7> kAllRelations = {
    RelationType::PrerequisiteOf, RelationType::UsedFor,     RelationType::Compare,
    RelationType::Conjunction,    RelationType::HyponymOf,   RelationType::EvaluateFor,
    RelationType::PartOf,
};

constexpr bool is_symmetric(RelationType r) {
    return r == RelationType::Compare || r == RelationType::Conjunction;
}

// Snake-case storage spelling ("Prerequisite_of"). Used in graph files.
std::string_view storage_name(RelationType r);

// Spelling used inside prompts ("Is-a-Prerequisite-of").
std::string_view prompt_name(RelationType r);

// Accepts every surface spelling in circulation: storage names, prompt names,
// and case/hyphen/underscore variants thereof. Unknown strings -> nullopt.
std::optional<RelationType> parse_relation(std::string_view s);

}  // namespace kgfuse
