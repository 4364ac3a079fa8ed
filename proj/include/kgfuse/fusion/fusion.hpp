#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "kgfuse/corpus/corpus.hpp"
#include "kgfuse/extract/triplet_parse.hpp"
#include "kgfuse/graph/graph.hpp"
#include "kgfuse/llm/gateway.hpp"

namespace kgfuse {

enum class ConflictFallback { relation_priority, drop, keep_first };

std::string_view conflict_fallback_name(ConflictFallback f);
std::optional<ConflictFallback> parse_conflict_fallback(std::string_view name);

enum class AliasCanonicalRule { longer_surface, expert_preferred };

std::string_view alias_rule_name(AliasCanonicalRule r);
std::optional<AliasCanonicalRule> parse_alias_rule(std::string_view name);

struct FusionPolicy {
    ConflictFallback conflict_fallback = ConflictFallback::relation_priority;
    // Default mirrors the relation-type prevalence order.
    std::array<RelationType, 7> relation_priority = {
        RelationType::PrerequisiteOf, RelationType::UsedFor,
        RelationType::HyponymOf,      RelationType::PartOf,
        RelationType::EvaluateFor,    RelationType::Compare,
        RelationType::Conjunction};
    AliasCanonicalRule alias_canonical_rule = AliasCanonicalRule::longer_surface;
    bool expert_wins_conflicts = true;

    void validate() const;  // relation_priority must be a permutation of all 7
};

struct AliasMergeRecord {
    std::string a;
    std::string b;
    std::string kept;  // one of a, b
};

struct FusionResult {
    std::string query;
    std::vector<Triplet> fused_triplets;
    std::vector<AliasMergeRecord> alias_merges;
    std::vector<SkippedFragment> skipped;
    std::string exchange_ref;
    bool degraded = false;
};

struct FusionConfig {
    std::size_t max_docs = 3;
    std::size_t max_chars = 2000;
    ChatParams params;
    int parallelism = 1;
};

std::map<std::string, std::string> make_fusion_bindings(
    const std::string& query, std::span<const Triplet> llm_kg,
    std::span<const Triplet> expert_kg, const std::string& background);

// Renders the Fusion Prompt with Graph 1 = subgraph(candidate, q) and
// Graph 2 = subgraph(expert, q) (or the empty marker), parses the response,
// and infers alias merges by diffing input entities against output entities.
FusionResult fuse_entity(const std::string& q, const KnowledgeGraph& candidate,
                         const KnowledgeGraph* expert, const Corpus& corpus,
                         LlmClient& llm, const FusionConfig& config);

// Deterministic net for conflicts the LLM output leaves unresolved. Returns
// nullopt in drop mode. Requires |conflict_set| >= 2.
std::optional<Triplet> resolve_conflict_fallback(const std::vector<Triplet>& conflict_set,
                                                 const FusionPolicy& policy);

// Union-find closure over merge records. Canonical per class: most kept
// votes, ties to the longer surface, then lexicographic. The policy overload
// can prefer expert-graph surfaces over the vote count.
AliasMap merge_aliases(const std::vector<AliasMergeRecord>& merges);
AliasMap merge_aliases(const std::vector<AliasMergeRecord>& merges,
                       const FusionPolicy& policy,
                       const std::set<std::string>& expert_entities);

struct FuseAllResult {
    KnowledgeGraph graph{GraphRole::fused};
    std::vector<FusionResult> results;
    std::vector<std::pair<std::string, std::string>> failures;  // (entity, reason)
};

// Per-entity fusion over all candidate entities (plus extra_entities) in
// sorted order, then a single deterministic consolidation: global alias
// closure, triplet rewrite, conflict sweep. Post: detect_conflicts(graph)
// empty.
FuseAllResult fuse_all(const KnowledgeGraph& candidate, const KnowledgeGraph* expert,
                       const Corpus& corpus, LlmClient& llm, const FusionPolicy& policy,
                       const FusionConfig& config,
                       const std::vector<std::string>& extra_entities = {});

std::string fusion_result_to_json(const FusionResult& result);

}  // namespace kgfuse
