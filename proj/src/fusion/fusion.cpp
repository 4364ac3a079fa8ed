#include "kgfuse/fusion/fusion.hpp"

#include <algorithm>

#include <json.hpp>

#include "kgfuse/util/error.hpp"
#include "kgfuse/util/parallel.hpp"

namespace kgfuse {

std::string_view conflict_fallback_name(ConflictFallback f) {
    switch (f) {
        case ConflictFallback::relation_priority: return "relation_priority";
        case ConflictFallback::drop: return "drop";
        case ConflictFallback::keep_first: return "keep_first";
    }
    return "unknown";
}

std::optional<ConflictFallback> parse_conflict_fallback(std::string_view name) {
    if (name == "relation_priority") return ConflictFallback::relation_priority;
    if (name == "drop") return ConflictFallback::drop;
    if (name == "keep_first") return ConflictFallback::keep_first;
    return std::nullopt;
}

std::string_view alias_rule_name(AliasCanonicalRule r) {
    return r == AliasCanonicalRule::longer_surface ? "longer_surface"
                                                   : "expert_preferred";
}

std::optional<AliasCanonicalRule> parse_alias_rule(std::string_view name) {
    if (name == "longer_surface") return AliasCanonicalRule::longer_surface;
    if (name == "expert_preferred") return AliasCanonicalRule::expert_preferred;
    return std::nullopt;
}

void FusionPolicy::validate() const {
    std::set<RelationType> seen(relation_priority.begin(), relation_priority.end());
    if (seen.size() != kAllRelations.size())
        throw ConfigError("relation_priority must be a permutation of all 7 relation types");
}

std::map<std::string, std::string> make_fusion_bindings(
    const std::string& query, std::span<const Triplet> llm_kg,
    std::span<const Triplet> expert_kg, const std::string& background) {
    return {{"entity", query},
            {"LLM-KG", format_triplets_as_prompt(llm_kg)},
            {"E-G", format_triplets_as_prompt(expert_kg)},
            {"background", background}};
}

namespace {

std::set<std::string> endpoint_set(std::span<const Triplet> triplets) {
    std::set<std::string> out;
    for (const Triplet& t : triplets) {
        out.insert(t.head);
        out.insert(t.tail);
    }
    return out;
}

std::vector<AliasMergeRecord> infer_alias_merges(const std::vector<Triplet>& inputs,
                                                 const std::vector<Triplet>& outputs) {
    if (inputs.empty() || outputs.empty()) return {};
    std::set<std::string> in_entities = endpoint_set(inputs);
    std::set<std::string> out_entities = endpoint_set(outputs);
    std::set<TripletKey> out_keys;
    for (const Triplet& t : outputs) out_keys.insert(canonical_pair(t));

    std::vector<AliasMergeRecord> merges;
    for (const std::string& a : in_entities) {
        if (out_entities.count(a)) continue;
        // A vanished input entity merged into b iff substituting b for a in
        // one of a's input triplets yields an output triplet, and b is the
        // only such survivor.
        std::set<std::string> survivors;
        for (const Triplet& t : inputs) {
            if (t.head != a && t.tail != a) continue;
            const std::string& other = t.head == a ? t.tail : t.head;
            for (const std::string& b : out_entities) {
                if (b == a || b == other) continue;
                Triplet sub = t;
                (sub.head == a ? sub.head : sub.tail) = b;
                if (out_keys.count(canonical_pair(sub))) survivors.insert(b);
            }
        }
        if (survivors.size() == 1)
            merges.push_back(AliasMergeRecord{a, *survivors.begin(), *survivors.begin()});
    }
    return merges;
}

}  // namespace

FusionResult fuse_entity(const std::string& q, const KnowledgeGraph& candidate,
                         const KnowledgeGraph* expert, const Corpus& corpus,
                         LlmClient& llm, const FusionConfig& config) {
    FusionResult result;
    result.query = normalize_surface(q);

    std::vector<Triplet> g1 = candidate.subgraph(result.query);
    std::vector<Triplet> g2 =
        expert ? expert->subgraph(result.query) : std::vector<Triplet>{};
    ContextBundle bundle =
        retrieve_by_entity(corpus, result.query, config.max_docs, config.max_chars);

    ChatRequest request =
        make_request(TemplateId::fusion,
                     make_fusion_bindings(result.query, g1, g2, bundle.joined()),
                     config.params);
    ChatExchange exchange;
    try {
        exchange = llm.complete(request);
    } catch (const TransportError& e) {
        throw TransportError("entity '" + result.query + "': " + e.what(),
                             e.last_status);
    }
    result.exchange_ref = exchange.ref();

    ParsedTriplets parsed = parse_triplets(exchange.raw_response);
    result.skipped = std::move(parsed.skipped);
    if (parsed.triplets.empty() && !is_none_response(exchange.raw_response)) {
        result.degraded = true;
        return result;
    }

    std::vector<std::string> evidence;
    for (const auto& [doc_id, text] : bundle.snippets) evidence.push_back(doc_id);
    for (Triplet& t : parsed.triplets) {
        t.source = TripletSource::fused;
        t.evidence = evidence;
        result.fused_triplets.push_back(std::move(t));
    }

    std::vector<Triplet> inputs = g1;
    inputs.insert(inputs.end(), g2.begin(), g2.end());
    result.alias_merges = infer_alias_merges(inputs, result.fused_triplets);
    return result;
}

std::optional<Triplet> resolve_conflict_fallback(const std::vector<Triplet>& conflict_set,
                                                 const FusionPolicy& policy) {
    if (conflict_set.size() < 2)
        throw GraphError("resolve_conflict_fallback requires a conflict set of size >= 2");
    policy.validate();
    switch (policy.conflict_fallback) {
        case ConflictFallback::drop:
            return std::nullopt;
        case ConflictFallback::keep_first:
            return conflict_set.front();
        case ConflictFallback::relation_priority: {
            std::map<RelationType, std::size_t> prio;
            for (std::size_t i = 0; i < policy.relation_priority.size(); ++i)
                prio[policy.relation_priority[i]] = i;
            const Triplet* best = &conflict_set.front();
            for (const Triplet& t : conflict_set) {
                std::size_t tp = prio.at(t.relation);
                std::size_t bp = prio.at(best->relation);
                if (tp < bp ||
                    (tp == bp && canonical_pair(t) < canonical_pair(*best)))
                    best = &t;
            }
            return *best;
        }
    }
    return std::nullopt;
}

namespace {

AliasMap build_alias_map(const std::vector<AliasMergeRecord>& merges,
                         AliasCanonicalRule rule,
                         const std::set<std::string>& expert_entities) {
    AliasMap am;
    std::map<std::string, int> votes;
    for (const AliasMergeRecord& m : merges) {
        am.merge(m.a, m.b);
        ++votes[m.kept];
    }
    // Elect one canonical per class. expert_preferred puts expert-graph
    // surfaces ahead of the vote count.
    for (const auto& [root, members] : am.classes()) {
        const std::string* winner = nullptr;
        auto better = [&](const std::string& s, const std::string& w) {
            if (rule == AliasCanonicalRule::expert_preferred) {
                bool se = expert_entities.count(s) > 0;
                bool we = expert_entities.count(w) > 0;
                if (se != we) return se;
            }
            int sv = votes.count(s) ? votes.at(s) : 0;
            int wv = votes.count(w) ? votes.at(w) : 0;
            if (sv != wv) return sv > wv;
            if (s.size() != w.size()) return s.size() > w.size();
            return s < w;
        };
        for (const std::string& member : members)
            if (!winner || better(member, *winner)) winner = &member;
        if (winner) am.set_canonical(*winner, *winner);
    }
    return am;
}

}  // namespace

AliasMap merge_aliases(const std::vector<AliasMergeRecord>& merges) {
    return build_alias_map(merges, AliasCanonicalRule::longer_surface, {});
}

AliasMap merge_aliases(const std::vector<AliasMergeRecord>& merges,
                       const FusionPolicy& policy,
                       const std::set<std::string>& expert_entities) {
    return build_alias_map(merges, policy.alias_canonical_rule, expert_entities);
}

FuseAllResult fuse_all(const KnowledgeGraph& candidate, const KnowledgeGraph* expert,
                       const Corpus& corpus, LlmClient& llm, const FusionPolicy& policy,
                       const FusionConfig& config,
                       const std::vector<std::string>& extra_entities) {
    policy.validate();
    if (candidate.empty()) throw ConfigError("candidate graph is empty; nothing to fuse");

    std::set<std::string> query_set;
    for (const std::string& e : candidate.entities()) query_set.insert(e);
    for (const std::string& e : extra_entities)
        query_set.insert(normalize_surface(e));
    std::vector<std::string> queries(query_set.begin(), query_set.end());

    struct Slot {
        bool ok = false;
        FusionResult result;
        std::string error;
    };
    std::vector<Slot> slots(queries.size());
    int workers = llm.deterministic() ? 1 : config.parallelism;
    parallel_for(queries.size(), workers, [&](std::size_t i) {
        try {
            slots[i].result = fuse_entity(queries[i], candidate, expert, corpus, llm, config);
            slots[i].ok = true;
        } catch (const std::exception& e) {
            slots[i].error = e.what();
        }
    });

    FuseAllResult out;
    std::vector<AliasMergeRecord> merges;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        if (!slots[i].ok) {
            out.failures.emplace_back(queries[i], slots[i].error);
            continue;
        }
        for (const AliasMergeRecord& m : slots[i].result.alias_merges)
            merges.push_back(m);
        out.results.push_back(std::move(slots[i].result));
    }

    std::set<std::string> expert_entities;
    if (expert)
        for (const std::string& e : expert->entities()) expert_entities.insert(e);
    AliasMap aliases = merge_aliases(merges, policy, expert_entities);

    // Stage everything rewritten to canonical surfaces. Expert triplets enter
    // as a baseline (round -1) so union semantics hold even when a fusion
    // response drops them.
    struct Staged {
        Triplet t;
        int round;
    };
    std::vector<Staged> staged;
    auto rewrite = [&](Triplet t) -> std::optional<Triplet> {
        t.head = aliases.canonical(t.head);
        t.tail = aliases.canonical(t.tail);
        if (t.head == t.tail) return std::nullopt;  // merged into a self-loop
        return t;
    };
    if (expert) {
        for (const Triplet& t : expert->triplets()) {
            if (auto r = rewrite(t)) {
                r->source = TripletSource::expert;
                staged.push_back(Staged{std::move(*r), -1});
            }
        }
    }
    for (std::size_t i = 0; i < out.results.size(); ++i) {
        for (const Triplet& t : out.results[i].fused_triplets) {
            if (auto r = rewrite(t))
                staged.push_back(Staged{std::move(*r), static_cast<int>(i)});
        }
    }

    std::set<TripletKey> candidate_keys;
    for (const Triplet& t : candidate.triplets())
        if (auto r = rewrite(t)) candidate_keys.insert(canonical_pair(*r));
    std::set<TripletKey> expert_keys;
    if (expert)
        for (const Triplet& t : expert->triplets())
            if (auto r = rewrite(t)) expert_keys.insert(canonical_pair(*r));

    std::map<EntityPair, std::vector<std::size_t>> by_pair;
    for (std::size_t i = 0; i < staged.size(); ++i)
        by_pair[unordered_pair(staged[i].t)].push_back(i);

    out.graph.aliases() = aliases;
    for (const auto& [pair, positions] : by_pair) {
        std::vector<TripletKey> all_keys;
        int last_round = -1;
        bool has_expert = false;
        for (std::size_t i : positions) {
            TripletKey key = canonical_pair(staged[i].t);
            if (std::find(all_keys.begin(), all_keys.end(), key) == all_keys.end())
                all_keys.push_back(key);
            last_round = std::max(last_round, staged[i].round);
            if (staged[i].round < 0) has_expert = true;
        }

        std::optional<TripletKey> winner;
        if (all_keys.size() == 1) {
            winner = all_keys.front();
        } else {
            // Residual conflict: expert wins when configured, else the last
            // fusion round that touched the pair; the fallback settles ties.
            std::vector<std::size_t> pool;
            if (policy.expert_wins_conflicts && has_expert) {
                for (std::size_t i : positions)
                    if (staged[i].round < 0) pool.push_back(i);
            } else {
                for (std::size_t i : positions)
                    if (staged[i].round == last_round) pool.push_back(i);
            }
            std::vector<TripletKey> pool_keys;
            std::vector<Triplet> pool_reps;
            for (std::size_t i : pool) {
                TripletKey key = canonical_pair(staged[i].t);
                if (std::find(pool_keys.begin(), pool_keys.end(), key) ==
                    pool_keys.end()) {
                    pool_keys.push_back(key);
                    pool_reps.push_back(staged[i].t);
                }
            }
            if (pool_keys.size() == 1) {
                winner = pool_keys.front();
            } else {
                auto resolved = resolve_conflict_fallback(pool_reps, policy);
                if (!resolved) continue;  // drop mode removes the pair
                winner = canonical_pair(*resolved);
            }
        }

        Triplet final_t;
        bool found = false;
        std::set<std::string> evidence;
        for (std::size_t i : positions) {
            if (canonical_pair(staged[i].t) != *winner) continue;
            if (!found) {
                final_t = staged[i].t;
                found = true;
            }
            for (const std::string& doc : staged[i].t.evidence) evidence.insert(doc);
        }
        final_t.evidence.assign(evidence.begin(), evidence.end());
        if (expert_keys.count(*winner)) {
            final_t.source = TripletSource::expert;
        } else if (candidate_keys.count(*winner)) {
            final_t.source = TripletSource::fused;
        } else {
            final_t.source = TripletSource::novel;
        }
        out.graph.insert(std::move(final_t));
    }
    return out;
}

std::string fusion_result_to_json(const FusionResult& result) {
    nlohmann::json rec;
    rec["query"] = result.query;
    nlohmann::json triplets = nlohmann::json::array();
    for (const Triplet& t : result.fused_triplets) {
        triplets.push_back({{"head", t.head},
                            {"relation", std::string(storage_name(t.relation))},
                            {"tail", t.tail}});
    }
    rec["fused_triplets"] = std::move(triplets);
    nlohmann::json merges = nlohmann::json::array();
    for (const AliasMergeRecord& m : result.alias_merges)
        merges.push_back({{"a", m.a}, {"b", m.b}, {"kept", m.kept}});
    rec["alias_merges"] = std::move(merges);
    nlohmann::json skipped = nlohmann::json::array();
    for (const SkippedFragment& s : result.skipped)
        skipped.push_back({{"fragment", s.fragment}, {"reason", s.reason}});
    rec["skipped"] = std::move(skipped);
    rec["exchange_ref"] = result.exchange_ref;
    rec["degraded"] = result.degraded;
    return rec.dump();
}

}  // namespace kgfuse
