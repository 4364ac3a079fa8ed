#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kgfuse/graph/relation.hpp"

namespace kgfuse {

enum class TripletSource { extracted, expert, fused, novel };

std::string_view source_name(TripletSource s);
std::optional<TripletSource> parse_source(std::string_view s);

// Trim, collapse internal whitespace to single spaces, ASCII-lowercase.
// Throws GraphError if the result is empty.
std::string normalize_surface(std::string_view s);

struct Triplet {
    std::string head;
    RelationType relation = RelationType::UsedFor;
    std::string tail;
    TripletSource source = TripletSource::extracted;
    std::vector<std::string> evidence;  // doc ids supporting the triplet

    bool operator==(const Triplet& other) const {
        return head == other.head && relation == other.relation && tail == other.tail;
    }
};

// Key identifying a triplet up to direction rules: directional relations keep
// (head, tail) order, symmetric ones use lexicographic endpoint order.
struct TripletKey {
    std::string a;
    std::string b;
    RelationType relation;

    bool operator==(const TripletKey&) const = default;
    bool operator<(const TripletKey& o) const;
};

TripletKey canonical_pair(const Triplet& t);

// Unordered entity pair, the unit of conflict detection.
struct EntityPair {
    std::string a;  // a <= b
    std::string b;

    bool operator==(const EntityPair&) const = default;
    bool operator<(const EntityPair& o) const;
};

EntityPair unordered_pair(const Triplet& t);

// Union-find over entity surfaces with a designated canonical representative
// per class. Surfaces never seen are their own canonical.
class AliasMap {
public:
    // Puts a and b in one class. Unless a canonical was pinned via
    // set_canonical, the class representative is the longer surface, ties
    // broken lexicographically.
    void merge(const std::string& a, const std::string& b);

    // Pins the class representative. `canonical` joins the class if new.
    void set_canonical(const std::string& member, const std::string& canonical);

    std::string canonical(const std::string& surface) const;
    bool contains(const std::string& surface) const;
    std::size_t class_count() const;
    bool empty() const { return ids_.empty(); }

    // canonical -> sorted members (including the canonical itself).
    std::map<std::string, std::vector<std::string>> classes() const;

private:
    int find_root(int id) const;
    int intern(const std::string& s);

    std::unordered_map<std::string, int> ids_;
    std::vector<std::string> surfaces_;
    mutable std::vector<int> parent_;
    std::vector<int> canonical_of_root_;
    std::vector<bool> pinned_;
};

enum class GraphRole { candidate, expert, fused };

std::string_view role_name(GraphRole r);
std::optional<GraphRole> parse_role(std::string_view s);

enum class InsertResult { added, merged_duplicate, rejected_self_loop, rejected_conflict };

// Triplet store. Entities are normalized and alias-canonicalized on insert;
// symmetric relations are stored with lexicographically ordered endpoints.
class KnowledgeGraph {
public:
    explicit KnowledgeGraph(GraphRole role = GraphRole::candidate) : role_(role) {}

    GraphRole role() const { return role_; }
    AliasMap& aliases() { return aliases_; }
    const AliasMap& aliases() const { return aliases_; }

    // Duplicates (same canonical key) merge evidence into the first
    // occurrence. For fused graphs an insert that would put a second distinct
    // (relation, direction) on an unordered pair is rejected.
    InsertResult insert(Triplet t);

    const std::vector<Triplet>& triplets() const { return triplets_; }
    std::size_t size() const { return triplets_.size(); }
    bool empty() const { return triplets_.empty(); }

    std::vector<std::string> entities() const;  // sorted, unique

    // Normalizes a raw surface and resolves it through the alias map.
    // Whitespace-only input comes back unchanged.
    std::string resolve(const std::string& surface) const;
    bool has_entity(const std::string& surface) const;

    // Exactly the triplets incident to q's canonical class. q must be
    // normalized already.
    std::vector<Triplet> subgraph(const std::string& q) const;

private:
    GraphRole role_;
    AliasMap aliases_;
    std::vector<Triplet> triplets_;
    std::map<TripletKey, std::size_t> index_;               // key -> triplets_ position
    std::map<EntityPair, std::vector<std::size_t>> pairs_;  // unordered pair -> positions
    std::map<std::string, std::vector<std::size_t>> incidence_;
};

struct Subgraph {
    std::string center;
    std::vector<Triplet> triplets;
};

// One conflict set per unordered canonical pair carrying >= 2 distinct
// (relation, direction) combinations. Sets are ordered by pair; members keep
// graph insertion order.
std::vector<std::vector<Triplet>> detect_conflicts(const KnowledgeGraph& kg);

// TSV with a "# kgfuse graph v1 role=<role>" header line; triplets in
// canonical sort order so equal graphs serialize to equal bytes.
std::string to_tsv(const KnowledgeGraph& kg);
KnowledgeGraph from_tsv(const std::string& content, const AliasMap* aliases = nullptr);

std::string aliases_to_json(const AliasMap& aliases);
AliasMap aliases_from_json(const std::string& content);

// fused.tsv gets a fused.aliases.json sidecar next to it.
std::filesystem::path alias_sidecar_path(const std::filesystem::path& tsv_path);
void save_graph(const KnowledgeGraph& kg, const std::filesystem::path& tsv_path);
KnowledgeGraph load_graph(const std::filesystem::path& tsv_path);

}  // namespace kgfuse
