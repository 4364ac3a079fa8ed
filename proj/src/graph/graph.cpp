#include "kgfuse/graph/graph.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "json.hpp"
#include "kgfuse/util/error.hpp"
#include "kgfuse/util/io.hpp"

namespace kgfuse {

namespace {

using nlohmann::json;

std::string escape_field(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '%': out += "%25"; break;
            case ',': out += "%2C"; break;
            case '\t': out += "%09"; break;
            case '\n': out += "%0A"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

std::string unescape_field(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '%' && i + 2 < s.size()) {
            std::string code = s.substr(i + 1, 2);
            if (code == "25") { out.push_back('%'); i += 2; continue; }
            if (code == "2C") { out.push_back(','); i += 2; continue; }
            if (code == "09") { out.push_back('\t'); i += 2; continue; }
            if (code == "0A") { out.push_back('\n'); i += 2; continue; }
        }
        out.push_back(s[i]);
    }
    return out;
}

std::vector<std::string> split(const std::string& s, char delim) {
    std::vector<std::string> parts;
    std::string part;
    std::istringstream ss(s);
    while (std::getline(ss, part, delim)) parts.push_back(part);
    if (!s.empty() && s.back() == delim) parts.emplace_back();
    return parts;
}

constexpr std::string_view kTsvHeaderPrefix = "# kgfuse graph v1 role=";

}  // namespace

std::string_view source_name(TripletSource s) {
    switch (s) {
        case TripletSource::extracted: return "extracted";
        case TripletSource::expert: return "expert";
        case TripletSource::fused: return "fused";
        case TripletSource::novel: return "novel";
    }
    return "unknown";
}

std::optional<TripletSource> parse_source(std::string_view s) {
    if (s == "extracted") return TripletSource::extracted;
    if (s == "expert") return TripletSource::expert;
    if (s == "fused") return TripletSource::fused;
    if (s == "novel") return TripletSource::novel;
    return std::nullopt;
}

std::string_view role_name(GraphRole r) {
    switch (r) {
        case GraphRole::candidate: return "candidate";
        case GraphRole::expert: return "expert";
        case GraphRole::fused: return "fused";
    }
    return "unknown";
}

std::optional<GraphRole> parse_role(std::string_view s) {
    if (s == "candidate") return GraphRole::candidate;
    if (s == "expert") return GraphRole::expert;
    if (s == "fused") return GraphRole::fused;
    return std::nullopt;
}

std::string normalize_surface(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char raw : s) {
        unsigned char c = static_cast<unsigned char>(raw);
        if (std::isspace(c)) {
            if (!out.empty()) pending_space = true;
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    if (out.empty()) throw GraphError("normalize_surface: empty entity surface");
    return out;
}

bool TripletKey::operator<(const TripletKey& o) const {
    if (a != o.a) return a < o.a;
    if (b != o.b) return b < o.b;
    return static_cast<int>(relation) < static_cast<int>(o.relation);
}

TripletKey canonical_pair(const Triplet& t) {
    if (is_symmetric(t.relation) && t.tail < t.head) return {t.tail, t.head, t.relation};
    return {t.head, t.tail, t.relation};
}

bool EntityPair::operator<(const EntityPair& o) const {
    if (a != o.a) return a < o.a;
    return b < o.b;
}

EntityPair unordered_pair(const Triplet& t) {
    if (t.tail < t.head) return {t.tail, t.head};
    return {t.head, t.tail};
}

// ---------------------------------------------------------------------------
// AliasMap

int AliasMap::intern(const std::string& s) {
    auto it = ids_.find(s);
    if (it != ids_.end()) return it->second;
    int id = static_cast<int>(surfaces_.size());
    ids_.emplace(s, id);
    surfaces_.push_back(s);
    parent_.push_back(id);
    canonical_of_root_.push_back(id);
    pinned_.push_back(false);
    return id;
}

int AliasMap::find_root(int id) const {
    while (parent_[static_cast<std::size_t>(id)] != id) {
        int grand = parent_[static_cast<std::size_t>(parent_[static_cast<std::size_t>(id)])];
        parent_[static_cast<std::size_t>(id)] = grand;
        id = grand;
    }
    return id;
}

void AliasMap::merge(const std::string& a, const std::string& b) {
    int ra = find_root(intern(a));
    int rb = find_root(intern(b));
    if (ra == rb) return;
    parent_[static_cast<std::size_t>(rb)] = ra;

    int ca = canonical_of_root_[static_cast<std::size_t>(ra)];
    int cb = canonical_of_root_[static_cast<std::size_t>(rb)];
    int keep;
    if (pinned_[static_cast<std::size_t>(ra)] && !pinned_[static_cast<std::size_t>(rb)]) {
        keep = ca;
    } else if (pinned_[static_cast<std::size_t>(rb)] && !pinned_[static_cast<std::size_t>(ra)]) {
        keep = cb;
    } else {
        const std::string& sa = surfaces_[static_cast<std::size_t>(ca)];
        const std::string& sb = surfaces_[static_cast<std::size_t>(cb)];
        if (sa.size() != sb.size()) {
            keep = sa.size() > sb.size() ? ca : cb;
        } else {
            keep = sa <= sb ? ca : cb;
        }
    }
    canonical_of_root_[static_cast<std::size_t>(ra)] = keep;
    pinned_[static_cast<std::size_t>(ra)] =
        pinned_[static_cast<std::size_t>(ra)] || pinned_[static_cast<std::size_t>(rb)];
}

void AliasMap::set_canonical(const std::string& member, const std::string& canonical) {
    merge(member, canonical);
    int root = find_root(intern(canonical));
    canonical_of_root_[static_cast<std::size_t>(root)] = intern(canonical);
    pinned_[static_cast<std::size_t>(root)] = true;
}

std::string AliasMap::canonical(const std::string& surface) const {
    auto it = ids_.find(surface);
    if (it == ids_.end()) return surface;
    int root = find_root(it->second);
    return surfaces_[static_cast<std::size_t>(canonical_of_root_[static_cast<std::size_t>(root)])];
}

bool AliasMap::contains(const std::string& surface) const { return ids_.count(surface) > 0; }

std::size_t AliasMap::class_count() const {
    std::set<int> roots;
    for (const auto& [surface, id] : ids_) roots.insert(find_root(id));
    return roots.size();
}

std::map<std::string, std::vector<std::string>> AliasMap::classes() const {
    std::map<int, std::vector<std::string>> by_root;
    for (const auto& [surface, id] : ids_) by_root[find_root(id)].push_back(surface);
    std::map<std::string, std::vector<std::string>> out;
    for (auto& [root, members] : by_root) {
        if (members.size() < 2) continue;
        std::sort(members.begin(), members.end());
        out[surfaces_[static_cast<std::size_t>(
            canonical_of_root_[static_cast<std::size_t>(root)])]] = members;
    }
    return out;
}

// ---------------------------------------------------------------------------
// KnowledgeGraph

InsertResult KnowledgeGraph::insert(Triplet t) {
    t.head = aliases_.canonical(normalize_surface(t.head));
    t.tail = aliases_.canonical(normalize_surface(t.tail));
    if (t.head == t.tail) return InsertResult::rejected_self_loop;
    if (is_symmetric(t.relation) && t.tail < t.head) std::swap(t.head, t.tail);

    TripletKey key{t.head, t.tail, t.relation};
    if (auto it = index_.find(key); it != index_.end()) {
        Triplet& existing = triplets_[it->second];
        for (const auto& doc : t.evidence) {
            if (std::find(existing.evidence.begin(), existing.evidence.end(), doc) ==
                existing.evidence.end()) {
                existing.evidence.push_back(doc);
            }
        }
        return InsertResult::merged_duplicate;
    }

    EntityPair pair = unordered_pair(t);
    if (role_ == GraphRole::fused) {
        if (auto it = pairs_.find(pair); it != pairs_.end() && !it->second.empty()) {
            return InsertResult::rejected_conflict;
        }
    }

    std::size_t pos = triplets_.size();
    triplets_.push_back(std::move(t));
    index_.emplace(std::move(key), pos);
    pairs_[pair].push_back(pos);
    incidence_[triplets_[pos].head].push_back(pos);
    incidence_[triplets_[pos].tail].push_back(pos);
    return InsertResult::added;
}

std::vector<std::string> KnowledgeGraph::entities() const {
    std::vector<std::string> out;
    out.reserve(incidence_.size());
    for (const auto& [entity, positions] : incidence_) out.push_back(entity);
    return out;
}

std::string KnowledgeGraph::resolve(const std::string& surface) const {
    if (surface.find_first_not_of(" \t\r\n\v\f") == std::string::npos)
        return aliases_.canonical(surface);
    return aliases_.canonical(normalize_surface(surface));
}

bool KnowledgeGraph::has_entity(const std::string& surface) const {
    return incidence_.count(resolve(surface)) > 0;
}

std::vector<Triplet> KnowledgeGraph::subgraph(const std::string& q) const {
    std::string c = aliases_.canonical(q);
    auto it = incidence_.find(c);
    if (it == incidence_.end()) return {};
    std::vector<std::size_t> positions = it->second;
    std::sort(positions.begin(), positions.end());
    positions.erase(std::unique(positions.begin(), positions.end()), positions.end());
    std::vector<Triplet> out;
    out.reserve(positions.size());
    for (std::size_t pos : positions) out.push_back(triplets_[pos]);
    return out;
}

std::vector<std::vector<Triplet>> detect_conflicts(const KnowledgeGraph& kg) {
    std::map<EntityPair, std::vector<const Triplet*>> by_pair;
    for (const Triplet& t : kg.triplets()) by_pair[unordered_pair(t)].push_back(&t);

    std::vector<std::vector<Triplet>> conflicts;
    for (const auto& [pair, members] : by_pair) {
        std::set<std::pair<int, std::string>> combos;
        for (const Triplet* t : members)
            combos.emplace(static_cast<int>(t->relation), t->head);
        if (combos.size() < 2) continue;
        std::vector<Triplet> conflict_set;
        conflict_set.reserve(members.size());
        for (const Triplet* t : members) conflict_set.push_back(*t);
        conflicts.push_back(std::move(conflict_set));
    }
    return conflicts;
}

// ---------------------------------------------------------------------------
// Serialization

std::string to_tsv(const KnowledgeGraph& kg) {
    std::vector<const Triplet*> sorted;
    sorted.reserve(kg.size());
    for (const Triplet& t : kg.triplets()) sorted.push_back(&t);
    std::sort(sorted.begin(), sorted.end(), [](const Triplet* x, const Triplet* y) {
        if (x->head != y->head) return x->head < y->head;
        auto rx = storage_name(x->relation), ry = storage_name(y->relation);
        if (rx != ry) return rx < ry;
        if (x->tail != y->tail) return x->tail < y->tail;
        return source_name(x->source) < source_name(y->source);
    });

    std::string out(kTsvHeaderPrefix);
    out += role_name(kg.role());
    out.push_back('\n');
    for (const Triplet* t : sorted) {
        out += t->head;
        out.push_back('\t');
        out += storage_name(t->relation);
        out.push_back('\t');
        out += t->tail;
        out.push_back('\t');
        out += source_name(t->source);
        out.push_back('\t');
        for (std::size_t i = 0; i < t->evidence.size(); ++i) {
            if (i) out.push_back(',');
            out += escape_field(t->evidence[i]);
        }
        out.push_back('\n');
    }
    return out;
}

KnowledgeGraph from_tsv(const std::string& content, const AliasMap* aliases) {
    std::istringstream in(content);
    std::string line;
    if (!std::getline(in, line)) throw GraphError("graph file is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind(kTsvHeaderPrefix, 0) != 0)
        throw GraphError("graph file header missing or version mismatch: '" + line + "'");
    auto role = parse_role(line.substr(kTsvHeaderPrefix.size()));
    if (!role) throw GraphError("graph file header has unknown role: '" + line + "'");

    KnowledgeGraph kg(*role);
    if (aliases) kg.aliases() = *aliases;

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split(line, '\t');
        if (fields.size() < 3 || fields.size() > 5)
            throw GraphError("line " + std::to_string(line_no) + ": expected 3-5 fields, got " +
                             std::to_string(fields.size()));
        auto relation = parse_relation(fields[1]);
        if (!relation)
            throw GraphError("line " + std::to_string(line_no) + ": unknown relation '" +
                             fields[1] + "'");
        Triplet t;
        t.head = fields[0];
        t.relation = *relation;
        t.tail = fields[2];
        if (fields.size() >= 4 && !fields[3].empty()) {
            auto source = parse_source(fields[3]);
            if (!source)
                throw GraphError("line " + std::to_string(line_no) + ": unknown source '" +
                                 fields[3] + "'");
            t.source = *source;
        }
        if (fields.size() == 5 && !fields[4].empty()) {
            for (const auto& doc : split(fields[4], ',')) t.evidence.push_back(unescape_field(doc));
        }
        InsertResult result = kg.insert(std::move(t));
        if (result == InsertResult::rejected_self_loop)
            throw GraphError("line " + std::to_string(line_no) + ": self-loop triplet");
        if (result == InsertResult::rejected_conflict)
            throw GraphError("line " + std::to_string(line_no) +
                             ": conflicting relation for entity pair in fused graph");
    }
    return kg;
}

std::string aliases_to_json(const AliasMap& aliases) {
    json doc;
    doc["version"] = 1;
    doc["classes"] = json::object();
    for (const auto& [canonical, members] : aliases.classes()) doc["classes"][canonical] = members;
    return doc.dump(2) + "\n";
}

AliasMap aliases_from_json(const std::string& content) {
    json doc = json::parse(content);
    if (!doc.contains("version") || doc["version"].get<int>() != 1)
        throw GraphError("alias sidecar version mismatch");
    AliasMap out;
    for (const auto& [canonical, members] : doc.at("classes").items()) {
        for (const auto& member : members) out.merge(member.get<std::string>(), canonical);
        out.set_canonical(canonical, canonical);
    }
    return out;
}

std::filesystem::path alias_sidecar_path(const std::filesystem::path& tsv_path) {
    std::filesystem::path out = tsv_path;
    out.replace_extension();
    out += ".aliases.json";
    return out;
}

void save_graph(const KnowledgeGraph& kg, const std::filesystem::path& tsv_path) {
    write_file(tsv_path, to_tsv(kg));
    write_file(alias_sidecar_path(tsv_path), aliases_to_json(kg.aliases()));
}

KnowledgeGraph load_graph(const std::filesystem::path& tsv_path) {
    AliasMap aliases;
    auto sidecar = alias_sidecar_path(tsv_path);
    if (std::filesystem::exists(sidecar)) aliases = aliases_from_json(read_file(sidecar));
    return from_tsv(read_file(tsv_path), &aliases);
}

}  // namespace kgfuse
