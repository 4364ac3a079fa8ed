#include "kgfuse/qa/qa.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "kgfuse/corpus/tokenizer.hpp"
#include "kgfuse/extract/triplet_parse.hpp"
#include "kgfuse/llm/templates.hpp"
#include "kgfuse/util/error.hpp"
#include "kgfuse/util/parallel.hpp"
#include "vendor/json.hpp"

namespace kgfuse {

namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string{s.substr(b, e - b)};
}

std::string format_triplet_line(const Triplet& t) {
    std::string out = "(";
    out += t.head;
    out += ", ";
    out += prompt_name(t.relation);
    out += ", ";
    out += t.tail;
    out += ")";
    return out;
}

void append_sorted_triplets(CommandOutput& out, std::vector<Triplet> triplets) {
    std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
        return std::make_tuple(a.head, storage_name(a.relation), a.tail) <
               std::make_tuple(b.head, storage_name(b.relation), b.tail);
    });
    for (const auto& t : triplets) {
        if (!out.text.empty()) out.text += "\n";
        out.text += format_triplet_line(t);
        out.triplets.push_back(t);
    }
}

void append_note(CommandOutput& out, const std::string& note) {
    if (!out.text.empty()) out.text += "\n";
    out.text += note;
}

// Distances from start over the stored graph, capped at max_depth hops.
std::map<std::string, int> bfs_distances(const KnowledgeGraph& kg, const std::string& start,
                                         int max_depth) {
    std::map<std::string, std::set<std::string>> adj;
    for (const auto& t : kg.triplets()) {
        adj[t.head].insert(t.tail);
        adj[t.tail].insert(t.head);
    }
    std::map<std::string, int> dist;
    dist[start] = 0;
    std::deque<std::string> queue{start};
    while (!queue.empty()) {
        std::string cur = queue.front();
        queue.pop_front();
        int d = dist[cur];
        if (d >= max_depth) continue;
        for (const auto& next : adj[cur]) {
            if (dist.count(next)) continue;
            dist[next] = d + 1;
            queue.push_back(next);
        }
    }
    return dist;
}

int min_endpoint_dist(const std::map<std::string, int>& dist, const Triplet& t) {
    int best = std::numeric_limits<int>::max();
    auto h = dist.find(t.head);
    if (h != dist.end()) best = std::min(best, h->second);
    auto ta = dist.find(t.tail);
    if (ta != dist.end()) best = std::min(best, ta->second);
    return best;
}

struct QaSlot {
    bool ok = false;
    QaPrediction prediction;
};

}  // namespace

std::string_view qa_task_name(QaTask t) {
    switch (t) {
        case QaTask::T1: return "T1";
        case QaTask::T2: return "T2";
        case QaTask::T3: return "T3";
        case QaTask::T4: return "T4";
        case QaTask::T5: return "T5";
        case QaTask::T6: return "T6";
    }
    return "unknown";
}

std::optional<QaTask> parse_qa_task(std::string_view name) {
    if (name == "T1") return QaTask::T1;
    if (name == "T2") return QaTask::T2;
    if (name == "T3") return QaTask::T3;
    if (name == "T4") return QaTask::T4;
    if (name == "T5") return QaTask::T5;
    if (name == "T6") return QaTask::T6;
    return std::nullopt;
}

std::vector<QaItem> load_qa_items(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open QA file: " + path.string());
    std::vector<QaItem> items;
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& why) {
        throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": " + why);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) fail("not a JSON object");
        if (!j.contains("task") || !j["task"].is_string()) fail("missing string field 'task'");
        if (!j.contains("question") || !j["question"].is_string())
            fail("missing string field 'question'");
        QaItem item;
        auto task = parse_qa_task(j["task"].get<std::string>());
        if (!task) fail("unknown task '" + j["task"].get<std::string>() + "'");
        item.task = *task;
        item.question = j["question"].get<std::string>();
        if (trim(item.question).empty()) fail("empty question");
        const bool has_gold = j.contains("gold") && !j["gold"].is_null();
        switch (item.task) {
            case QaTask::T1: {
                if (!has_gold || !j["gold"].is_boolean()) fail("T1 gold must be a boolean");
                item.gold.kind = QaGold::Kind::boolean;
                item.gold.boolean_value = j["gold"].get<bool>();
                break;
            }
            case QaTask::T2:
            case QaTask::T3:
            case QaTask::T5: {
                if (!has_gold || !j["gold"].is_array())
                    fail("gold must be an array of entity strings");
                item.gold.kind = QaGold::Kind::entity_list;
                for (const auto& g : j["gold"]) {
                    if (!g.is_string()) fail("gold entries must be strings");
                    try {
                        item.gold.entities.push_back(normalize_surface(g.get<std::string>()));
                    } catch (const GraphError&) {
                        fail("empty gold entity");
                    }
                }
                break;
            }
            case QaTask::T4: {
                if (!has_gold || !j["gold"].is_string()) fail("T4 gold must be a relation string");
                auto rel = parse_relation(j["gold"].get<std::string>());
                if (!rel) fail("unknown relation '" + j["gold"].get<std::string>() + "'");
                item.gold.kind = QaGold::Kind::relation;
                item.gold.relation = *rel;
                break;
            }
            case QaTask::T6: {
                if (has_gold) {
                    if (!j["gold"].is_string()) fail("T6 gold must be a string when present");
                    item.gold.kind = QaGold::Kind::free_text;
                    item.gold.text = j["gold"].get<std::string>();
                } else {
                    item.gold.kind = QaGold::Kind::none;
                }
                break;
            }
        }
        items.push_back(std::move(item));
    }
    return items;
}

std::optional<GraphCommand> parse_command(std::string_view line) {
    std::string body = strip_enumeration(trim(line));
    GraphCommand cmd;
    std::string_view rest;
    if (body.rfind("NEIGHBORS", 0) == 0) {
        cmd.kind = GraphCommand::Kind::neighbors;
        rest = std::string_view{body}.substr(9);
    } else if (body.rfind("PATH", 0) == 0) {
        cmd.kind = GraphCommand::Kind::path;
        rest = std::string_view{body}.substr(4);
    } else if (body.rfind("SUBGRAPH", 0) == 0) {
        cmd.kind = GraphCommand::Kind::subgraph;
        rest = std::string_view{body}.substr(8);
    } else if (body.rfind("RELATION", 0) == 0) {
        cmd.kind = GraphCommand::Kind::relation;
        rest = std::string_view{body}.substr(8);
    } else {
        return std::nullopt;
    }
    std::string tail = trim(rest);
    if (tail.size() < 2 || tail.front() != '(' || tail.back() != ')') return std::nullopt;
    std::string inner = tail.substr(1, tail.size() - 2);
    std::vector<std::string> args;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = inner.find(',', start);
        args.push_back(trim(std::string_view{inner}.substr(
            start, comma == std::string::npos ? std::string::npos : comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (args.size() != 2) return std::nullopt;
    const bool counted =
        cmd.kind == GraphCommand::Kind::neighbors || cmd.kind == GraphCommand::Kind::subgraph;
    try {
        cmd.arg_a = normalize_surface(args[0]);
        if (counted) {
            const std::string& d = args[1];
            if (d.empty() || d.size() > 4 ||
                !std::all_of(d.begin(), d.end(),
                             [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
                return std::nullopt;
            cmd.depth = std::stoi(d);
            if (cmd.depth < 1) return std::nullopt;
        } else {
            cmd.arg_b = normalize_surface(args[1]);
        }
    } catch (const GraphError&) {
        return std::nullopt;
    }
    return cmd;
}

std::string print_command(const GraphCommand& cmd) {
    switch (cmd.kind) {
        case GraphCommand::Kind::neighbors:
            return "NEIGHBORS(" + cmd.arg_a + ", " + std::to_string(cmd.depth) + ")";
        case GraphCommand::Kind::path:
            return "PATH(" + cmd.arg_a + ", " + cmd.arg_b + ")";
        case GraphCommand::Kind::subgraph:
            return "SUBGRAPH(" + cmd.arg_a + ", " + std::to_string(cmd.depth) + ")";
        case GraphCommand::Kind::relation:
            return "RELATION(" + cmd.arg_a + ", " + cmd.arg_b + ")";
    }
    return "";
}

CommandParse parse_commands(std::string_view text) {
    CommandParse out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        std::string stripped = trim(line);
        if (!stripped.empty()) {
            if (auto cmd = parse_command(stripped))
                out.commands.push_back(std::move(*cmd));
            else
                out.skipped.push_back(stripped);
        }
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    return out;
}

std::vector<GraphCommand> generate_commands(LlmClient& llm, const std::string& domain,
                                            const std::string& question,
                                            CommandParse* diagnostics, const ChatParams& params) {
    ChatRequest req = make_request(TemplateId::qa_command,
                                   {{"domain", domain}, {"question", question}}, params);
    ChatExchange exchange = llm.complete(req);
    CommandParse parsed = parse_commands(exchange.raw_response);
    if (diagnostics) *diagnostics = parsed;
    return parsed.commands;
}

CommandOutput execute_command(const KnowledgeGraph& kg, const GraphCommand& cmd, bool directed) {
    CommandOutput out;
    const std::string a = kg.resolve(cmd.arg_a);
    if (!kg.has_entity(a)) {
        out.unknown_entity = true;
        append_note(out, "no entity '" + a + "' in the graph");
    }
    const bool two_entities =
        cmd.kind == GraphCommand::Kind::path || cmd.kind == GraphCommand::Kind::relation;
    std::string b;
    if (two_entities) {
        b = kg.resolve(cmd.arg_b);
        if (!kg.has_entity(b)) {
            out.unknown_entity = true;
            append_note(out, "no entity '" + b + "' in the graph");
        }
    }
    if (out.unknown_entity) return out;

    switch (cmd.kind) {
        case GraphCommand::Kind::neighbors: {
            auto dist = bfs_distances(kg, a, cmd.depth);
            std::vector<Triplet> hits;
            for (const auto& t : kg.triplets())
                if (min_endpoint_dist(dist, t) <= cmd.depth - 1) hits.push_back(t);
            append_sorted_triplets(out, std::move(hits));
            break;
        }
        case GraphCommand::Kind::subgraph: {
            auto dist = bfs_distances(kg, a, cmd.depth);
            std::vector<Triplet> hits;
            for (const auto& t : kg.triplets())
                if (dist.count(t.head) && dist.count(t.tail)) hits.push_back(t);
            append_sorted_triplets(out, std::move(hits));
            break;
        }
        case GraphCommand::Kind::relation: {
            std::vector<Triplet> hits;
            for (const auto& t : kg.subgraph(a))
                if ((t.head == a && t.tail == b) || (t.head == b && t.tail == a))
                    hits.push_back(t);
            if (hits.empty())
                append_note(out, "no stored relation between '" + a + "' and '" + b + "'");
            else
                append_sorted_triplets(out, std::move(hits));
            break;
        }
        case GraphCommand::Kind::path: {
            if (a == b) {
                out.path = {a};
                append_note(out, "the two entities resolve to the same node");
                break;
            }
            // Adjacency sorted by neighbor so BFS tie-breaks are stable.
            std::map<std::string, std::vector<std::pair<std::string, std::size_t>>> adj;
            const auto& all = kg.triplets();
            for (std::size_t i = 0; i < all.size(); ++i) {
                const Triplet& t = all[i];
                if (directed) {
                    if (t.relation == RelationType::PrerequisiteOf)
                        adj[t.head].push_back({t.tail, i});
                } else {
                    adj[t.head].push_back({t.tail, i});
                    adj[t.tail].push_back({t.head, i});
                }
            }
            for (auto& [entity, edges] : adj) std::sort(edges.begin(), edges.end());
            std::map<std::string, std::pair<std::string, std::size_t>> parent;
            std::deque<std::string> queue{a};
            std::set<std::string> seen{a};
            bool found = false;
            while (!queue.empty() && !found) {
                std::string cur = queue.front();
                queue.pop_front();
                for (const auto& [next, edge] : adj[cur]) {
                    if (seen.count(next)) continue;
                    seen.insert(next);
                    parent[next] = {cur, edge};
                    if (next == b) {
                        found = true;
                        break;
                    }
                    queue.push_back(next);
                }
            }
            if (!found) {
                append_note(out, "no path found between '" + a + "' and '" + b + "'");
                break;
            }
            std::vector<std::string> chain;
            std::vector<std::size_t> edges;
            for (std::string cur = b; cur != a;) {
                chain.push_back(cur);
                auto& [prev, edge] = parent[cur];
                edges.push_back(edge);
                cur = prev;
            }
            chain.push_back(a);
            std::reverse(chain.begin(), chain.end());
            std::reverse(edges.begin(), edges.end());
            out.path = chain;
            for (std::size_t edge : edges) {
                if (!out.text.empty()) out.text += "\n";
                out.text += format_triplet_line(all[edge]);
                out.triplets.push_back(all[edge]);
            }
            break;
        }
    }
    return out;
}

namespace {

std::string format_instruction_for(QaTask task) {
    switch (task) {
        case QaTask::T1:
            return "Answer with a single word: True or False.";
        case QaTask::T2:
            return "Answer with a comma-separated list of concepts. No explanations.";
        case QaTask::T3:
            return "Answer with a comma-separated list of concepts ordered from basic to "
                   "advanced. No explanations.";
        case QaTask::T4:
            return "Answer with exactly one relation name from: Is-a-Prerequisite-of, Used-for, "
                   "Compare, Conjunction, Hyponym-Of, Evaluate-for, Part-of.";
        case QaTask::T5:
            return "Answer with a comma-separated list of concepts. No explanations.";
        case QaTask::T6:
            return "Answer in free text.";
    }
    return "";
}

void coerce_boolean(QaAnswer& ans, const std::string& response) {
    std::string lowered = to_lower_ascii(response);
    std::size_t i = 0;
    while (i < lowered.size()) {
        while (i < lowered.size() && !std::isalpha(static_cast<unsigned char>(lowered[i]))) ++i;
        std::size_t start = i;
        while (i < lowered.size() && std::isalpha(static_cast<unsigned char>(lowered[i]))) ++i;
        std::string_view word{lowered.data() + start, i - start};
        if (word == "true" || word == "yes") {
            ans.boolean_value = true;
            return;
        }
        if (word == "false" || word == "no") {
            ans.boolean_value = false;
            return;
        }
    }
    ans.degraded = true;
}

void coerce_entity_list(QaAnswer& ans, const std::string& response) {
    std::istringstream stream(response);
    std::string line;
    while (std::getline(stream, line)) {
        std::string body = strip_enumeration(trim(line));
        std::size_t start = 0;
        while (start <= body.size()) {
            std::size_t comma = body.find(',', start);
            std::string piece = trim(std::string_view{body}.substr(
                start, comma == std::string::npos ? std::string::npos : comma - start));
            if (!piece.empty() && !is_none_response(piece)) {
                try {
                    std::string norm = normalize_surface(piece);
                    if (std::find(ans.entities.begin(), ans.entities.end(), norm) ==
                        ans.entities.end())
                        ans.entities.push_back(std::move(norm));
                } catch (const GraphError&) {
                }
            }
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
    }
    if (ans.entities.empty() && !is_none_response(trim(response))) ans.degraded = true;
}

void coerce_relation(QaAnswer& ans, const std::string& response) {
    std::string lowered = to_lower_ascii(response);
    std::size_t best_pos = std::string::npos;
    std::size_t best_len = 0;
    std::optional<RelationType> best;
    for (RelationType r : kAllRelations) {
        std::vector<std::string> spellings{to_lower_ascii(storage_name(r)),
                                           to_lower_ascii(prompt_name(r))};
        std::string spaced = spellings[0];
        std::replace(spaced.begin(), spaced.end(), '_', ' ');
        spellings.push_back(spaced);
        for (const auto& s : spellings) {
            std::size_t pos = 0;
            while ((pos = lowered.find(s, pos)) != std::string::npos) {
                if (is_word_bounded(lowered, pos, pos + s.size())) {
                    if (pos < best_pos || (pos == best_pos && s.size() > best_len)) {
                        best_pos = pos;
                        best_len = s.size();
                        best = r;
                    }
                    break;
                }
                ++pos;
            }
        }
    }
    if (best)
        ans.relation = best;
    else
        ans.degraded = true;
}

}  // namespace

QaAnswer answer(LlmClient& llm, const QaItem& item, const std::string& context_block,
                const ChatParams& params) {
    QaAnswer ans;
    ans.task = item.task;
    std::string context = context_block.empty() ? "None" : context_block;
    ChatRequest req = make_request(TemplateId::qa_answer,
                                   {{"context", context},
                                    {"question", item.question},
                                    {"format_instruction", format_instruction_for(item.task)}},
                                   params);
    ChatExchange exchange = llm.complete(req);
    const std::string& response = exchange.raw_response;
    switch (item.task) {
        case QaTask::T1:
            coerce_boolean(ans, response);
            break;
        case QaTask::T2:
        case QaTask::T3:
        case QaTask::T5:
            coerce_entity_list(ans, response);
            break;
        case QaTask::T4:
            coerce_relation(ans, response);
            break;
        case QaTask::T6:
            ans.text = trim(response);
            if (ans.text.empty()) ans.degraded = true;
            break;
    }
    return ans;
}

std::vector<QaPrediction> run_benchmark(const std::vector<QaItem>& items,
                                        const KnowledgeGraph& kg, LlmClient& llm,
                                        const std::string& domain, bool directed, int parallelism,
                                        const ChatParams& params) {
    std::vector<QaSlot> slots(items.size());
    int workers = llm.deterministic() ? 1 : parallelism;
    parallel_for(items.size(), workers, [&](std::size_t i) {
        QaPrediction pred;
        pred.index = i;
        pred.item = items[i];
        try {
            CommandParse diagnostics;
            auto commands = generate_commands(llm, domain, items[i].question, &diagnostics, params);
            pred.command_skipped = diagnostics.skipped;
            std::string context;
            for (const auto& cmd : commands) {
                pred.commands.push_back(print_command(cmd));
                CommandOutput result = execute_command(kg, cmd, directed);
                if (!result.path.empty()) pred.paths.push_back(result.path);
                if (result.text.empty()) continue;
                if (!context.empty()) context += "\n";
                context += result.text;
            }
            pred.context = context;
            pred.answer = answer(llm, items[i], context, params);
        } catch (const std::exception& e) {
            pred.error = e.what();
            pred.answer.task = items[i].task;
            pred.answer.degraded = true;
        }
        slots[i].prediction = std::move(pred);
        slots[i].ok = true;
    });
    std::vector<QaPrediction> out;
    out.reserve(items.size());
    for (auto& slot : slots) out.push_back(std::move(slot.prediction));
    return out;
}

std::string qa_prediction_to_json(const QaPrediction& prediction) {
    json j;
    j["index"] = prediction.index;
    j["task"] = std::string{qa_task_name(prediction.item.task)};
    j["question"] = prediction.item.question;
    switch (prediction.item.gold.kind) {
        case QaGold::Kind::boolean: j["gold"] = prediction.item.gold.boolean_value; break;
        case QaGold::Kind::entity_list: j["gold"] = prediction.item.gold.entities; break;
        case QaGold::Kind::relation:
            j["gold"] = std::string{storage_name(prediction.item.gold.relation)};
            break;
        case QaGold::Kind::free_text: j["gold"] = prediction.item.gold.text; break;
        case QaGold::Kind::none: j["gold"] = nullptr; break;
    }
    j["commands"] = prediction.commands;
    j["command_skipped"] = prediction.command_skipped;
    j["context"] = prediction.context;
    if (!prediction.paths.empty()) j["paths"] = prediction.paths;
    json ans;
    ans["degraded"] = prediction.answer.degraded;
    switch (prediction.item.task) {
        case QaTask::T1: ans["value"] = prediction.answer.boolean_value; break;
        case QaTask::T2:
        case QaTask::T3:
        case QaTask::T5: ans["value"] = prediction.answer.entities; break;
        case QaTask::T4:
            if (prediction.answer.relation)
                ans["value"] = std::string{storage_name(*prediction.answer.relation)};
            else
                ans["value"] = nullptr;
            break;
        case QaTask::T6: ans["value"] = prediction.answer.text; break;
    }
    j["answer"] = ans;
    if (!prediction.error.empty()) j["error"] = prediction.error;
    return j.dump();
}

}  // namespace kgfuse
