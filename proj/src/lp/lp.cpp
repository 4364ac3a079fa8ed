#include "kgfuse/lp/lp.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include <json.hpp>

#include "kgfuse/corpus/tokenizer.hpp"
#include "kgfuse/graph/graph.hpp"
#include "kgfuse/util/error.hpp"
#include "kgfuse/util/io.hpp"

namespace kgfuse {

LpDataset load_lp_dataset(const std::filesystem::path& path, const std::string& domain,
                          const std::string& split) {
    LpDataset ds;
    ds.domain = domain;
    ds.split = split;
    std::size_t line_no = 0;
    for (const std::string& line : read_lines(path)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::string cur;
        for (char c : line) {
            if (c == '\t') {
                fields.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        fields.push_back(cur);
        if (fields.size() != 3)
            throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                              ": expected entity_a<TAB>entity_b<TAB>label");
        if (fields[2] != "0" && fields[2] != "1")
            throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                              ": label must be 0 or 1, got '" + fields[2] + "'");
        LpPair pair;
        pair.a = normalize_surface(fields[0]);
        pair.b = normalize_surface(fields[1]);
        pair.label = fields[2] == "1" ? 1 : 0;
        ds.pairs.push_back(std::move(pair));
    }
    return ds;
}

std::string_view lp_variant_name(LpVariant v) {
    switch (v) {
        case LpVariant::plain: return "plain";
        case LpVariant::cot: return "cot";
        case LpVariant::doc: return "doc";
        case LpVariant::con: return "con";
        case LpVariant::wiki: return "wiki";
    }
    return "unknown";
}

std::optional<LpVariant> parse_lp_variant(std::string_view name) {
    if (name == "plain") return LpVariant::plain;
    if (name == "cot") return LpVariant::cot;
    if (name == "doc") return LpVariant::doc;
    if (name == "con") return LpVariant::con;
    if (name == "wiki") return LpVariant::wiki;
    return std::nullopt;
}

std::map<std::string, std::string> load_wiki_store(const std::filesystem::path& path) {
    nlohmann::json root = nlohmann::json::parse(read_file(path), nullptr, false);
    if (root.is_discarded() || !root.is_object())
        throw ConfigError("wiki store is not a JSON object: " + path.string());
    std::map<std::string, std::string> store;
    for (const auto& [key, value] : root.items()) {
        if (!value.is_string())
            throw ConfigError("wiki store value for '" + key + "' is not a string");
        store[normalize_surface(key)] = value.get<std::string>();
    }
    return store;
}

bool parse_yes_no(std::string_view text, bool cot) {
    if (cot) {
        std::string lowered = to_lower_ascii(text);
        std::size_t open = lowered.find("<result>");
        if (open == std::string::npos)
            throw LpParseError("no <result> tag in CoT response");
        std::size_t close = lowered.find("</result>", open + 8);
        if (close == std::string::npos)
            throw LpParseError("unterminated <result> tag in CoT response");
        std::string content{text.substr(open + 8, close - open - 8)};
        std::string trimmed = to_lower_ascii(content);
        trimmed.erase(0, trimmed.find_first_not_of(" \t\r\n"));
        std::size_t last = trimmed.find_last_not_of(" \t\r\n.!");
        trimmed.erase(last == std::string::npos ? 0 : last + 1);
        if (trimmed == "yes") return true;
        if (trimmed == "no") return false;
        throw LpParseError("<result> content is neither YES nor NO: '" + content + "'");
    }
    // first standalone YES/NO token decides
    std::string lowered = to_lower_ascii(text);
    std::size_t i = 0;
    while (i < lowered.size()) {
        if (!std::isalpha(static_cast<unsigned char>(lowered[i]))) {
            ++i;
            continue;
        }
        std::size_t begin = i;
        while (i < lowered.size() && std::isalpha(static_cast<unsigned char>(lowered[i])))
            ++i;
        std::string_view word{lowered.data() + begin, i - begin};
        if (word == "yes") return true;
        if (word == "no") return false;
    }
    throw LpParseError("no standalone YES/NO token in response");
}

namespace {

std::string join_sorted(const std::set<std::string>& values) {
    if (values.empty()) return "None";
    std::string out;
    for (const std::string& v : values) {
        if (!out.empty()) out += ", ";
        out += v;
    }
    return out;
}

std::string doc_context(const Corpus& corpus, const std::string& entity,
                        const LpAttachments& att) {
    ContextBundle bundle =
        retrieve_by_entity(corpus, entity, att.max_docs, att.max_chars / 2);
    return bundle.joined("\n");
}

}  // namespace

ChatRequest make_lp_request(LpVariant variant, const std::string& domain,
                            const std::string& a, const std::string& b,
                            const LpAttachments& attachments,
                            const ChatParams& params) {
    std::string na = normalize_surface(a);
    std::string nb = normalize_surface(b);
    std::map<std::string, std::string> bindings{
        {"domain", domain}, {"entity_1", na}, {"entity_2", nb}};

    TemplateId id = TemplateId::lp_plain;
    switch (variant) {
        case LpVariant::plain:
            id = TemplateId::lp_plain;
            break;
        case LpVariant::cot:
            id = TemplateId::lp_cot;
            break;
        case LpVariant::doc: {
            if (!attachments.corpus)
                throw ConfigError("lp doc variant requires a corpus");
            id = TemplateId::lp_doc;
            std::string joined = doc_context(*attachments.corpus, na, attachments);
            std::string other = doc_context(*attachments.corpus, nb, attachments);
            if (!other.empty()) {
                if (!joined.empty()) joined += "\n";
                joined += other;
            }
            bindings["related documents concatenation"] =
                joined.empty() ? "None" : joined;
            break;
        }
        case LpVariant::con: {
            if (!attachments.train)
                throw ConfigError("lp con variant requires the train split");
            id = TemplateId::lp_con;
            auto neighbors = [&](const std::string& entity, bool successors) {
                std::set<std::string> out;
                for (const LpPair& p : attachments.train->pairs) {
                    if (p.label != 1) continue;
                    if (successors && p.a == entity) out.insert(p.b);
                    if (!successors && p.b == entity) out.insert(p.a);
                }
                return join_sorted(out);
            };
            bindings["1-hop successors of entity_1 from training data"] = neighbors(na, true);
            bindings["1-hop predecessors of entity_1 from training data"] = neighbors(na, false);
            bindings["1-hop successors of entity_2 from training data"] = neighbors(nb, true);
            bindings["1-hop predecessors of entity_2 from training data"] = neighbors(nb, false);
            break;
        }
        case LpVariant::wiki: {
            if (!attachments.wiki)
                throw ConfigError("lp wiki variant requires a wiki paragraph store");
            id = TemplateId::lp_wiki;
            auto paragraph = [&](const std::string& entity) {
                auto it = attachments.wiki->find(entity);
                return it == attachments.wiki->end() ? std::string("None") : it->second;
            };
            bindings["Wikipedia introductory paragraph of entity_1"] = paragraph(na);
            bindings["Wikipedia introductory paragraph of entity_2"] = paragraph(nb);
            break;
        }
    }
    return make_request(id, std::move(bindings), params);
}

bool predict_pair(LlmClient& llm, LpVariant variant, const std::string& domain,
                  const std::string& a, const std::string& b,
                  const LpAttachments& attachments, const ChatParams& params) {
    ChatRequest request = make_lp_request(variant, domain, a, b, attachments, params);
    ChatExchange exchange;
    try {
        exchange = llm.complete(request);
    } catch (const TransportError& e) {
        throw TransportError("pair (" + a + ", " + b + "): " + e.what(), e.last_status);
    }
    try {
        return parse_yes_no(exchange.raw_response, variant == LpVariant::cot);
    } catch (const LpParseError& e) {
        throw LpParseError("pair (" + a + ", " + b + "): " + e.what());
    }
}

LpMetrics evaluate_lp(const LpDataset& dataset,
                      const std::vector<std::optional<bool>>& predictions,
                      bool strict) {
    if (dataset.pairs.size() != predictions.size())
        throw MetricError("evaluate_lp: " + std::to_string(dataset.pairs.size()) +
                          " pairs vs " + std::to_string(predictions.size()) +
                          " predictions");
    LpMetrics m;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        int label = dataset.pairs[i].label;
        std::optional<bool> pred = predictions[i];
        if (!pred.has_value()) {
            ++m.parse_errors;
            if (!strict) continue;  // excluded from scoring
            pred = label != 1;      // strict: scored as the wrong class
        }
        bool p = *pred;
        if (label == 1 && p) ++m.tp;
        else if (label == 1 && !p) ++m.fn;
        else if (label == 0 && p) ++m.fp;
        else ++m.tn;
    }
    m.total = m.tp + m.fp + m.tn + m.fn;
    if (m.total == 0) throw MetricError("evaluate_lp: no scorable predictions");
    m.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(m.total);
    m.precision = (m.tp + m.fp) > 0
                      ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp)
                      : 0.0;
    m.recall = (m.tp + m.fn) > 0
                   ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn)
                   : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    return m;
}

std::string lp_metrics_to_json(const LpMetrics& metrics, const LpDataset& dataset,
                               LpVariant variant) {
    nlohmann::json rec;
    rec["domain"] = dataset.domain;
    rec["split"] = dataset.split;
    rec["variant"] = std::string(lp_variant_name(variant));
    rec["accuracy"] = metrics.accuracy;
    rec["precision"] = metrics.precision;
    rec["recall"] = metrics.recall;
    rec["f1"] = metrics.f1;
    rec["confusion"] = {{"tp", metrics.tp}, {"fp", metrics.fp},
                        {"tn", metrics.tn}, {"fn", metrics.fn}};
    rec["parse_errors"] = metrics.parse_errors;
    rec["total_scored"] = metrics.total;
    return rec.dump(2) + "\n";
}

}  // namespace kgfuse
