#include "kgfuse/extract/extractor.hpp"

#include <set>

#include <json.hpp>

#include "kgfuse/util/error.hpp"
#include "kgfuse/util/parallel.hpp"

namespace kgfuse {

std::map<std::string, std::string> make_extraction_bindings(const std::string& query,
                                                            const ContextBundle& context) {
    return {{"context", context.joined()}, {"query", query}};
}

ExtractionReport extract_for_entity(const std::string& query, const Corpus& corpus,
                                    LlmClient& llm, const ExtractionConfig& config) {
    ExtractionReport report;
    report.query = normalize_surface(query);

    ContextBundle bundle =
        retrieve_by_entity(corpus, report.query, config.max_docs, config.max_chars);
    report.context_fallback = bundle.fallback_ranked;

    ChatRequest request = make_request(
        TemplateId::extraction, make_extraction_bindings(report.query, bundle),
        config.params);
    ChatExchange exchange;
    try {
        exchange = llm.complete(request);
    } catch (const TransportError& e) {
        throw TransportError("entity '" + report.query + "': " + e.what(),
                             e.last_status);
    }
    report.exchange_ref = exchange.ref();

    ParsedTriplets parsed = parse_triplets(exchange.raw_response);
    report.skipped = std::move(parsed.skipped);
    std::vector<std::string> evidence;
    for (const auto& [doc_id, text] : bundle.snippets) evidence.push_back(doc_id);
    for (Triplet& t : parsed.triplets) {
        t.source = TripletSource::extracted;
        t.evidence = evidence;
        report.triplets.push_back(std::move(t));
    }
    return report;
}

CandidateBuildResult build_candidate_graph(const std::vector<std::string>& seeds,
                                           const Corpus& corpus, LlmClient& llm,
                                           const ExtractionConfig& config) {
    if (seeds.empty()) throw ConfigError("no seed entities to extract from");

    std::vector<std::string> queries;
    std::set<std::string> seen;
    for (const std::string& s : seeds) {
        std::string q = normalize_surface(s);
        if (seen.insert(q).second) queries.push_back(std::move(q));
    }

    struct Slot {
        bool ok = false;
        ExtractionReport report;
        std::string error;
    };
    std::vector<Slot> slots(queries.size());

    int workers = llm.deterministic() ? 1 : config.parallelism;
    parallel_for(queries.size(), workers, [&](std::size_t i) {
        try {
            slots[i].report = extract_for_entity(queries[i], corpus, llm, config);
            slots[i].ok = true;
        } catch (const std::exception& e) {
            slots[i].error = e.what();
        }
    });

    CandidateBuildResult result;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        if (!slots[i].ok) {
            result.failures.emplace_back(queries[i], slots[i].error);
            continue;
        }
        for (const Triplet& t : slots[i].report.triplets)
            result.graph.insert(t);
        result.reports.push_back(std::move(slots[i].report));
    }
    return result;
}

std::string extraction_report_to_json(const ExtractionReport& report) {
    nlohmann::json rec;
    rec["query"] = report.query;
    nlohmann::json triplets = nlohmann::json::array();
    for (const Triplet& t : report.triplets) {
        triplets.push_back({{"head", t.head},
                            {"relation", std::string(storage_name(t.relation))},
                            {"tail", t.tail},
                            {"evidence", t.evidence}});
    }
    rec["triplets"] = std::move(triplets);
    nlohmann::json skipped = nlohmann::json::array();
    for (const SkippedFragment& s : report.skipped)
        skipped.push_back({{"fragment", s.fragment}, {"reason", s.reason}});
    rec["skipped"] = std::move(skipped);
    rec["exchange_ref"] = report.exchange_ref;
    rec["context_fallback"] = report.context_fallback;
    return rec.dump();
}

}  // namespace kgfuse
