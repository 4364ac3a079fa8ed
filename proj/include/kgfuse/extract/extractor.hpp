#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "kgfuse/corpus/corpus.hpp"
#include "kgfuse/extract/triplet_parse.hpp"
#include "kgfuse/graph/graph.hpp"
#include "kgfuse/llm/gateway.hpp"

namespace kgfuse {

struct ExtractionConfig {
    std::size_t max_docs = 5;
    std::size_t max_chars = 4000;
    ChatParams params;
    int parallelism = 1;
};

struct ExtractionReport {
    std::string query;
    std::vector<Triplet> triplets;
    std::vector<SkippedFragment> skipped;
    std::string exchange_ref;
    bool context_fallback = false;
};

std::map<std::string, std::string> make_extraction_bindings(const std::string& query,
                                                            const ContextBundle& context);

ExtractionReport extract_for_entity(const std::string& query, const Corpus& corpus,
                                    LlmClient& llm, const ExtractionConfig& config);

struct CandidateBuildResult {
    KnowledgeGraph graph;  // role=candidate
    std::vector<ExtractionReport> reports;
    std::vector<std::pair<std::string, std::string>> failures;  // (entity, reason)
};

// Runs extraction for every seed (bounded concurrency) and unions the
// reports in seed order; duplicates merge their evidence lists.
CandidateBuildResult build_candidate_graph(const std::vector<std::string>& seeds,
                                           const Corpus& corpus, LlmClient& llm,
                                           const ExtractionConfig& config);

std::string extraction_report_to_json(const ExtractionReport& report);

}  // namespace kgfuse
