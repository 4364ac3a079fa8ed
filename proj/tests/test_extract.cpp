#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "kgfuse/extract/extractor.hpp"
#include "kgfuse/extract/triplet_parse.hpp"
#include "kgfuse/graph/relation.hpp"
#include "kgfuse/util/error.hpp"
#include "vendor/doctest.h"

using namespace kgfuse;

namespace {

Corpus small_corpus() {
    Corpus corpus;
    corpus.add_document({"d1", "BERT",
                         "bert improves question answering. bert uses transformers.", 2019});
    corpus.add_document({"d2", "GPT", "gpt generates text with transformers.", 2020});
    corpus.add_document({"d3", "Survey", "a survey of question answering systems.", 2021});
    return corpus;
}

}  // namespace

TEST_CASE("strip_enumeration removes numbering, letters and bullets") {
    CHECK(strip_enumeration("1. bert") == "bert");
    CHECK(strip_enumeration("12) bert") == "bert");
    CHECK(strip_enumeration("(3) bert") == "bert");
    CHECK(strip_enumeration("a) bert") == "bert");
    CHECK(strip_enumeration("b. bert") == "bert");
    CHECK(strip_enumeration("- bert") == "bert");
    CHECK(strip_enumeration("* bert") == "bert");
    CHECK(strip_enumeration("\xE2\x80\xA2 bert") == "bert");
    CHECK(strip_enumeration("1. 2. bert") == "bert");
    CHECK(strip_enumeration("  bert  ") == "bert");
    CHECK(strip_enumeration("3.5 bleu points") == "3.5 bleu points");
    CHECK(strip_enumeration("a.m. schedule") == "a.m. schedule");
    CHECK(strip_enumeration("-bert") == "-bert");
    CHECK(strip_enumeration("c4 corpus") == "c4 corpus");
    CHECK(strip_enumeration("1.") == "");
    CHECK(strip_enumeration("") == "");
}

TEST_CASE("is_none_response accepts the prompt empty marker") {
    CHECK(is_none_response("None"));
    CHECK(is_none_response("none"));
    CHECK(is_none_response(" NONE. "));
    CHECK(is_none_response("None!"));
    CHECK_FALSE(is_none_response("nonetheless"));
    CHECK_FALSE(is_none_response("(a, Compare, b)"));
    CHECK_FALSE(is_none_response(""));
}

TEST_CASE("parse_triplets keeps valid groups and explains every skip") {
    ParsedTriplets out = parse_triplets("(A, Evaluated-by, B)(C, Compare, D)");
    REQUIRE(out.triplets.size() == 1);
    CHECK(out.triplets[0].head == "c");
    CHECK(out.triplets[0].relation == RelationType::Compare);
    CHECK(out.triplets[0].tail == "d");
    REQUIRE(out.skipped.size() == 1);
    CHECK(out.skipped[0].fragment == "(A, Evaluated-by, B)");
    CHECK(out.skipped[0].reason == "unknown relation 'Evaluated-by'");

    CHECK(parse_triplets("None").triplets.empty());
    CHECK(parse_triplets("None").skipped.empty());
    CHECK(parse_triplets("none.").triplets.empty());

    ParsedTriplets unterminated = parse_triplets("(a, Compare, b");
    CHECK(unterminated.triplets.empty());
    REQUIRE(unterminated.skipped.size() == 1);
    CHECK(unterminated.skipped[0].reason == "unterminated triplet");

    ParsedTriplets arity = parse_triplets("(a, b)(a, Compare, b, c)");
    CHECK(arity.triplets.empty());
    REQUIRE(arity.skipped.size() == 2);
    CHECK(arity.skipped[0].reason == "expected 3 comma-separated fields, got 2");
    CHECK(arity.skipped[1].reason == "expected 3 comma-separated fields, got 4");

    ParsedTriplets empties = parse_triplets("(, Compare, b)(a, Compare, )");
    REQUIRE(empties.skipped.size() == 2);
    CHECK(empties.skipped[0].reason == "empty head entity");
    CHECK(empties.skipped[1].reason == "empty tail entity");

    ParsedTriplets loop = parse_triplets("(BERT, Compare, bert)");
    CHECK(loop.triplets.empty());
    REQUIRE(loop.skipped.size() == 1);
    CHECK(loop.skipped[0].reason == "self-loop");
}

TEST_CASE("parse_triplets tolerates prose, numbering and nested parentheses") {
    ParsedTriplets out = parse_triplets(
        "Here are the triplets:\n"
        "1. (bert (base), Used-for, question answering)\n"
        "2. (machine translation, Is-a-Prerequisite-of, speech translation)\n"
        "That is all.");
    REQUIRE(out.triplets.size() == 2);
    CHECK(out.triplets[0].head == "bert (base)");
    CHECK(out.triplets[0].relation == RelationType::UsedFor);
    CHECK(out.triplets[1].relation == RelationType::PrerequisiteOf);
    CHECK(out.triplets[1].tail == "speech translation");
    CHECK(out.skipped.empty());
}

TEST_CASE("prompt formatting round-trips through the parser") {
    std::mt19937 rng(20240817);
    const std::vector<std::string> entities = {
        "bert",       "gpt",           "word embeddings", "semantic parsing",
        "pos tagging", "viterbi algorithm", "bleu score",  "machine translation"};
    const std::vector<RelationType> relations = {
        RelationType::PrerequisiteOf, RelationType::UsedFor,   RelationType::Compare,
        RelationType::Conjunction,    RelationType::HyponymOf, RelationType::EvaluateFor,
        RelationType::PartOf};
    for (int iter = 0; iter < 200; ++iter) {
        std::vector<Triplet> sample;
        std::size_t count = rng() % 6;
        for (std::size_t k = 0; k < count; ++k) {
            Triplet t;
            t.head = entities[rng() % entities.size()];
            do {
                t.tail = entities[rng() % entities.size()];
            } while (t.tail == t.head);
            t.relation = relations[rng() % relations.size()];
            sample.push_back(std::move(t));
        }
        std::string prompt = format_triplets_as_prompt(sample);
        if (sample.empty()) CHECK(prompt == "None");
        ParsedTriplets parsed = parse_triplets(prompt);
        CHECK(parsed.skipped.empty());
        REQUIRE(parsed.triplets.size() == sample.size());
        auto key = [](const Triplet& t) {
            return std::make_tuple(t.head, static_cast<int>(t.relation), t.tail);
        };
        std::vector<std::tuple<std::string, int, std::string>> lhs, rhs;
        for (const Triplet& t : sample) lhs.push_back(key(t));
        for (const Triplet& t : parsed.triplets) rhs.push_back(key(t));
        std::sort(lhs.begin(), lhs.end());
        std::sort(rhs.begin(), rhs.end());
        CHECK(lhs == rhs);
    }
}

TEST_CASE("extract_for_entity binds retrieved context and records evidence") {
    Corpus corpus = small_corpus();
    ExtractionConfig config;
    config.max_docs = 2;
    config.max_chars = 4000;

    ContextBundle bundle = retrieve_by_entity(corpus, "question answering", 2, 4000);
    REQUIRE(bundle.snippets.size() == 2);
    CHECK_FALSE(bundle.fallback_ranked);

    auto backend = std::make_unique<MockBackend>();
    MockBackend* raw = backend.get();
    std::string digest = bindings_digest(
        make_extraction_bindings("question answering", bundle));
    raw->add_fixture(TemplateId::extraction, digest,
                     "(question answering, Evaluate-for, bleu score)"
                     "(BERT, Used-for, Question Answering)");
    LlmClient llm(std::move(backend));

    ExtractionReport report = extract_for_entity("Question Answering", corpus, llm, config);
    CHECK(report.query == "question answering");
    CHECK(report.exchange_ref == "extraction:" + digest);
    CHECK_FALSE(report.context_fallback);
    REQUIRE(report.triplets.size() == 2);
    CHECK(report.triplets[0].relation == RelationType::EvaluateFor);
    CHECK(report.triplets[1].head == "bert");
    CHECK(report.triplets[1].tail == "question answering");
    std::vector<std::string> evidence = {bundle.snippets[0].first,
                                         bundle.snippets[1].first};
    CHECK(report.triplets[0].evidence == evidence);
    CHECK(report.triplets[1].evidence == evidence);
    CHECK(report.skipped.empty());

    std::string json = extraction_report_to_json(report);
    CHECK(json.find("\"query\":\"question answering\"") != std::string::npos);
    CHECK(json.find("Evaluate_for") != std::string::npos);
}

TEST_CASE("extract_for_entity flags token-overlap fallback retrieval") {
    Corpus corpus = small_corpus();
    auto backend = std::make_unique<MockBackend>();
    LlmClient llm(std::move(backend));
    ExtractionConfig config;
    ExtractionReport report =
        extract_for_entity("question answering benchmarks", corpus, llm, config);
    CHECK(report.context_fallback);
    CHECK(report.triplets.empty());  // fixture miss falls back to "None"
}

TEST_CASE("build_candidate_graph dedups seeds and merges duplicate triplets") {
    Corpus corpus = small_corpus();
    ExtractionConfig config;
    config.max_docs = 2;

    auto backend = std::make_unique<MockBackend>();
    MockBackend* raw = backend.get();
    auto script = [&](const std::string& query, const std::string& response) {
        ContextBundle bundle = retrieve_by_entity(corpus, query, config.max_docs,
                                                  config.max_chars);
        raw->add_fixture(TemplateId::extraction, bindings_digest(
                             make_extraction_bindings(query, bundle)),
                         response);
    };
    script("bert", "(bert, Used-for, question answering)(bert, Compare, gpt)");
    script("gpt", "(gpt, Compare, bert)(gpt, Used-for, text generation)");
    LlmClient llm(std::move(backend));

    CandidateBuildResult result =
        build_candidate_graph({"BERT", "gpt", "  bert "}, corpus, llm, config);
    CHECK(result.failures.empty());
    CHECK(result.reports.size() == 2);  // "BERT" and "  bert " collapse
    CHECK(result.graph.role() == GraphRole::candidate);
    // (bert, Compare, gpt) and (gpt, Compare, bert) merge through the
    // symmetric canonical key; evidence from both extractions is unioned.
    CHECK(result.graph.size() == 3);
    bool found_compare = false;
    for (const Triplet& t : result.graph.triplets()) {
        if (t.relation != RelationType::Compare) continue;
        found_compare = true;
        CHECK(t.evidence.size() >= 2);
    }
    CHECK(found_compare);
}

TEST_CASE("build_candidate_graph records strict fixture misses as failures") {
    Corpus corpus = small_corpus();
    ExtractionConfig config;
    config.max_docs = 2;

    auto backend = std::make_unique<MockBackend>();
    MockBackend* raw = backend.get();
    raw->set_strict(true);
    ContextBundle bundle =
        retrieve_by_entity(corpus, "bert", config.max_docs, config.max_chars);
    raw->add_fixture(TemplateId::extraction,
                     bindings_digest(make_extraction_bindings("bert", bundle)),
                     "(bert, Used-for, question answering)");
    LlmClient llm(std::move(backend));

    CandidateBuildResult result = build_candidate_graph({"bert", "gpt"}, corpus, llm, config);
    CHECK(result.reports.size() == 1);
    REQUIRE(result.failures.size() == 1);
    CHECK(result.failures[0].first == "gpt");
    CHECK(result.failures[0].second.find("no fixture") != std::string::npos);
    CHECK(result.graph.size() == 1);

    CHECK_THROWS_AS(build_candidate_graph({}, corpus, llm, config), ConfigError);
}
