#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "kgfuse/lp/lp.hpp"
#include "kgfuse/util/error.hpp"
#include "kgfuse/util/io.hpp"
#include "vendor/doctest.h"

using namespace kgfuse;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& content) {
    fs::path dir = fs::temp_directory_path() / "kgfuse_lp_test";
    fs::create_directories(dir);
    fs::path path = dir / name;
    write_file(path, content);
    return path;
}

}  // namespace

TEST_CASE("lp datasets load normalized pairs and reject malformed rows") {
    fs::path good = temp_file("train.tsv",
                              "# entity_a\tentity_b\tlabel\n"
                              "POS Tagging\tViterbi Algorithm\t1\n"
                              "  word embeddings \tPOS tagging\t0\n"
                              "\n");
    LpDataset ds = load_lp_dataset(good, "natural language processing", "train");
    CHECK(ds.domain == "natural language processing");
    CHECK(ds.split == "train");
    REQUIRE(ds.pairs.size() == 2);
    CHECK(ds.pairs[0].a == "pos tagging");
    CHECK(ds.pairs[0].b == "viterbi algorithm");
    CHECK(ds.pairs[0].label == 1);
    CHECK(ds.pairs[1].a == "word embeddings");
    CHECK(ds.pairs[1].label == 0);

    fs::path wide = temp_file("wide.tsv", "a\tb\t1\textra\n");
    try {
        load_lp_dataset(wide, "d", "test");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        std::string what = e.what();
        CHECK(what.find("wide.tsv:1") != std::string::npos);
        CHECK(what.find("entity_a<TAB>entity_b<TAB>label") != std::string::npos);
    }

    fs::path bad_label = temp_file("label.tsv", "a\tb\t1\na\tc\t2\n");
    try {
        load_lp_dataset(bad_label, "d", "test");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        std::string what = e.what();
        CHECK(what.find("label.tsv:2") != std::string::npos);
        CHECK(what.find("label must be 0 or 1, got '2'") != std::string::npos);
    }
}

TEST_CASE("lp variant names round-trip") {
    for (LpVariant v : {LpVariant::plain, LpVariant::cot, LpVariant::doc, LpVariant::con,
                        LpVariant::wiki}) {
        auto parsed = parse_lp_variant(lp_variant_name(v));
        REQUIRE(parsed.has_value());
        CHECK(*parsed == v);
    }
    CHECK_FALSE(parse_lp_variant("zero-shot").has_value());
}

TEST_CASE("wiki stores normalize their keys") {
    fs::path store_path = temp_file("wiki.json",
                                    "{\"POS Tagging\": \"Part-of-speech tagging...\","
                                    " \"bert\": \"BERT is a language model.\"}");
    auto store = load_wiki_store(store_path);
    CHECK(store.size() == 2);
    CHECK(store.at("pos tagging") == "Part-of-speech tagging...");
    CHECK(store.at("bert") == "BERT is a language model.");

    fs::path not_object = temp_file("wiki_bad.json", "[1, 2]");
    CHECK_THROWS_AS(load_wiki_store(not_object), ConfigError);
    fs::path bad_value = temp_file("wiki_bad2.json", "{\"a\": 3}");
    CHECK_THROWS_AS(load_wiki_store(bad_value), ConfigError);
}

TEST_CASE("yes/no parsing takes the first standalone token") {
    CHECK(parse_yes_no("YES", false));
    CHECK_FALSE(parse_yes_no("NO", false));
    CHECK(parse_yes_no("yes.", false));
    CHECK(parse_yes_no("Well, YES, I believe so.", false));
    CHECK_FALSE(parse_yes_no("Answer: no (the order is reversed)", false));
    CHECK(parse_yes_no("1. YES", false));
    CHECK_THROWS_AS(parse_yes_no("eyes and nose", false), LpParseError);
    CHECK_THROWS_AS(parse_yes_no("maybe", false), LpParseError);
    CHECK_THROWS_AS(parse_yes_no("", false), LpParseError);
}

TEST_CASE("yes/no parsing in CoT mode only trusts the result tag") {
    CHECK(parse_yes_no("Reasoning first. <result>YES</result>", true));
    CHECK_FALSE(parse_yes_no("It depends. <result> no. </result>", true));
    CHECK(parse_yes_no("<RESULT>Yes</RESULT>", true));
    CHECK_FALSE(parse_yes_no("yes yes yes <result>NO</result> yes", true));
    CHECK_THROWS_AS(parse_yes_no("YES", true), LpParseError);
    CHECK_THROWS_AS(parse_yes_no("<result>YES", true), LpParseError);
    CHECK_THROWS_AS(parse_yes_no("<result>affirmative</result>", true), LpParseError);
}

TEST_CASE("lp requests bind each variant's extra context") {
    LpAttachments none;
    ChatRequest plain = make_lp_request(LpVariant::plain, "natural language processing",
                                        "POS Tagging", "Viterbi Algorithm", none);
    CHECK(plain.template_id == TemplateId::lp_plain);
    CHECK(plain.rendered_prompt.find(
              "Do you think learning pos tagging will help in understanding "
              "viterbi algorithm?") != std::string::npos);

    ChatRequest swapped = make_lp_request(LpVariant::plain, "natural language processing",
                                          "Viterbi Algorithm", "POS Tagging", none);
    CHECK(plain.rendered_prompt != swapped.rendered_prompt);
    CHECK(swapped.rendered_prompt.find(
              "learning viterbi algorithm will help in understanding pos tagging") !=
          std::string::npos);

    ChatRequest cot = make_lp_request(LpVariant::cot, "d", "a", "b", none);
    CHECK(cot.template_id == TemplateId::lp_cot);
    CHECK(cot.rendered_prompt.find("<result>YES</result>") != std::string::npos);

    SUBCASE("doc variant joins per-entity retrievals") {
        CHECK_THROWS_AS(make_lp_request(LpVariant::doc, "d", "a", "b", none), ConfigError);
        Corpus corpus;
        corpus.add_document({"d1", "POS", "pos tagging uses the viterbi algorithm.", 2001});
        LpAttachments att;
        att.corpus = &corpus;
        ChatRequest doc = make_lp_request(LpVariant::doc, "d", "pos tagging",
                                          "viterbi algorithm", att);
        CHECK(doc.template_id == TemplateId::lp_doc);
        CHECK(doc.bindings.at("related documents concatenation")
                  .find("pos tagging uses the viterbi algorithm.") != std::string::npos);
        ChatRequest empty_doc = make_lp_request(LpVariant::doc, "d", "quantum leap",
                                                "warp drive", att);
        CHECK(empty_doc.bindings.at("related documents concatenation") == "None");
    }

    SUBCASE("con variant summarizes 1-hop train neighborhoods") {
        CHECK_THROWS_AS(make_lp_request(LpVariant::con, "d", "a", "b", none), ConfigError);
        LpDataset train;
        train.pairs = {{"a", "b", 1}, {"a", "c", 1}, {"z", "a", 1}, {"b", "c", 0},
                       {"c", "b", 1}};
        LpAttachments att;
        att.train = &train;
        ChatRequest con = make_lp_request(LpVariant::con, "d", "a", "b", att);
        CHECK(con.template_id == TemplateId::lp_con);
        CHECK(con.bindings.at("1-hop successors of entity_1 from training data") ==
              "b, c");
        CHECK(con.bindings.at("1-hop predecessors of entity_1 from training data") ==
              "z");
        CHECK(con.bindings.at("1-hop successors of entity_2 from training data") ==
              "None");
        CHECK(con.bindings.at("1-hop predecessors of entity_2 from training data") ==
              "a, c");
        CHECK(con.rendered_prompt.find(
                  "We know that a is a prerequisite of the following entities:") !=
              std::string::npos);
    }

    SUBCASE("wiki variant falls back to None per missing entity") {
        CHECK_THROWS_AS(make_lp_request(LpVariant::wiki, "d", "a", "b", none),
                        ConfigError);
        std::map<std::string, std::string> store = {
            {"pos tagging", "POS tagging assigns word classes."}};
        LpAttachments att;
        att.wiki = &store;
        ChatRequest wiki = make_lp_request(LpVariant::wiki, "d", "POS Tagging", "b", att);
        CHECK(wiki.template_id == TemplateId::lp_wiki);
        CHECK(wiki.bindings.at("Wikipedia introductory paragraph of entity_1") ==
              "POS tagging assigns word classes.");
        CHECK(wiki.bindings.at("Wikipedia introductory paragraph of entity_2") == "None");
    }
}

TEST_CASE("predict_pair resolves scripted answers and names failing pairs") {
    auto backend = std::make_unique<MockBackend>();
    LpAttachments none;
    ChatRequest req = make_lp_request(LpVariant::plain, "d", "a", "b", none);
    backend->add_fixture(TemplateId::lp_plain, bindings_digest(req.bindings), "YES");
    ChatRequest rev = make_lp_request(LpVariant::plain, "d", "b", "a", none);
    backend->add_fixture(TemplateId::lp_plain, bindings_digest(rev.bindings), "no way");
    ChatRequest broken = make_lp_request(LpVariant::plain, "d", "a", "c", none);
    backend->add_fixture(TemplateId::lp_plain, bindings_digest(broken.bindings),
                         "cannot tell");
    LlmClient llm(std::move(backend));

    CHECK(predict_pair(llm, LpVariant::plain, "d", "a", "b", none));
    CHECK_FALSE(predict_pair(llm, LpVariant::plain, "d", "b", "a", none));
    try {
        predict_pair(llm, LpVariant::plain, "d", "a", "c", none);
        FAIL("expected LpParseError");
    } catch (const LpParseError& e) {
        CHECK(std::string(e.what()).find("pair (a, c)") != std::string::npos);
    }
}

TEST_CASE("lp scoring matches a brute-force confusion matrix") {
    std::mt19937 rng(777);
    for (int iter = 0; iter < 20; ++iter) {
        LpDataset ds;
        ds.domain = "d";
        ds.split = "test";
        std::size_t n = 25 + rng() % 25;
        std::vector<std::optional<bool>> preds;
        for (std::size_t i = 0; i < n; ++i) {
            ds.pairs.push_back({"e" + std::to_string(i), "f" + std::to_string(i),
                                static_cast<int>(rng() % 2)});
            std::size_t roll = rng() % 10;
            if (roll == 0)
                preds.push_back(std::nullopt);
            else
                preds.push_back(roll % 2 == 1);
        }

        LpMetrics strict = evaluate_lp(ds, preds, true);
        int tp = 0, fp = 0, tn = 0, fn = 0, errors = 0;
        for (std::size_t i = 0; i < n; ++i) {
            bool p;
            if (!preds[i].has_value()) {
                ++errors;
                p = ds.pairs[i].label != 1;
            } else {
                p = *preds[i];
            }
            if (ds.pairs[i].label == 1)
                (p ? tp : fn) += 1;
            else
                (p ? fp : tn) += 1;
        }
        CHECK(strict.tp == tp);
        CHECK(strict.fp == fp);
        CHECK(strict.tn == tn);
        CHECK(strict.fn == fn);
        CHECK(strict.parse_errors == errors);
        CHECK(strict.total == static_cast<int>(n));
        CHECK(strict.accuracy == doctest::Approx(double(tp + tn) / double(n)));
        double prec = tp + fp > 0 ? double(tp) / double(tp + fp) : 0.0;
        double rec = tp + fn > 0 ? double(tp) / double(tp + fn) : 0.0;
        CHECK(strict.precision == doctest::Approx(prec));
        CHECK(strict.recall == doctest::Approx(rec));
        double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
        CHECK(strict.f1 == doctest::Approx(f1));

        LpMetrics lenient = evaluate_lp(ds, preds, false);
        CHECK(lenient.total == static_cast<int>(n) - errors);
        CHECK(lenient.parse_errors == errors);
    }
}

TEST_CASE("strict scoring books a parse error against its gold class") {
    LpDataset ds;
    ds.domain = "d";
    ds.split = "test";
    ds.pairs = {{"a", "b", 1}, {"c", "d", 0}};
    LpMetrics m = evaluate_lp(ds, {std::nullopt, std::nullopt}, true);
    CHECK(m.fn == 1);  // missing positive scored as a miss
    CHECK(m.fp == 1);  // missing negative scored as a false alarm
    CHECK(m.tp == 0);
    CHECK(m.tn == 0);
    CHECK(m.parse_errors == 2);

    CHECK_THROWS_AS(evaluate_lp(ds, {std::nullopt, std::nullopt, std::nullopt}, true),
                    MetricError);
    CHECK_THROWS_AS(evaluate_lp(ds, {std::nullopt, std::nullopt}, false), MetricError);
}

TEST_CASE("lp metrics serialize with the dataset identity") {
    LpDataset ds;
    ds.domain = "natural language processing";
    ds.split = "test";
    ds.pairs = {{"a", "b", 1}, {"c", "d", 0}, {"e", "f", 1}};
    LpMetrics m = evaluate_lp(ds, {true, false, false}, true);
    std::string json = lp_metrics_to_json(m, ds, LpVariant::cot);
    CHECK(json.find("\"variant\": \"cot\"") != std::string::npos);
    CHECK(json.find("\"domain\": \"natural language processing\"") != std::string::npos);
    CHECK(json.find("\"tp\": 1") != std::string::npos);
    CHECK(json.find("\"fn\": 1") != std::string::npos);
    CHECK(json.back() == '\n');
}
