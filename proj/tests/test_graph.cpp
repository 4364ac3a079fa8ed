#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <string>

#include "kgfuse/graph/graph.hpp"
#include "kgfuse/util/error.hpp"
#include "kgfuse/util/io.hpp"
#include "vendor/doctest.h"

using namespace kgfuse;

TEST_CASE("normalize_surface trims, collapses and lowercases") {
    CHECK(normalize_surface("  Neural   Machine\tTranslation ") == "neural machine translation");
    CHECK(normalize_surface("BERT") == "bert");
    CHECK_THROWS_AS(normalize_surface("   "), GraphError);
    CHECK_THROWS_AS(normalize_surface(""), GraphError);
}

TEST_CASE("relation spellings round-trip through both vocabularies") {
    for (RelationType r : kAllRelations) {
        CHECK(parse_relation(storage_name(r)) == r);
        CHECK(parse_relation(prompt_name(r)) == r);
    }
    CHECK(parse_relation("Is-a-Prerequisite-of") == RelationType::PrerequisiteOf);
    CHECK(parse_relation("prerequisite of") == RelationType::PrerequisiteOf);
    CHECK(parse_relation("USED_FOR") == RelationType::UsedFor);
    CHECK(parse_relation("Hyponym-Of") == RelationType::HyponymOf);
    CHECK(parse_relation("Evaluate-for") == RelationType::EvaluateFor);
    CHECK_FALSE(parse_relation("Evaluated-by").has_value());
    CHECK_FALSE(parse_relation("RelatedTo").has_value());
    CHECK(is_symmetric(RelationType::Compare));
    CHECK(is_symmetric(RelationType::Conjunction));
    CHECK_FALSE(is_symmetric(RelationType::PrerequisiteOf));
}

TEST_CASE("insert normalizes, rejects self-loops and merges duplicates") {
    KnowledgeGraph kg;
    CHECK(kg.insert({"  POS  Tagging", RelationType::PrerequisiteOf, "viterbi ALGORITHM",
                     TripletSource::extracted,
                     {"d1"}}) == InsertResult::added);
    CHECK(kg.insert({"pos tagging", RelationType::PrerequisiteOf, "viterbi algorithm",
                     TripletSource::extracted,
                     {"d2", "d1"}}) == InsertResult::merged_duplicate);
    REQUIRE(kg.size() == 1);
    CHECK(kg.triplets()[0].head == "pos tagging");
    CHECK(kg.triplets()[0].evidence == std::vector<std::string>{"d1", "d2"});
    CHECK(kg.insert({"BERT", RelationType::Compare, "bert", TripletSource::extracted, {}}) ==
          InsertResult::rejected_self_loop);
}

TEST_CASE("symmetric relations store endpoints in lexicographic order") {
    KnowledgeGraph kg;
    kg.insert({"zebra", RelationType::Compare, "aardvark", TripletSource::extracted, {}});
    CHECK(kg.triplets()[0].head == "aardvark");
    CHECK(kg.triplets()[0].tail == "zebra");
    CHECK(kg.insert({"aardvark", RelationType::Compare, "zebra", TripletSource::extracted, {}}) ==
          InsertResult::merged_duplicate);
    kg.insert({"zebra", RelationType::PrerequisiteOf, "aardvark", TripletSource::extracted, {}});
    CHECK(kg.triplets()[1].head == "zebra");
}

TEST_CASE("fused graphs reject a second relation on the same unordered pair") {
    KnowledgeGraph fused{GraphRole::fused};
    CHECK(fused.insert({"rouge", RelationType::EvaluateFor, "machine translation",
                        TripletSource::fused,
                        {}}) == InsertResult::added);
    CHECK(fused.insert({"rouge", RelationType::UsedFor, "machine translation",
                        TripletSource::fused,
                        {}}) == InsertResult::rejected_conflict);
    CHECK(fused.insert({"machine translation", RelationType::PrerequisiteOf, "rouge",
                        TripletSource::fused,
                        {}}) == InsertResult::rejected_conflict);
    CHECK(fused.size() == 1);

    KnowledgeGraph candidate;
    candidate.insert({"rouge", RelationType::EvaluateFor, "machine translation",
                      TripletSource::extracted, {}});
    candidate.insert({"rouge", RelationType::UsedFor, "machine translation",
                      TripletSource::extracted, {}});
    CHECK(candidate.size() == 2);
    auto conflicts = detect_conflicts(candidate);
    REQUIRE(conflicts.size() == 1);
    CHECK(conflicts[0].size() == 2);
    CHECK(detect_conflicts(fused).empty());
}

TEST_CASE("same relation in both directions is a conflict, symmetric duplicates are not") {
    KnowledgeGraph kg;
    kg.insert({"a", RelationType::PrerequisiteOf, "b", TripletSource::extracted, {}});
    kg.insert({"b", RelationType::PrerequisiteOf, "a", TripletSource::extracted, {}});
    CHECK(kg.size() == 2);
    CHECK(detect_conflicts(kg).size() == 1);
}

TEST_CASE("alias map unions classes and resolves canonicals") {
    AliasMap aliases;
    aliases.merge("nmt", "neural machine translation");
    CHECK(aliases.canonical("nmt") == "neural machine translation");
    CHECK(aliases.canonical("neural machine translation") == "neural machine translation");
    CHECK(aliases.canonical("unseen") == "unseen");
    aliases.merge("nmt", "mt models");
    CHECK(aliases.canonical("mt models") == "neural machine translation");
    CHECK(aliases.class_count() == 1);
    auto classes = aliases.classes();
    REQUIRE(classes.count("neural machine translation"));
    CHECK(classes.at("neural machine translation").size() == 3);

    AliasMap pinned;
    pinned.merge("a", "bb");
    pinned.set_canonical("bb", "a");
    CHECK(pinned.canonical("bb") == "a");
    pinned.merge("a", "ccc");
    CHECK(pinned.canonical("ccc") == "a");
}

TEST_CASE("alias-aware insert canonicalizes endpoints") {
    KnowledgeGraph kg;
    kg.aliases().merge("nmt", "neural machine translation");
    kg.insert({"nmt", RelationType::UsedFor, "translation quality", TripletSource::extracted, {}});
    CHECK(kg.triplets()[0].head == "neural machine translation");
    CHECK(kg.has_entity("nmt"));
    CHECK(kg.subgraph("nmt").size() == 1);
}

TEST_CASE("tsv serialization is sorted, escaped and lossless") {
    KnowledgeGraph kg{GraphRole::candidate};
    kg.insert({"entity, with comma", RelationType::UsedFor, "tab\there", TripletSource::extracted,
               {"doc 1"}});
    kg.insert({"alpha", RelationType::PrerequisiteOf, "beta", TripletSource::expert, {"d2", "d1"}});
    std::string tsv = to_tsv(kg);
    CHECK(tsv.rfind("# kgfuse graph v1 role=candidate", 0) == 0);
    KnowledgeGraph back = from_tsv(tsv);
    CHECK(back.role() == GraphRole::candidate);
    REQUIRE(back.size() == 2);
    CHECK(to_tsv(back) == tsv);
    CHECK(back.triplets()[0].head == "alpha");
    CHECK(back.triplets()[1].head == "entity, with comma");
    CHECK(back.triplets()[1].tail == "tab here");
    CHECK(back.triplets()[0].evidence == std::vector<std::string>{"d2", "d1"});
    CHECK(back.triplets()[0].source == TripletSource::expert);
}

TEST_CASE("from_tsv validates the header and field counts") {
    CHECK_THROWS_AS(from_tsv("no header\n"), GraphError);
    CHECK_THROWS_AS(from_tsv("# kgfuse graph v1 role=banana\n"), GraphError);
    CHECK_THROWS_AS(from_tsv("# kgfuse graph v1 role=fused\na\tb\n"), GraphError);
    CHECK_THROWS_AS(
        from_tsv("# kgfuse graph v1 role=fused\na\tnot_a_relation\tb\textracted\t\n"), GraphError);
}

TEST_CASE("save and load round-trip graphs with alias sidecars") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "kgfuse_graph_test";
    fs::create_directories(dir);
    fs::path path = dir / "fused.tsv";

    KnowledgeGraph kg{GraphRole::fused};
    kg.aliases().merge("nmt", "neural machine translation");
    kg.insert({"nmt", RelationType::UsedFor, "low resource translation", TripletSource::fused, {}});
    save_graph(kg, path);
    CHECK(fs::exists(alias_sidecar_path(path)));
    KnowledgeGraph back = load_graph(path);
    CHECK(back.role() == GraphRole::fused);
    CHECK(back.aliases().canonical("nmt") == "neural machine translation");
    CHECK(to_tsv(back) == to_tsv(kg));
    fs::remove_all(dir);
}
