#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "kgfuse/qa/qa.hpp"
#include "kgfuse/util/error.hpp"
#include "kgfuse/util/io.hpp"
#include "vendor/doctest.h"
#include "vendor/json.hpp"

using namespace kgfuse;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& content) {
    fs::path dir = fs::temp_directory_path() / "kgfuse_qa_test";
    fs::create_directories(dir);
    fs::path path = dir / name;
    write_file(path, content);
    return path;
}

Triplet make_triplet(std::string head, RelationType rel, std::string tail) {
    Triplet t;
    t.head = std::move(head);
    t.relation = rel;
    t.tail = std::move(tail);
    return t;
}

KnowledgeGraph chain_graph() {
    KnowledgeGraph kg(GraphRole::fused);
    kg.insert(make_triplet("natural language processing intro", RelationType::PrerequisiteOf,
                           "vector representations"));
    kg.insert(make_triplet("vector representations", RelationType::PrerequisiteOf, "t-sne"));
    kg.insert(make_triplet("t-sne", RelationType::UsedFor, "visualization"));
    kg.insert(make_triplet("word distributions", RelationType::Conjunction,
                           "reading comprehension"));
    return kg;
}

// The answer prompt's bindings include a per-task format instruction; recover
// the digest by probing through the library instead of duplicating strings.
void script_answer(MockBackend& backend, const QaItem& item, const std::string& context,
                   const std::string& response) {
    auto backend_probe = std::make_unique<MockBackend>();
    MockBackend* raw = backend_probe.get();
    raw->set_strict(true);
    LlmClient llm(std::move(backend_probe));
    try {
        answer(llm, item, context);
    } catch (const FixtureMissError& e) {
        backend.add_fixture(TemplateId::qa_answer, e.digest, response);
        return;
    }
    FAIL("strict probe unexpectedly succeeded");
}

QaItem boolean_item(const std::string& question) {
    QaItem item;
    item.task = QaTask::T1;
    item.question = question;
    item.gold.kind = QaGold::Kind::boolean;
    item.gold.boolean_value = true;
    return item;
}

}  // namespace

TEST_CASE("qa task names round-trip") {
    for (QaTask t : {QaTask::T1, QaTask::T2, QaTask::T3, QaTask::T4, QaTask::T5, QaTask::T6}) {
        auto parsed = parse_qa_task(qa_task_name(t));
        REQUIRE(parsed.has_value());
        CHECK(*parsed == t);
    }
    CHECK_FALSE(parse_qa_task("T7").has_value());
}

TEST_CASE("qa items load typed gold per task") {
    fs::path good = temp_file(
        "items.jsonl",
        "{\"task\": \"T1\", \"question\": \"Is A before B?\", \"gold\": true}\n"
        "{\"task\": \"T2\", \"question\": \"Which concepts?\", \"gold\": [\"BERT\", \"gpt\"]}\n"
        "{\"task\": \"T4\", \"question\": \"What relation?\", \"gold\": \"conjunction\"}\n"
        "{\"task\": \"T6\", \"question\": \"Design an idea.\"}\n");
    auto items = load_qa_items(good);
    REQUIRE(items.size() == 4);
    CHECK(items[0].task == QaTask::T1);
    CHECK(items[0].gold.kind == QaGold::Kind::boolean);
    CHECK(items[0].gold.boolean_value);
    CHECK(items[1].gold.kind == QaGold::Kind::entity_list);
    CHECK(items[1].gold.entities == std::vector<std::string>{"bert", "gpt"});
    CHECK(items[2].gold.kind == QaGold::Kind::relation);
    CHECK(items[2].gold.relation == RelationType::Conjunction);
    CHECK(items[3].gold.kind == QaGold::Kind::none);

    fs::path bad_task = temp_file("bad_task.jsonl",
                                  "{\"task\": \"T9\", \"question\": \"x\", \"gold\": true}\n");
    try {
        load_qa_items(bad_task);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("bad_task.jsonl:1") != std::string::npos);
    }

    fs::path bad_gold = temp_file(
        "bad_gold.jsonl",
        "{\"task\": \"T1\", \"question\": \"ok\", \"gold\": true}\n"
        "{\"task\": \"T2\", \"question\": \"x\", \"gold\": \"not-a-list\"}\n");
    try {
        load_qa_items(bad_gold);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("bad_gold.jsonl:2") != std::string::npos);
    }
}

TEST_CASE("command grammar parses the documented shapes") {
    auto path = parse_command("PATH(word distributions, reading comprehension)");
    REQUIRE(path.has_value());
    CHECK(path->kind == GraphCommand::Kind::path);
    CHECK(path->arg_a == "word distributions");
    CHECK(path->arg_b == "reading comprehension");

    auto neighbors = parse_command("NEIGHBORS(multilingual model, 1)");
    REQUIRE(neighbors.has_value());
    CHECK(neighbors->kind == GraphCommand::Kind::neighbors);
    CHECK(neighbors->arg_a == "multilingual model");
    CHECK(neighbors->depth == 1);

    auto sub = parse_command("2. SUBGRAPH(BERT, 2)");
    REQUIRE(sub.has_value());
    CHECK(sub->kind == GraphCommand::Kind::subgraph);
    CHECK(sub->arg_a == "bert");
    CHECK(sub->depth == 2);

    auto rel = parse_command("- RELATION(pos tagging, viterbi algorithm)");
    REQUIRE(rel.has_value());
    CHECK(rel->kind == GraphCommand::Kind::relation);

    CHECK_FALSE(parse_command("tell me more").has_value());
    CHECK_FALSE(parse_command("PATH(a)").has_value());
    CHECK_FALSE(parse_command("PATH(a, b, c)").has_value());
    CHECK_FALSE(parse_command("NEIGHBORS(a, zero)").has_value());
    CHECK_FALSE(parse_command("NEIGHBORS(a, 0)").has_value());
    CHECK_FALSE(parse_command("NEIGHBORS(a, 12345)").has_value());
    CHECK_FALSE(parse_command("NEIGHBORS(, 1)").has_value());
    CHECK_FALSE(parse_command("WALK(a, b)").has_value());
    CHECK_FALSE(parse_command("PATH a, b").has_value());
    CHECK_FALSE(parse_command("").has_value());
}

TEST_CASE("printing a parsed command round-trips") {
    std::mt19937 rng(4242);
    const std::vector<std::string> entities = {"bert", "pos tagging", "t-sne",
                                               "word embeddings"};
    for (int iter = 0; iter < 200; ++iter) {
        GraphCommand cmd;
        switch (rng() % 4) {
            case 0: cmd.kind = GraphCommand::Kind::neighbors; break;
            case 1: cmd.kind = GraphCommand::Kind::path; break;
            case 2: cmd.kind = GraphCommand::Kind::subgraph; break;
            default: cmd.kind = GraphCommand::Kind::relation; break;
        }
        cmd.arg_a = entities[rng() % entities.size()];
        if (cmd.kind == GraphCommand::Kind::path ||
            cmd.kind == GraphCommand::Kind::relation)
            cmd.arg_b = entities[rng() % entities.size()];
        else
            cmd.depth = 1 + static_cast<int>(rng() % 4);
        auto reparsed = parse_command(print_command(cmd));
        REQUIRE(reparsed.has_value());
        CHECK(reparsed->kind == cmd.kind);
        CHECK(reparsed->arg_a == cmd.arg_a);
        CHECK(reparsed->arg_b == cmd.arg_b);
        CHECK(reparsed->depth == cmd.depth);
    }
}

TEST_CASE("parse_commands splits lines and keeps the rejects") {
    CommandParse parsed = parse_commands(
        "NEIGHBORS(bert, 1)\n"
        "and then maybe\n"
        "\n"
        "PATH(a, b)\n");
    CHECK(parsed.commands.size() == 2);
    REQUIRE(parsed.skipped.size() == 1);
    CHECK(parsed.skipped[0] == "and then maybe");
}

TEST_CASE("generate_commands goes through the command prompt") {
    QaItem item = boolean_item("Is t-sne downstream of vector representations?");
    ChatRequest req = make_request(
        TemplateId::qa_command,
        {{"domain", "natural language processing"}, {"question", item.question}});
    auto backend = std::make_unique<MockBackend>();
    backend->add_fixture(TemplateId::qa_command, bindings_digest(req.bindings),
                         "PATH(vector representations, t-sne)\nthinking aloud");
    LlmClient llm(std::move(backend));
    CommandParse diagnostics;
    auto commands = generate_commands(llm, "natural language processing", item.question,
                                      &diagnostics);
    REQUIRE(commands.size() == 1);
    CHECK(commands[0].kind == GraphCommand::Kind::path);
    REQUIRE(diagnostics.skipped.size() == 1);
    CHECK(diagnostics.skipped[0] == "thinking aloud");
}

TEST_CASE("PATH walks the graph and reports the entity sequence") {
    KnowledgeGraph kg = chain_graph();
    GraphCommand cmd;
    cmd.kind = GraphCommand::Kind::path;
    cmd.arg_a = "natural language processing intro";
    cmd.arg_b = "t-sne";
    CommandOutput out = execute_command(kg, cmd);
    CHECK(out.path == std::vector<std::string>{"natural language processing intro",
                                               "vector representations", "t-sne"});
    REQUIRE(out.triplets.size() == 2);
    CHECK(out.triplets[0].head == "natural language processing intro");
    CHECK(out.triplets[1].tail == "t-sne");
    CHECK(out.text.find("(natural language processing intro, Is-a-Prerequisite-of, "
                        "vector representations)") != std::string::npos);

    // Walk the reported triplets to confirm the sequence is a real path.
    for (std::size_t i = 0; i + 1 < out.path.size(); ++i) {
        const Triplet& t = out.triplets[i];
        bool forward = t.head == out.path[i] && t.tail == out.path[i + 1];
        bool backward = t.tail == out.path[i] && t.head == out.path[i + 1];
        CHECK((forward || backward));
    }

    GraphCommand disconnected = cmd;
    disconnected.arg_b = "word distributions";
    CommandOutput miss = execute_command(kg, disconnected);
    CHECK(miss.path.empty());
    CHECK(miss.text.find("no path found between 'natural language processing intro' "
                         "and 'word distributions'") != std::string::npos);

    GraphCommand same = cmd;
    same.arg_b = "Natural Language Processing intro";
    CommandOutput self = execute_command(kg, same);
    CHECK(self.path == std::vector<std::string>{"natural language processing intro"});
    CHECK(self.text.find("resolve to the same node") != std::string::npos);
}

TEST_CASE("directed PATH only follows prerequisite arrows") {
    KnowledgeGraph kg(GraphRole::fused);
    kg.insert(make_triplet("b", RelationType::PrerequisiteOf, "a"));
    kg.insert(make_triplet("b", RelationType::UsedFor, "c"));

    GraphCommand cmd;
    cmd.kind = GraphCommand::Kind::path;
    cmd.arg_a = "a";
    cmd.arg_b = "b";
    CHECK(execute_command(kg, cmd, false).path ==
          std::vector<std::string>{"a", "b"});
    CHECK(execute_command(kg, cmd, true).path.empty());

    GraphCommand forward;
    forward.kind = GraphCommand::Kind::path;
    forward.arg_a = "b";
    forward.arg_b = "a";
    CHECK(execute_command(kg, forward, true).path == std::vector<std::string>{"b", "a"});

    GraphCommand via_used_for;
    via_used_for.kind = GraphCommand::Kind::path;
    via_used_for.arg_a = "b";
    via_used_for.arg_b = "c";
    CHECK(execute_command(kg, via_used_for, false).path ==
          std::vector<std::string>{"b", "c"});
    CHECK(execute_command(kg, via_used_for, true).path.empty());
}

TEST_CASE("NEIGHBORS grows by BFS layers and SUBGRAPH induces the ball") {
    KnowledgeGraph kg = chain_graph();
    GraphCommand cmd;
    cmd.kind = GraphCommand::Kind::neighbors;
    cmd.arg_a = "vector representations";
    cmd.depth = 1;
    CommandOutput near = execute_command(kg, cmd);
    CHECK(near.triplets.size() == 2);  // both edges touching the center

    cmd.depth = 2;
    CommandOutput wider = execute_command(kg, cmd);
    CHECK(wider.triplets.size() == 3);  // plus (t-sne, Used-for, visualization)

    GraphCommand sub;
    sub.kind = GraphCommand::Kind::subgraph;
    sub.arg_a = "natural language processing intro";
    sub.depth = 2;
    CommandOutput ball = execute_command(kg, sub);
    CHECK(ball.triplets.size() == 2);  // visualization sits 3 hops out
    for (const Triplet& t : ball.triplets) CHECK(t.head != "word distributions");

    GraphCommand unknown;
    unknown.kind = GraphCommand::Kind::neighbors;
    unknown.arg_a = "zzz";
    CommandOutput missing = execute_command(kg, unknown);
    CHECK(missing.unknown_entity);
    CHECK(missing.triplets.empty());
    CHECK(missing.text.find("no entity 'zzz' in the graph") != std::string::npos);
}

TEST_CASE("RELATION reports the stored edge or its absence") {
    KnowledgeGraph kg = chain_graph();
    GraphCommand cmd;
    cmd.kind = GraphCommand::Kind::relation;
    cmd.arg_a = "word distributions";
    cmd.arg_b = "reading comprehension";
    CommandOutput out = execute_command(kg, cmd);
    REQUIRE(out.triplets.size() == 1);
    CHECK(out.triplets[0].relation == RelationType::Conjunction);
    CHECK(out.text.find("Conjunction") != std::string::npos);

    cmd.arg_b = "t-sne";
    CommandOutput none = execute_command(kg, cmd);
    CHECK(none.triplets.empty());
    CHECK(none.text.find("no stored relation between 'word distributions' and 't-sne'") !=
          std::string::npos);
}

TEST_CASE("aliases resolve before command execution") {
    KnowledgeGraph kg(GraphRole::fused);
    kg.aliases().merge("nmt", "neural machine translation");
    kg.insert(make_triplet("neural machine translation", RelationType::UsedFor,
                           "translation"));
    GraphCommand cmd;
    cmd.kind = GraphCommand::Kind::neighbors;
    cmd.arg_a = "nmt";
    CommandOutput out = execute_command(kg, cmd);
    CHECK_FALSE(out.unknown_entity);
    REQUIRE(out.triplets.size() == 1);
    CHECK(out.triplets[0].head == "neural machine translation");
}

TEST_CASE("answers coerce to each task's shape") {
    auto backend = std::make_unique<MockBackend>();
    MockBackend* raw = backend.get();
    LlmClient llm(std::move(backend));

    SUBCASE("T1 booleans") {
        QaItem item = boolean_item("Does pretraining help?");
        script_answer(*raw, item, "ctx", "True, because transfer works.");
        QaAnswer ans = answer(llm, item, "ctx");
        CHECK(ans.boolean_value);
        CHECK_FALSE(ans.degraded);

        QaItem negative = boolean_item("Is this false?");
        script_answer(*raw, negative, "ctx", "Answer: FALSE");
        QaAnswer no = answer(llm, negative, "ctx");
        CHECK_FALSE(no.boolean_value);
        CHECK_FALSE(no.degraded);

        QaItem vague = boolean_item("Unsure?");
        script_answer(*raw, vague, "ctx", "It is hard to say.");
        CHECK(answer(llm, vague, "ctx").degraded);
    }

    SUBCASE("entity lists split, dedup and drop none") {
        QaItem item;
        item.task = QaTask::T2;
        item.question = "Which concepts should I learn?";
        item.gold.kind = QaGold::Kind::entity_list;
        script_answer(*raw, item, "ctx",
                      "1. Word Embeddings\n2. semantic parsing, word embeddings\nNone");
        QaAnswer ans = answer(llm, item, "ctx");
        CHECK(ans.entities ==
              std::vector<std::string>{"word embeddings", "semantic parsing"});
        CHECK_FALSE(ans.degraded);

        QaItem empty = item;
        empty.question = "Anything?";
        script_answer(*raw, empty, "ctx", "None.");
        QaAnswer none_ans = answer(llm, empty, "ctx");
        CHECK(none_ans.entities.empty());
        CHECK_FALSE(none_ans.degraded);
    }

    SUBCASE("T4 picks the earliest relation mention") {
        QaItem item;
        item.task = QaTask::T4;
        item.question = "What is the relationship?";
        item.gold.kind = QaGold::Kind::relation;
        item.gold.relation = RelationType::Conjunction;
        script_answer(*raw, item, "ctx", "They form a Conjunction relation.");
        QaAnswer ans = answer(llm, item, "ctx");
        REQUIRE(ans.relation.has_value());
        CHECK(*ans.relation == RelationType::Conjunction);

        QaItem snake = item;
        snake.question = "And between these two?";
        script_answer(*raw, snake, "ctx", "the answer is evaluate_for");
        QaAnswer snake_ans = answer(llm, snake, "ctx");
        REQUIRE(snake_ans.relation.has_value());
        CHECK(*snake_ans.relation == RelationType::EvaluateFor);

        QaItem spaced = item;
        spaced.question = "Then?";
        script_answer(*raw, spaced, "ctx", "B is a prerequisite of A? No: part of.");
        QaAnswer spaced_ans = answer(llm, spaced, "ctx");
        REQUIRE(spaced_ans.relation.has_value());
        CHECK(*spaced_ans.relation == RelationType::PrerequisiteOf);

        QaItem lost = item;
        lost.question = "Hmm?";
        script_answer(*raw, lost, "ctx", "no idea");
        QaAnswer lost_ans = answer(llm, lost, "ctx");
        CHECK_FALSE(lost_ans.relation.has_value());
        CHECK(lost_ans.degraded);
    }

    SUBCASE("T6 keeps trimmed free text") {
        QaItem item;
        item.task = QaTask::T6;
        item.question = "Propose an idea.";
        script_answer(*raw, item, "", "  Build a graph-grounded tutor.  ");
        QaAnswer ans = answer(llm, item, "");
        CHECK(ans.text == "Build a graph-grounded tutor.");
        CHECK_FALSE(ans.degraded);
    }
}

TEST_CASE("run_benchmark executes commands, answers and serializes") {
    KnowledgeGraph kg = chain_graph();
    QaItem item = boolean_item(
        "Do I need vector representations before t-sne?");

    auto backend = std::make_unique<MockBackend>();
    MockBackend* raw = backend.get();
    ChatRequest cmd_req = make_request(
        TemplateId::qa_command,
        {{"domain", "natural language processing"}, {"question", item.question}});
    raw->add_fixture(TemplateId::qa_command, bindings_digest(cmd_req.bindings),
                     "PATH(vector representations, t-sne)\nummm");
    LlmClient probe_llm(std::move(backend));

    // Let the library compute the context, then script the answer for it.
    GraphCommand cmd;
    cmd.kind = GraphCommand::Kind::path;
    cmd.arg_a = "vector representations";
    cmd.arg_b = "t-sne";
    std::string context = execute_command(kg, cmd).text;
    script_answer(*raw, item, context, "True");

    auto preds = run_benchmark({item}, kg, probe_llm, "natural language processing");
    REQUIRE(preds.size() == 1);
    const QaPrediction& pred = preds[0];
    CHECK(pred.index == 0);
    CHECK(pred.error.empty());
    CHECK(pred.commands == std::vector<std::string>{"PATH(vector representations, t-sne)"});
    CHECK(pred.command_skipped == std::vector<std::string>{"ummm"});
    CHECK(pred.context == context);
    REQUIRE(pred.paths.size() == 1);
    CHECK(pred.paths[0] ==
          std::vector<std::string>{"vector representations", "t-sne"});
    CHECK(pred.answer.boolean_value);
    CHECK_FALSE(pred.answer.degraded);

    nlohmann::json j = nlohmann::json::parse(qa_prediction_to_json(pred));
    CHECK(j["task"] == "T1");
    CHECK(j["gold"] == true);
    CHECK(j["answer"]["value"] == true);
    CHECK(j["answer"]["degraded"] == false);
    CHECK(j["paths"][0][1] == "t-sne");
    CHECK_FALSE(j.contains("error"));
}

TEST_CASE("run_benchmark records strict failures without aborting the batch") {
    KnowledgeGraph kg = chain_graph();
    QaItem item = boolean_item("Will this miss every fixture?");
    auto backend = std::make_unique<MockBackend>();
    backend->set_strict(true);
    LlmClient llm(std::move(backend));
    auto preds = run_benchmark({item}, kg, llm, "natural language processing");
    REQUIRE(preds.size() == 1);
    CHECK_FALSE(preds[0].error.empty());
    CHECK(preds[0].answer.degraded);
    nlohmann::json j = nlohmann::json::parse(qa_prediction_to_json(preds[0]));
    CHECK(j.contains("error"));
}
