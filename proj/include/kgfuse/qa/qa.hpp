#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgfuse/graph/graph.hpp"
#include "kgfuse/llm/gateway.hpp"

namespace kgfuse {

enum class QaTask { T1, T2, T3, T4, T5, T6 };

std::string_view qa_task_name(QaTask t);
std::optional<QaTask> parse_qa_task(std::string_view name);

struct QaGold {
    enum class Kind { boolean, entity_list, relation, free_text, none };
    Kind kind = Kind::none;
    bool boolean_value = false;
    std::vector<std::string> entities;
    RelationType relation = RelationType::UsedFor;
    std::string text;
};

struct QaItem {
    QaTask task = QaTask::T1;
    std::string question;
    QaGold gold;
};

// JSONL {task, question, gold}; gold typed per task (T1 boolean, T2/T3/T5
// entity arrays, T4 relation string, T6 free text or absent).
std::vector<QaItem> load_qa_items(const std::filesystem::path& path);

struct GraphCommand {
    enum class Kind { neighbors, path, subgraph, relation };
    Kind kind = Kind::neighbors;
    std::string arg_a;
    std::string arg_b;  // path/relation only
    int depth = 1;      // neighbors/subgraph only
};

std::optional<GraphCommand> parse_command(std::string_view line);
std::string print_command(const GraphCommand& cmd);

struct CommandParse {
    std::vector<GraphCommand> commands;
    std::vector<std::string> skipped;  // unparseable lines
};

CommandParse parse_commands(std::string_view text);

std::vector<GraphCommand> generate_commands(LlmClient& llm, const std::string& domain,
                                            const std::string& question,
                                            CommandParse* diagnostics = nullptr,
                                            const ChatParams& params = {});

struct CommandOutput {
    std::string text;  // one triplet per line, plus notes
    std::vector<Triplet> triplets;
    std::vector<std::string> path;  // entity sequence for PATH
    bool unknown_entity = false;
};

// directed restricts PATH search to PrerequisiteOf edges head->tail;
// otherwise edges are walked both ways.
CommandOutput execute_command(const KnowledgeGraph& kg, const GraphCommand& cmd,
                              bool directed = false);

struct QaAnswer {
    QaTask task = QaTask::T1;
    bool boolean_value = false;
    std::vector<std::string> entities;
    std::optional<RelationType> relation;
    std::string text;
    bool degraded = false;
};

QaAnswer answer(LlmClient& llm, const QaItem& item, const std::string& context_block,
                const ChatParams& params = {});

struct QaPrediction {
    std::size_t index = 0;
    QaItem item;
    QaAnswer answer;
    std::vector<std::string> commands;  // printed form
    std::vector<std::string> command_skipped;
    std::string context;
    std::vector<std::vector<std::string>> paths;  // entity sequences from PATH
    std::string error;
};

std::vector<QaPrediction> run_benchmark(const std::vector<QaItem>& items,
                                        const KnowledgeGraph& kg, LlmClient& llm,
                                        const std::string& domain, bool directed = false,
                                        int parallelism = 1,
                                        const ChatParams& params = {});

std::string qa_prediction_to_json(const QaPrediction& prediction);

}  // namespace kgfuse
