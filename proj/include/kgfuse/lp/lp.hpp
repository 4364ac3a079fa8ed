#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgfuse/corpus/corpus.hpp"
#include "kgfuse/llm/gateway.hpp"

namespace kgfuse {

struct LpPair {
    std::string a;
    std::string b;
    int label = 0;  // 1 iff a is a prerequisite of b
};

struct LpDataset {
    std::string domain;
    std::string split;  // train | test
    std::vector<LpPair> pairs;
};

// TSV rows: entity_a<TAB>entity_b<TAB>label
LpDataset load_lp_dataset(const std::filesystem::path& path, const std::string& domain,
                          const std::string& split);

enum class LpVariant { plain, cot, doc, con, wiki };

std::string_view lp_variant_name(LpVariant v);
std::optional<LpVariant> parse_lp_variant(std::string_view name);

// con needs train; doc needs corpus; wiki needs the paragraph store.
struct LpAttachments {
    const Corpus* corpus = nullptr;
    const LpDataset* train = nullptr;
    const std::map<std::string, std::string>* wiki = nullptr;
    std::size_t max_docs = 3;
    std::size_t max_chars = 2000;
};

// JSON object file {entity: paragraph}; keys normalized on load.
std::map<std::string, std::string> load_wiki_store(const std::filesystem::path& path);

// cot=false: first standalone YES/NO token decides. cot=true: content of the
// first <result>...</result> tag. Throws LpParseError when undecidable.
bool parse_yes_no(std::string_view text, bool cot);

ChatRequest make_lp_request(LpVariant variant, const std::string& domain,
                            const std::string& a, const std::string& b,
                            const LpAttachments& attachments,
                            const ChatParams& params = {});

// true means (a, PrerequisiteOf, b), per the prompt's direction hint.
bool predict_pair(LlmClient& llm, LpVariant variant, const std::string& domain,
                  const std::string& a, const std::string& b,
                  const LpAttachments& attachments, const ChatParams& params = {});

struct LpMetrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    int tp = 0, fp = 0, tn = 0, fn = 0;
    int parse_errors = 0;
    int total = 0;
};

// predictions[i] == nullopt marks a parse error. strict mode scores those as
// the wrong class; otherwise they are excluded from the denominator.
LpMetrics evaluate_lp(const LpDataset& dataset,
                      const std::vector<std::optional<bool>>& predictions,
                      bool strict = true);

std::string lp_metrics_to_json(const LpMetrics& metrics, const LpDataset& dataset,
                               LpVariant variant);

}  // namespace kgfuse
