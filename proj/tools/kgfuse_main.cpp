#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kgfuse/corpus/corpus.hpp"
#include "kgfuse/extract/extractor.hpp"
#include "kgfuse/fusion/fusion.hpp"
#include "kgfuse/graph/graph.hpp"
#include "kgfuse/llm/gateway.hpp"
#include "kgfuse/lp/lp.hpp"
#include "kgfuse/metrics/embedding.hpp"
#include "kgfuse/metrics/metrics.hpp"
#include "kgfuse/qa/qa.hpp"
#include "kgfuse/seeds/seed_miner.hpp"
#include "kgfuse/util/error.hpp"
#include "kgfuse/util/hash.hpp"
#include "kgfuse/util/io.hpp"
#include "vendor/CLI11.hpp"
#include "vendor/json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace kgfuse::cli {

constexpr int kExitOk = 0;
constexpr int kExitHard = 1;
constexpr int kExitPartial = 2;

struct RunConfig {
    fs::path corpus;
    CorpusFormat corpus_format = CorpusFormat::jsonl;
    fs::path out = "out";
    bool deterministic = true;
    std::string domain = "natural language processing";
    BackendConfig backend;
    ChatParams params;
    SeedConfig seed;
    FusionPolicy fusion;
    std::size_t extract_max_docs = 5;
    std::size_t extract_max_chars = 4000;
    std::size_t fusion_max_docs = 3;
    std::size_t fusion_max_chars = 2000;
    int parallelism = 1;
    fs::path expert_graph;
    std::vector<std::string> extra_entities;
};

struct Flags {
    std::optional<std::string> config, out, corpus, corpus_format, fixtures, endpoint;
    std::optional<std::string> backend_kind, domain, expert;
    std::optional<bool> deterministic, strict_fixtures;
    std::optional<int> parallelism;
    bool force = false;
    // lp
    std::optional<std::string> dataset, train, wiki, variant;
    bool lenient_scoring = false;
    // qa
    std::optional<std::string> questions, kg, task;
    bool directed = false;
    // eval
    std::optional<std::string> predictions, ratings;
    bool x100 = false;
    int embed_dim = 256;
    std::uint64_t embed_seed = 42;
};

// ---------------------------------------------------------------------------
// config loading

void expect_keys(const json& j, const std::set<std::string>& known, const std::string& where,
                 std::vector<std::string>& errors) {
    for (const auto& [key, value] : j.items())
        if (!known.count(key)) errors.push_back(where + ": unknown key '" + key + "'");
}

void merge_config_json(RunConfig& rc, const json& j, std::vector<std::string>& errors) {
    if (!j.is_object()) {
        errors.push_back("config root must be a JSON object");
        return;
    }
    expect_keys(j,
                {"version", "corpus", "corpus_format", "out", "deterministic", "domain", "backend",
                 "seed", "fusion", "budgets", "expert_graph", "extra_entities"},
                "config", errors);
    if (!j.contains("version") || j["version"] != 1) {
        errors.push_back("config: missing or unsupported \"version\" (expected 1)");
    }
    auto get_str = [&](const json& obj, const char* key, const std::string& where,
                       auto&& assign) {
        if (!obj.contains(key)) return;
        if (!obj[key].is_string()) {
            errors.push_back(where + ": '" + key + "' must be a string");
            return;
        }
        assign(obj[key].template get<std::string>());
    };
    auto get_bool = [&](const json& obj, const char* key, const std::string& where,
                        auto&& assign) {
        if (!obj.contains(key)) return;
        if (!obj[key].is_boolean()) {
            errors.push_back(where + ": '" + key + "' must be a boolean");
            return;
        }
        assign(obj[key].template get<bool>());
    };
    auto get_num = [&](const json& obj, const char* key, const std::string& where,
                       auto&& assign) {
        if (!obj.contains(key)) return;
        if (!obj[key].is_number()) {
            errors.push_back(where + ": '" + key + "' must be a number");
            return;
        }
        assign(obj[key]);
    };

    get_str(j, "corpus", "config", [&](const std::string& v) { rc.corpus = v; });
    get_str(j, "corpus_format", "config", [&](const std::string& v) {
        if (auto f = parse_corpus_format(v))
            rc.corpus_format = *f;
        else
            errors.push_back("config: unknown corpus_format '" + v + "'");
    });
    get_str(j, "out", "config", [&](const std::string& v) { rc.out = v; });
    get_bool(j, "deterministic", "config", [&](bool v) { rc.deterministic = v; });
    get_str(j, "domain", "config", [&](const std::string& v) { rc.domain = v; });
    get_str(j, "expert_graph", "config", [&](const std::string& v) { rc.expert_graph = v; });
    if (j.contains("extra_entities")) {
        if (!j["extra_entities"].is_array())
            errors.push_back("config: 'extra_entities' must be an array of strings");
        else
            for (const auto& e : j["extra_entities"]) {
                if (!e.is_string())
                    errors.push_back("config: 'extra_entities' must be an array of strings");
                else
                    rc.extra_entities.push_back(e.get<std::string>());
            }
    }

    if (j.contains("backend")) {
        const json& b = j["backend"];
        if (!b.is_object()) {
            errors.push_back("config.backend must be an object");
        } else {
            expect_keys(b,
                        {"kind", "fixtures", "strict_fixtures", "endpoint", "auth_env", "model",
                         "temperature", "max_tokens", "max_attempts", "backoff_ms",
                         "parallelism_cap"},
                        "config.backend", errors);
            get_str(b, "kind", "config.backend", [&](const std::string& v) {
                if (v == "mock")
                    rc.backend.kind = BackendKind::mock;
                else if (v == "http")
                    rc.backend.kind = BackendKind::http_chat;
                else
                    errors.push_back("config.backend: unknown kind '" + v + "' (mock|http)");
            });
            get_str(b, "fixtures", "config.backend",
                    [&](const std::string& v) { rc.backend.fixtures_path = v; });
            get_bool(b, "strict_fixtures", "config.backend",
                     [&](bool v) { rc.backend.strict_fixtures = v; });
            get_str(b, "endpoint", "config.backend",
                    [&](const std::string& v) { rc.backend.endpoint = v; });
            get_str(b, "auth_env", "config.backend",
                    [&](const std::string& v) { rc.backend.auth_env = v; });
            get_str(b, "model", "config.backend",
                    [&](const std::string& v) { rc.params.model_name = v; });
            get_num(b, "temperature", "config.backend",
                    [&](const json& v) { rc.params.temperature = v.get<double>(); });
            get_num(b, "max_tokens", "config.backend",
                    [&](const json& v) { rc.params.max_tokens = v.get<int>(); });
            get_num(b, "max_attempts", "config.backend",
                    [&](const json& v) { rc.backend.retry.max_attempts = v.get<int>(); });
            if (b.contains("backoff_ms")) {
                if (!b["backoff_ms"].is_array())
                    errors.push_back("config.backend: 'backoff_ms' must be an array");
                else {
                    rc.backend.retry.backoff_ms.clear();
                    for (const auto& ms : b["backoff_ms"]) {
                        if (!ms.is_number_integer())
                            errors.push_back("config.backend: backoff_ms entries must be integers");
                        else
                            rc.backend.retry.backoff_ms.push_back(ms.get<int>());
                    }
                }
            }
            get_num(b, "parallelism_cap", "config.backend",
                    [&](const json& v) { rc.backend.parallelism_cap = v.get<int>(); });
        }
    }

    if (j.contains("seed")) {
        const json& s = j["seed"];
        if (!s.is_object()) {
            errors.push_back("config.seed must be an object");
        } else {
            expect_keys(s,
                        {"n_clusters", "terms_per_cluster", "min_term_len", "ngram_lo", "ngram_hi",
                         "min_corpus_frequency", "max_iterations", "rng_seed", "stopwords",
                         "drop_subsumed"},
                        "config.seed", errors);
            get_num(s, "n_clusters", "config.seed",
                    [&](const json& v) { rc.seed.n_clusters = v.get<int>(); });
            get_num(s, "terms_per_cluster", "config.seed",
                    [&](const json& v) { rc.seed.terms_per_cluster = v.get<int>(); });
            get_num(s, "min_term_len", "config.seed",
                    [&](const json& v) { rc.seed.min_term_len = v.get<int>(); });
            get_num(s, "ngram_lo", "config.seed",
                    [&](const json& v) { rc.seed.ngram_lo = v.get<int>(); });
            get_num(s, "ngram_hi", "config.seed",
                    [&](const json& v) { rc.seed.ngram_hi = v.get<int>(); });
            get_num(s, "min_corpus_frequency", "config.seed",
                    [&](const json& v) { rc.seed.min_corpus_frequency = v.get<int>(); });
            get_num(s, "max_iterations", "config.seed",
                    [&](const json& v) { rc.seed.max_iterations = v.get<int>(); });
            get_num(s, "rng_seed", "config.seed",
                    [&](const json& v) { rc.seed.rng_seed = v.get<std::uint64_t>(); });
            get_bool(s, "drop_subsumed", "config.seed",
                     [&](bool v) { rc.seed.drop_subsumed = v; });
            if (s.contains("stopwords")) {
                if (!s["stopwords"].is_array())
                    errors.push_back("config.seed: 'stopwords' must be an array of strings");
                else
                    for (const auto& w : s["stopwords"]) {
                        if (!w.is_string())
                            errors.push_back("config.seed: 'stopwords' must be an array of strings");
                        else
                            rc.seed.stopwords.insert(w.get<std::string>());
                    }
            }
        }
    }

    if (j.contains("fusion")) {
        const json& f = j["fusion"];
        if (!f.is_object()) {
            errors.push_back("config.fusion must be an object");
        } else {
            expect_keys(f,
                        {"conflict_fallback", "relation_priority", "alias_canonical_rule",
                         "expert_wins_conflicts"},
                        "config.fusion", errors);
            get_str(f, "conflict_fallback", "config.fusion", [&](const std::string& v) {
                if (auto mode = parse_conflict_fallback(v))
                    rc.fusion.conflict_fallback = *mode;
                else
                    errors.push_back("config.fusion: unknown conflict_fallback '" + v + "'");
            });
            get_str(f, "alias_canonical_rule", "config.fusion", [&](const std::string& v) {
                if (auto rule = parse_alias_rule(v))
                    rc.fusion.alias_canonical_rule = *rule;
                else
                    errors.push_back("config.fusion: unknown alias_canonical_rule '" + v + "'");
            });
            get_bool(f, "expert_wins_conflicts", "config.fusion",
                     [&](bool v) { rc.fusion.expert_wins_conflicts = v; });
            if (f.contains("relation_priority")) {
                if (!f["relation_priority"].is_array() || f["relation_priority"].size() != 7) {
                    errors.push_back(
                        "config.fusion: 'relation_priority' must list all 7 relations");
                } else {
                    std::array<RelationType, 7> order{};
                    bool ok = true;
                    for (std::size_t i = 0; i < 7; ++i) {
                        const json& r = f["relation_priority"][i];
                        auto rel = r.is_string() ? parse_relation(r.get<std::string>())
                                                 : std::nullopt;
                        if (!rel) {
                            errors.push_back("config.fusion: bad relation_priority entry " +
                                             r.dump());
                            ok = false;
                            break;
                        }
                        order[i] = *rel;
                    }
                    if (ok) rc.fusion.relation_priority = order;
                }
            }
        }
    }

    if (j.contains("budgets")) {
        const json& b = j["budgets"];
        if (!b.is_object()) {
            errors.push_back("config.budgets must be an object");
        } else {
            expect_keys(b,
                        {"extract_max_docs", "extract_max_chars", "fusion_max_docs",
                         "fusion_max_chars", "parallelism"},
                        "config.budgets", errors);
            get_num(b, "extract_max_docs", "config.budgets",
                    [&](const json& v) { rc.extract_max_docs = v.get<std::size_t>(); });
            get_num(b, "extract_max_chars", "config.budgets",
                    [&](const json& v) { rc.extract_max_chars = v.get<std::size_t>(); });
            get_num(b, "fusion_max_docs", "config.budgets",
                    [&](const json& v) { rc.fusion_max_docs = v.get<std::size_t>(); });
            get_num(b, "fusion_max_chars", "config.budgets",
                    [&](const json& v) { rc.fusion_max_chars = v.get<std::size_t>(); });
            get_num(b, "parallelism", "config.budgets",
                    [&](const json& v) { rc.parallelism = v.get<int>(); });
        }
    }
}

// Precedence: built-in defaults, then the config file, then flags.
RunConfig build_run_config(const Flags& flags, bool needs_backend) {
    RunConfig rc;
    std::vector<std::string> errors;
    if (flags.config) {
        fs::path path = *flags.config;
        if (!fs::exists(path)) throw ConfigError("config file not found at " + path.string());
        json j = json::parse(read_file(path), nullptr, false);
        if (j.is_discarded()) throw ConfigError("config file is not valid JSON: " + path.string());
        merge_config_json(rc, j, errors);
    }
    if (flags.out) rc.out = *flags.out;
    if (flags.corpus) rc.corpus = *flags.corpus;
    if (flags.corpus_format) {
        if (auto f = parse_corpus_format(*flags.corpus_format))
            rc.corpus_format = *f;
        else
            errors.push_back("unknown --corpus-format '" + *flags.corpus_format + "'");
    }
    if (flags.deterministic) rc.deterministic = *flags.deterministic;
    if (flags.domain) rc.domain = *flags.domain;
    if (flags.expert) rc.expert_graph = *flags.expert;
    if (flags.fixtures) rc.backend.fixtures_path = *flags.fixtures;
    if (flags.strict_fixtures) rc.backend.strict_fixtures = *flags.strict_fixtures;
    if (flags.endpoint) rc.backend.endpoint = *flags.endpoint;
    if (flags.backend_kind) {
        if (*flags.backend_kind == "mock")
            rc.backend.kind = BackendKind::mock;
        else if (*flags.backend_kind == "http")
            rc.backend.kind = BackendKind::http_chat;
        else
            errors.push_back("unknown --backend '" + *flags.backend_kind + "' (mock|http)");
    }
    if (flags.parallelism) rc.parallelism = *flags.parallelism;

    rc.backend.deterministic_mode = rc.deterministic;

    if (needs_backend) {
        try {
            rc.backend.validate();
        } catch (const ConfigError& e) {
            errors.push_back(e.what());
        }
    }
    try {
        rc.seed.validate();
    } catch (const ConfigError& e) {
        errors.push_back(e.what());
    }
    try {
        rc.fusion.validate();
    } catch (const ConfigError& e) {
        errors.push_back(e.what());
    }
    if (rc.parallelism < 1) errors.push_back("budgets.parallelism must be >= 1");
    if (rc.backend.kind == BackendKind::mock && !rc.backend.fixtures_path.empty() &&
        !fs::exists(rc.backend.fixtures_path))
        errors.push_back("fixtures file not found at " + rc.backend.fixtures_path.string());
    if (!rc.expert_graph.empty() && !fs::exists(rc.expert_graph))
        errors.push_back("expert graph not found at " + rc.expert_graph.string());
    if (!errors.empty()) {
        std::string all = "invalid configuration:";
        for (const auto& e : errors) all += "\n  - " + e;
        throw ConfigError(all);
    }
    return rc;
}

int effective_workers(const RunConfig& rc) {
    return std::min(rc.parallelism, std::max(1, rc.backend.parallelism_cap));
}

// ---------------------------------------------------------------------------
// manifest and resumability

json load_manifest(const fs::path& out) {
    fs::path path = out / "manifest.json";
    if (!fs::exists(path)) return json{{"version", 1}, {"stages", json::object()}};
    json j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_object()) return json{{"version", 1}, {"stages", json::object()}};
    if (!j.contains("stages") || !j["stages"].is_object()) j["stages"] = json::object();
    return j;
}

void save_manifest(const fs::path& out, const json& manifest) {
    write_file(out / "manifest.json", manifest.dump(2) + "\n");
}

std::string file_hash(const fs::path& path) { return hex_digest(read_file(path)); }

bool stage_current(const json& manifest, const fs::path& out, const std::string& stage,
                   const std::string& inputs_hash) {
    const json& stages = manifest["stages"];
    if (!stages.contains(stage)) return false;
    const json& entry = stages[stage];
    if (!entry.contains("inputs") || entry["inputs"] != inputs_hash) return false;
    if (!entry.contains("outputs") || !entry["outputs"].is_object()) return false;
    for (const auto& [rel, hash] : entry["outputs"].items()) {
        fs::path p = out / rel;
        if (!fs::exists(p) || file_hash(p) != hash.get<std::string>()) return false;
    }
    return true;
}

void record_stage(json& manifest, const fs::path& out, const std::string& stage,
                  const std::string& inputs_hash, const std::vector<fs::path>& outputs) {
    json entry;
    entry["inputs"] = inputs_hash;
    json outs = json::object();
    for (const auto& rel : outputs)
        if (fs::exists(out / rel)) outs[rel.generic_string()] = file_hash(out / rel);
    entry["outputs"] = outs;
    manifest["stages"][stage] = entry;
    save_manifest(out, manifest);
}

json backend_fingerprint(const RunConfig& rc) {
    json b;
    b["kind"] = rc.backend.kind == BackendKind::mock ? "mock" : "http";
    b["fixtures"] = rc.backend.fixtures_path.generic_string();
    if (!rc.backend.fixtures_path.empty() && fs::exists(rc.backend.fixtures_path))
        b["fixtures_hash"] = file_hash(rc.backend.fixtures_path);
    b["strict_fixtures"] = rc.backend.strict_fixtures;
    b["endpoint"] = rc.backend.endpoint;
    b["deterministic"] = rc.deterministic;
    b["model"] = rc.params.model_name;
    b["temperature"] = rc.params.temperature;
    b["max_tokens"] = rc.params.max_tokens;
    return b;
}

LlmClient make_client(const RunConfig& rc) {
    LlmClient client = LlmClient::from_config(rc.backend);
    client.set_audit_log(std::make_shared<AuditLog>(rc.out / "audit.jsonl"));
    return client;
}

void require_input(const fs::path& path, const std::string& what) {
    if (!fs::exists(path)) throw Error(what + " not found at " + path.string());
}

// ---------------------------------------------------------------------------
// stages

int stage_ingest(const RunConfig& rc, bool force) {
    if (rc.corpus.empty()) throw ConfigError("no corpus path configured (set config \"corpus\" or --corpus)");
    require_input(rc.corpus, "corpus file");
    json manifest = load_manifest(rc.out);
    std::string inputs = hex_digest(std::string{"ingest|"} +
                                    std::string{corpus_format_name(rc.corpus_format)} + "|" +
                                    read_file(rc.corpus));
    if (!force && stage_current(manifest, rc.out, "ingest", inputs)) {
        std::cout << "ingest: up to date, skipping\n";
        return kExitOk;
    }
    IngestReport report;
    Corpus corpus = ingest_corpus(rc.corpus, rc.corpus_format, &report);
    save_corpus(corpus, rc.out / "corpus.json");
    json r;
    r["ingested"] = report.ingested;
    r["skipped"] = report.skipped;
    r["reasons"] = report.reasons;
    write_file(rc.out / "reports" / "ingest.json", r.dump(2) + "\n");
    record_stage(manifest, rc.out, "ingest", inputs, {"corpus.json", "reports/ingest.json"});
    std::cout << "ingest: " << report.ingested << " documents (" << report.skipped
              << " skipped) -> " << (rc.out / "corpus.json").string() << "\n";
    return kExitOk;
}

json seed_fingerprint(const SeedConfig& s) {
    json j;
    j["n_clusters"] = s.n_clusters;
    j["terms_per_cluster"] = s.terms_per_cluster;
    j["min_term_len"] = s.min_term_len;
    j["ngram_lo"] = s.ngram_lo;
    j["ngram_hi"] = s.ngram_hi;
    j["min_corpus_frequency"] = s.min_corpus_frequency;
    j["max_iterations"] = s.max_iterations;
    j["rng_seed"] = s.rng_seed;
    j["stopwords"] = s.stopwords;
    j["drop_subsumed"] = s.drop_subsumed;
    return j;
}

int stage_seeds(const RunConfig& rc, bool force) {
    fs::path corpus_path = rc.out / "corpus.json";
    require_input(corpus_path, "corpus store (run ingest first)");
    json manifest = load_manifest(rc.out);
    std::string inputs =
        hex_digest("seeds|" + seed_fingerprint(rc.seed).dump() + "|" + read_file(corpus_path));
    if (!force && stage_current(manifest, rc.out, "seeds", inputs)) {
        std::cout << "seeds: up to date, skipping\n";
        return kExitOk;
    }
    Corpus corpus = load_corpus(corpus_path);
    SeedList seeds = generate_seed_entities(corpus, rc.seed);
    write_file(rc.out / "seeds.txt", seed_list_to_text(seeds));
    write_file(rc.out / "seeds.tsv", seed_list_to_tsv(seeds));
    std::set<int> clusters;
    for (const auto& [entity, prov] : seeds.provenance) clusters.insert(prov.cluster_id);
    json r;
    r["entities"] = seeds.entities.size();
    r["clusters_used"] = clusters.size();
    write_file(rc.out / "reports" / "seeds.json", r.dump(2) + "\n");
    record_stage(manifest, rc.out, "seeds", inputs,
                 {"seeds.txt", "seeds.tsv", "reports/seeds.json"});
    std::cout << "seeds: " << seeds.entities.size() << " entities from " << clusters.size()
              << " clusters -> " << (rc.out / "seeds.txt").string() << "\n";
    return kExitOk;
}

int stage_extract(const RunConfig& rc, bool force) {
    fs::path corpus_path = rc.out / "corpus.json";
    fs::path seeds_path = rc.out / "seeds.txt";
    require_input(corpus_path, "corpus store (run ingest first)");
    require_input(seeds_path, "seed list (run seeds first)");
    json manifest = load_manifest(rc.out);
    json fp = backend_fingerprint(rc);
    fp["max_docs"] = rc.extract_max_docs;
    fp["max_chars"] = rc.extract_max_chars;
    std::string inputs = hex_digest("extract|" + fp.dump() + "|" + read_file(corpus_path) + "|" +
                                    read_file(seeds_path));
    if (!force && stage_current(manifest, rc.out, "extract", inputs)) {
        std::cout << "extract: up to date, skipping\n";
        return kExitOk;
    }
    Corpus corpus = load_corpus(corpus_path);
    std::vector<std::string> seeds;
    for (const auto& line : read_lines(seeds_path))
        if (!line.empty()) seeds.push_back(line);
    LlmClient client = make_client(rc);
    ExtractionConfig config;
    config.max_docs = rc.extract_max_docs;
    config.max_chars = rc.extract_max_chars;
    config.params = rc.params;
    config.parallelism = effective_workers(rc);
    CandidateBuildResult result = build_candidate_graph(seeds, corpus, client, config);
    save_graph(result.graph, rc.out / "candidate.tsv");
    std::string reports;
    for (const auto& report : result.reports) reports += extraction_report_to_json(report) + "\n";
    write_file(rc.out / "extraction_reports.jsonl", reports);
    json r;
    r["entities"] = seeds.size();
    r["triplets"] = result.graph.size();
    json fails = json::array();
    for (const auto& [entity, reason] : result.failures)
        fails.push_back({{"entity", entity}, {"reason", reason}});
    r["failures"] = fails;
    write_file(rc.out / "reports" / "extract.json", r.dump(2) + "\n");
    record_stage(manifest, rc.out, "extract", inputs,
                 {"candidate.tsv", "extraction_reports.jsonl", "reports/extract.json"});
    std::cout << "extract: " << result.graph.size() << " triplets from " << seeds.size()
              << " entities (" << result.failures.size() << " failures) -> "
              << (rc.out / "candidate.tsv").string() << "\n";
    return result.failures.empty() ? kExitOk : kExitPartial;
}

json fusion_fingerprint(const FusionPolicy& p) {
    json j;
    j["conflict_fallback"] = std::string{conflict_fallback_name(p.conflict_fallback)};
    std::vector<std::string> prio;
    for (RelationType r : p.relation_priority) prio.emplace_back(storage_name(r));
    j["relation_priority"] = prio;
    j["alias_canonical_rule"] = std::string{alias_rule_name(p.alias_canonical_rule)};
    j["expert_wins_conflicts"] = p.expert_wins_conflicts;
    return j;
}

int stage_fuse(const RunConfig& rc, bool force) {
    fs::path corpus_path = rc.out / "corpus.json";
    fs::path candidate_path = rc.out / "candidate.tsv";
    require_input(corpus_path, "corpus store (run ingest first)");
    require_input(candidate_path, "candidate graph");
    json manifest = load_manifest(rc.out);
    json fp = backend_fingerprint(rc);
    fp["policy"] = fusion_fingerprint(rc.fusion);
    fp["max_docs"] = rc.fusion_max_docs;
    fp["max_chars"] = rc.fusion_max_chars;
    fp["extra_entities"] = rc.extra_entities;
    std::string expert_blob =
        rc.expert_graph.empty() ? std::string{} : read_file(rc.expert_graph);
    std::string inputs = hex_digest("fuse|" + fp.dump() + "|" + read_file(corpus_path) + "|" +
                                    read_file(candidate_path) + "|" + expert_blob);
    if (!force && stage_current(manifest, rc.out, "fuse", inputs)) {
        std::cout << "fuse: up to date, skipping\n";
        return kExitOk;
    }
    Corpus corpus = load_corpus(corpus_path);
    KnowledgeGraph candidate = load_graph(candidate_path);
    std::optional<KnowledgeGraph> expert;
    if (!rc.expert_graph.empty()) expert = load_graph(rc.expert_graph);
    LlmClient client = make_client(rc);
    FusionConfig config;
    config.max_docs = rc.fusion_max_docs;
    config.max_chars = rc.fusion_max_chars;
    config.params = rc.params;
    config.parallelism = effective_workers(rc);
    FuseAllResult result = fuse_all(candidate, expert ? &*expert : nullptr, corpus, client,
                                    rc.fusion, config, rc.extra_entities);
    save_graph(result.graph, rc.out / "fused.tsv");
    std::string results;
    for (const auto& fr : result.results) results += fusion_result_to_json(fr) + "\n";
    write_file(rc.out / "fusion_results.jsonl", results);
    json r;
    r["triplets"] = result.graph.size();
    r["entities"] = result.graph.entities().size();
    r["alias_classes"] = result.graph.aliases().class_count();
    json fails = json::array();
    for (const auto& [entity, reason] : result.failures)
        fails.push_back({{"entity", entity}, {"reason", reason}});
    r["failures"] = fails;
    write_file(rc.out / "reports" / "fuse.json", r.dump(2) + "\n");
    std::vector<fs::path> outputs = {"fused.tsv", "fusion_results.jsonl", "reports/fuse.json"};
    fs::path sidecar = alias_sidecar_path(rc.out / "fused.tsv");
    if (fs::exists(sidecar)) outputs.push_back(sidecar.filename());
    record_stage(manifest, rc.out, "fuse", inputs, outputs);
    std::cout << "fuse: " << result.graph.size() << " triplets, "
              << result.graph.aliases().class_count() << " alias classes ("
              << result.failures.size() << " failures) -> " << (rc.out / "fused.tsv").string()
              << "\n";
    return result.failures.empty() ? kExitOk : kExitPartial;
}

int stage_lp(const RunConfig& rc, const Flags& flags, bool force) {
    if (!flags.dataset) throw ConfigError("lp requires --dataset");
    fs::path dataset_path = *flags.dataset;
    require_input(dataset_path, "lp dataset");
    LpVariant variant = LpVariant::plain;
    if (flags.variant) {
        auto v = parse_lp_variant(*flags.variant);
        if (!v) throw ConfigError("unknown lp variant '" + *flags.variant + "'");
        variant = *v;
    }
    json manifest = load_manifest(rc.out);
    json fp = backend_fingerprint(rc);
    fp["variant"] = std::string{lp_variant_name(variant)};
    fp["domain"] = rc.domain;
    fp["strict"] = !flags.lenient_scoring;
    std::string extra;
    if (flags.train) extra += read_file(*flags.train);
    if (flags.wiki) extra += read_file(*flags.wiki);
    std::string inputs = hex_digest("lp|" + fp.dump() + "|" + read_file(dataset_path) + "|" + extra);
    if (!force && stage_current(manifest, rc.out, "lp", inputs)) {
        std::cout << "lp: up to date, skipping\n";
        return kExitOk;
    }

    LpDataset dataset = load_lp_dataset(dataset_path, rc.domain, "test");
    LpDataset train;
    Corpus corpus;
    std::map<std::string, std::string> wiki;
    LpAttachments attachments;
    attachments.max_docs = rc.extract_max_docs;
    attachments.max_chars = rc.extract_max_chars;
    if (flags.train) {
        require_input(*flags.train, "lp train split");
        train = load_lp_dataset(*flags.train, rc.domain, "train");
        attachments.train = &train;
    }
    if (flags.wiki) {
        require_input(*flags.wiki, "wiki paragraph store");
        wiki = load_wiki_store(*flags.wiki);
        attachments.wiki = &wiki;
    }
    if (variant == LpVariant::doc) {
        require_input(rc.out / "corpus.json", "corpus store (run ingest first)");
        corpus = load_corpus(rc.out / "corpus.json");
        attachments.corpus = &corpus;
    }

    LlmClient client = make_client(rc);
    std::vector<std::optional<bool>> predictions(dataset.pairs.size());
    std::vector<std::pair<std::string, std::string>> failures;
    for (std::size_t i = 0; i < dataset.pairs.size(); ++i) {
        const LpPair& pair = dataset.pairs[i];
        try {
            predictions[i] =
                predict_pair(client, variant, rc.domain, pair.a, pair.b, attachments, rc.params);
        } catch (const LpParseError&) {
            predictions[i] = std::nullopt;
        } catch (const TransportError& e) {
            predictions[i] = std::nullopt;
            failures.push_back({pair.a + " | " + pair.b, e.what()});
        }
    }
    LpMetrics metrics = evaluate_lp(dataset, predictions, !flags.lenient_scoring);

    std::string tsv = "# entity_a\tentity_b\tlabel\tprediction\n";
    for (std::size_t i = 0; i < dataset.pairs.size(); ++i) {
        const LpPair& pair = dataset.pairs[i];
        tsv += pair.a + "\t" + pair.b + "\t" + std::to_string(pair.label) + "\t";
        tsv += predictions[i] ? (*predictions[i] ? "1" : "0") : "-";
        tsv += "\n";
    }
    write_file(rc.out / "lp_predictions.tsv", tsv);
    json r = json::parse(lp_metrics_to_json(metrics, dataset, variant));
    json fails = json::array();
    for (const auto& [pair, reason] : failures)
        fails.push_back({{"pair", pair}, {"reason", reason}});
    r["failures"] = fails;
    write_file(rc.out / "reports" / "lp.json", r.dump(2) + "\n");
    record_stage(manifest, rc.out, "lp", inputs, {"lp_predictions.tsv", "reports/lp.json"});
    std::cout << "lp[" << lp_variant_name(variant) << "]: accuracy "
              << metrics.accuracy << ", f1 " << metrics.f1 << " over " << metrics.total
              << " pairs (" << metrics.parse_errors << " parse errors) -> "
              << (rc.out / "lp_predictions.tsv").string() << "\n";
    return failures.empty() ? kExitOk : kExitPartial;
}

int stage_qa(const RunConfig& rc, const Flags& flags, bool force) {
    if (!flags.questions) throw ConfigError("qa requires --questions");
    fs::path questions_path = *flags.questions;
    require_input(questions_path, "qa questions");
    fs::path kg_path = flags.kg ? fs::path{*flags.kg} : rc.out / "fused.tsv";
    require_input(kg_path, "fused graph");
    json manifest = load_manifest(rc.out);
    json fp = backend_fingerprint(rc);
    fp["directed"] = flags.directed;
    fp["domain"] = rc.domain;
    fp["task"] = flags.task ? *flags.task : "";
    std::string inputs = hex_digest("qa|" + fp.dump() + "|" + read_file(questions_path) + "|" +
                                    read_file(kg_path));
    if (!force && stage_current(manifest, rc.out, "qa", inputs)) {
        std::cout << "qa: up to date, skipping\n";
        return kExitOk;
    }

    std::vector<QaItem> items = load_qa_items(questions_path);
    if (flags.task) {
        auto task = parse_qa_task(*flags.task);
        if (!task) throw ConfigError("unknown task '" + *flags.task + "' (T1..T6)");
        std::vector<QaItem> filtered;
        for (auto& item : items)
            if (item.task == *task) filtered.push_back(std::move(item));
        items = std::move(filtered);
    }
    KnowledgeGraph kg = load_graph(kg_path);
    LlmClient client = make_client(rc);
    std::vector<QaPrediction> predictions = run_benchmark(items, kg, client, rc.domain,
                                                          flags.directed, effective_workers(rc),
                                                          rc.params);
    std::string out_lines;
    std::size_t degraded = 0, errored = 0;
    for (const auto& p : predictions) {
        out_lines += qa_prediction_to_json(p) + "\n";
        if (p.answer.degraded) ++degraded;
        if (!p.error.empty()) ++errored;
    }
    write_file(rc.out / "qa_predictions.jsonl", out_lines);
    json r;
    r["items"] = predictions.size();
    r["degraded"] = degraded;
    r["errors"] = errored;
    write_file(rc.out / "reports" / "qa.json", r.dump(2) + "\n");
    record_stage(manifest, rc.out, "qa", inputs, {"qa_predictions.jsonl", "reports/qa.json"});
    std::cout << "qa: " << predictions.size() << " items (" << degraded << " degraded, "
              << errored << " errors) -> " << (rc.out / "qa_predictions.jsonl").string() << "\n";
    return errored == 0 ? kExitOk : kExitPartial;
}

struct ParsedPrediction {
    QaTask task = QaTask::T1;
    json gold;
    json answer_value;
    bool degraded = false;
};

int stage_eval(const RunConfig& rc, const Flags& flags, bool force) {
    fs::path predictions_path =
        flags.predictions ? fs::path{*flags.predictions} : rc.out / "qa_predictions.jsonl";
    const bool have_ratings = flags.ratings.has_value();
    if (!have_ratings) require_input(predictions_path, "predictions");
    json manifest = load_manifest(rc.out);
    json fp;
    fp["task"] = flags.task ? *flags.task : "";
    fp["x100"] = flags.x100;
    fp["embed_dim"] = flags.embed_dim;
    fp["embed_seed"] = flags.embed_seed;
    std::string blob;
    if (fs::exists(predictions_path)) blob += read_file(predictions_path);
    if (have_ratings) blob += read_file(*flags.ratings);
    std::string inputs = hex_digest("eval|" + fp.dump() + "|" + blob);
    if (!force && stage_current(manifest, rc.out, "eval", inputs)) {
        std::cout << "eval: up to date, skipping\n";
        std::cout << read_file(rc.out / "reports" / "eval.json");
        return kExitOk;
    }

    MetricsReport report;
    std::optional<QaTask> only;
    if (flags.task) {
        only = parse_qa_task(*flags.task);
        if (!only) throw ConfigError("unknown task '" + *flags.task + "' (T1..T6)");
    }

    if (fs::exists(predictions_path)) {
        std::map<QaTask, std::vector<ParsedPrediction>> by_task;
        std::istringstream in(read_file(predictions_path));
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.is_object())
                throw ConfigError(predictions_path.string() + ":" + std::to_string(line_no) +
                                  ": not a JSON object");
            auto task = parse_qa_task(j.value("task", ""));
            if (!task)
                throw ConfigError(predictions_path.string() + ":" + std::to_string(line_no) +
                                  ": unknown task");
            if (only && *task != *only) continue;
            ParsedPrediction p;
            p.task = *task;
            p.gold = j.contains("gold") ? j["gold"] : json{};
            if (j.contains("answer") && j["answer"].is_object()) {
                p.answer_value = j["answer"].value("value", json{});
                p.degraded = j["answer"].value("degraded", false);
            }
            by_task[*task].push_back(std::move(p));
        }
        HashedBowEmbedding provider(static_cast<std::size_t>(flags.embed_dim), flags.embed_seed);
        for (const auto& [task, preds] : by_task) {
            std::string name{qa_task_name(task)};
            report.set(name, "count", static_cast<double>(preds.size()));
            if (task == QaTask::T1 || task == QaTask::T4) {
                std::size_t hits = 0, scored = 0;
                for (const auto& p : preds) {
                    if (p.gold.is_null()) continue;
                    ++scored;
                    if (!p.degraded && p.answer_value == p.gold) ++hits;
                }
                if (scored > 0)
                    report.set(name, "accuracy",
                               static_cast<double>(hits) / static_cast<double>(scored));
            } else if (task != QaTask::T6) {
                double sim_sum = 0.0, hit_sum = 0.0, count_sum = 0.0;
                std::size_t scored = 0;
                for (const auto& p : preds) {
                    if (!p.gold.is_array() || p.gold.empty()) continue;
                    std::vector<std::string> gold =
                        p.gold.get<std::vector<std::string>>();
                    std::vector<std::string> pred;
                    if (p.answer_value.is_array())
                        pred = p.answer_value.get<std::vector<std::string>>();
                    ++scored;
                    count_sum += static_cast<double>(pred.size());
                    if (pred.empty()) continue;  // scores zero
                    sim_sum += similarity_score(pred, gold, provider);
                    hit_sum += hit_rate(pred, gold);
                }
                if (scored > 0) {
                    report.set(name, "similarity", sim_sum / static_cast<double>(scored));
                    report.set(name, "hit_rate", hit_sum / static_cast<double>(scored));
                    report.set(name, "mean_entities", count_sum / static_cast<double>(scored));
                }
            } else {
                std::size_t answered = 0;
                for (const auto& p : preds)
                    if (!p.degraded) ++answered;
                report.set(name, "answered", static_cast<double>(answered));
            }
        }
    }

    if (have_ratings) {
        RatingSheet sheet = load_rating_sheet(*flags.ratings);
        for (const auto& [rater, summary] : rating_summary_by_rater(sheet)) {
            report.set("ratings:" + rater, "mean", summary.mean);
            report.set("ratings:" + rater, "std", summary.stddev);
            report.set("ratings:" + rater, "count", static_cast<double>(summary.count));
        }
        // Pairwise kappa over items both raters scored, in item order.
        std::map<std::string, std::map<std::string, int>> by_rater;
        for (const auto& item : sheet.items) by_rater[item.rater_id][item.item_id] = item.score;
        for (auto a = by_rater.begin(); a != by_rater.end(); ++a) {
            for (auto b = std::next(a); b != by_rater.end(); ++b) {
                std::vector<int> va, vb;
                for (const auto& [item_id, score] : a->second) {
                    auto it = b->second.find(item_id);
                    if (it == b->second.end()) continue;
                    va.push_back(score);
                    vb.push_back(it->second);
                }
                if (!va.empty())
                    report.set("ratings:kappa", a->first + "|" + b->first, cohen_kappa(va, vb));
            }
        }
    }

    std::string rendered = report.to_json(flags.x100);
    write_file(rc.out / "reports" / "eval.json", rendered);
    record_stage(manifest, rc.out, "eval", inputs, {"reports/eval.json"});
    std::cout << rendered;
    return kExitOk;
}

int stage_pipeline(const RunConfig& rc, bool force) {
    int worst = kExitOk;
    for (int (*stage)(const RunConfig&, bool) :
         {&stage_ingest, &stage_seeds, &stage_extract, &stage_fuse})
        worst = std::max(worst, stage(rc, force));
    return worst;
}

}  // namespace kgfuse::cli

int main(int argc, char** argv) {
    using namespace kgfuse;
    using namespace kgfuse::cli;

    CLI::App app{"kgfuse: zero-shot knowledge graph construction, fusion and evaluation"};
    app.require_subcommand(1);
    Flags flags;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", flags.config, "run config JSON file");
        cmd->add_option("--out", flags.out, "output directory (default: out)");
        cmd->add_flag("--force", flags.force, "re-run even when the stage is up to date");
        cmd->add_option("--corpus", flags.corpus, "raw corpus file");
        cmd->add_option("--corpus-format", flags.corpus_format, "jsonl|tsv");
        cmd->add_flag("--deterministic,!--no-deterministic", flags.deterministic,
                      "force deterministic mode (mock backend, sequential issue)");
        cmd->add_option("--fixtures", flags.fixtures, "mock fixture JSONL");
        cmd->add_flag("--strict-fixtures,!--no-strict-fixtures", flags.strict_fixtures,
                      "fail on fixture misses instead of synthesizing");
        cmd->add_option("--endpoint", flags.endpoint, "http chat endpoint");
        cmd->add_option("--backend", flags.backend_kind, "mock|http");
        cmd->add_option("--domain", flags.domain, "domain name used in prompts");
        cmd->add_option("--parallelism", flags.parallelism, "worker threads per stage");
    };

    add_common(app.add_subcommand("ingest", "parse the raw corpus into the corpus store"));
    add_common(app.add_subcommand("seeds", "mine seed entities from the corpus store"));
    add_common(app.add_subcommand("extract", "extract candidate triplets per seed entity"));
    CLI::App* fuse = app.add_subcommand("fuse", "fuse the candidate graph into the final graph");
    add_common(fuse);
    fuse->add_option("--expert", flags.expert, "expert graph TSV to fuse against");
    CLI::App* lp = app.add_subcommand("lp", "link prediction over entity pairs");
    add_common(lp);
    lp->add_option("--dataset", flags.dataset, "test pairs TSV (a, b, label)")->required();
    lp->add_option("--variant", flags.variant, "plain|cot|doc|con|wiki");
    lp->add_option("--train", flags.train, "train pairs TSV (for the con variant)");
    lp->add_option("--wiki", flags.wiki, "wiki paragraph JSON (for the wiki variant)");
    lp->add_flag("--lenient-scoring", flags.lenient_scoring,
                 "exclude unparseable responses instead of scoring them wrong");
    CLI::App* qa = app.add_subcommand("qa", "answer TutorQA-style questions over the fused graph");
    add_common(qa);
    qa->add_option("--questions", flags.questions, "questions JSONL {task, question, gold}")
        ->required();
    qa->add_option("--kg", flags.kg, "graph TSV to query (default: <out>/fused.tsv)");
    qa->add_option("--task", flags.task, "restrict to one task (T1..T6)");
    qa->add_flag("--directed", flags.directed,
                 "PATH follows PrerequisiteOf direction instead of undirected edges");
    CLI::App* eval = app.add_subcommand("eval", "score predictions and rating sheets");
    add_common(eval);
    eval->add_option("--predictions", flags.predictions,
                     "predictions JSONL (default: <out>/qa_predictions.jsonl)");
    eval->add_option("--task", flags.task, "restrict to one task (T1..T6)");
    eval->add_flag("--x100", flags.x100, "display similarity on the 0-100 scale");
    eval->add_option("--ratings", flags.ratings, "rating sheet CSV (item_id, rater_id, score)");
    eval->add_option("--embed-dim", flags.embed_dim, "hashed bag-of-words dimension");
    eval->add_option("--embed-seed", flags.embed_seed, "hashed bag-of-words seed");
    add_common(app.add_subcommand("pipeline", "ingest, seeds, extract and fuse in sequence"));

    CLI11_PARSE(app, argc, argv);

    try {
        CLI::App* sub = app.get_subcommands().front();
        const std::string& name = sub->get_name();
        const bool needs_backend = name == "extract" || name == "fuse" || name == "lp" ||
                                   name == "qa" || name == "pipeline";
        RunConfig rc = build_run_config(flags, needs_backend);
        fs::create_directories(rc.out);
        if (name == "ingest") return stage_ingest(rc, flags.force);
        if (name == "seeds") return stage_seeds(rc, flags.force);
        if (name == "extract") return stage_extract(rc, flags.force);
        if (name == "fuse") return stage_fuse(rc, flags.force);
        if (name == "lp") return stage_lp(rc, flags, flags.force);
        if (name == "qa") return stage_qa(rc, flags, flags.force);
        if (name == "eval") return stage_eval(rc, flags, flags.force);
        if (name == "pipeline") return stage_pipeline(rc, flags.force);
        std::cerr << "error: unknown subcommand " << name << "\n";
        return kExitHard;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitHard;
    }
}
