#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "kgfuse/llm/templates.hpp"

namespace kgfuse {

struct ChatParams {
    std::string model_name = "mock";
    double temperature = 0.0;  // per the experimental setup, zero by default
    int max_tokens = 1024;
};

struct ChatRequest {
    TemplateId template_id = TemplateId::extraction;
    std::map<std::string, std::string> bindings;
    std::string rendered_prompt;
    ChatParams params;
};

// Stable digest over sorted, length-framed bindings; keys mock fixtures and
// joins audit records.
std::string bindings_digest(const std::map<std::string, std::string>& bindings);

ChatRequest make_request(TemplateId id, std::map<std::string, std::string> bindings,
                         const ChatParams& params = {});

struct ChatExchange {
    TemplateId template_id = TemplateId::extraction;
    std::string bindings_digest;
    std::string rendered_prompt;
    ChatParams params;
    std::string raw_response;
    std::int64_t latency_ms = 0;
    int attempt_count = 1;

    // "<template>:<digest>", referenced from stage reports.
    std::string ref() const;
};

std::string exchange_to_json(const ChatExchange& ex);

struct RetryPolicy {
    int max_attempts = 3;
    std::vector<int> backoff_ms = {100, 400, 1600};
};

enum class BackendKind { mock, http_chat };

struct BackendConfig {
    BackendKind kind = BackendKind::mock;
    std::filesystem::path fixtures_path;  // mock
    bool strict_fixtures = false;
    std::string endpoint;  // http_chat, e.g. http://host:8080/v1/chat/completions
    std::string auth_env = "KGFUSE_API_KEY";
    RetryPolicy retry;
    int parallelism_cap = 4;
    bool deterministic_mode = true;

    void validate() const;  // throws ConfigError listing every violation
};

class AuditLog {
  public:
    explicit AuditLog(std::filesystem::path path);
    void append(const ChatExchange& ex);
    const std::filesystem::path& path() const { return path_; }

  private:
    std::filesystem::path path_;
    std::mutex mu_;
};

struct BackendResponse {
    bool transport_ok = false;
    int http_status = 0;
    std::string text;
    std::string error;
};

class Backend {
  public:
    virtual ~Backend() = default;
    virtual BackendResponse send(const ChatRequest& request) = 0;
    virtual bool transient(const BackendResponse& r) const = 0;
};

// Fixture-table backend: exact (template_id, bindings_digest) lookup; on a
// miss, strict mode throws while the default mode synthesizes a well-formed,
// content-poor response as a deterministic function of the request.
class MockBackend : public Backend {
  public:
    MockBackend() = default;
    MockBackend(const std::filesystem::path& fixtures_path, bool strict);
    void load_fixtures(const std::filesystem::path& fixtures_path);
    void add_fixture(TemplateId id, const std::string& digest, std::string response);
    std::size_t fixture_count() const { return fixtures_.size(); }
    void set_strict(bool strict) { strict_ = strict; }

    BackendResponse send(const ChatRequest& request) override;
    bool transient(const BackendResponse&) const override { return false; }

  private:
    std::map<std::string, std::string> fixtures_;
    bool strict_ = false;
};

std::string fallback_response(const ChatRequest& request);

class HttpBackend : public Backend {
  public:
    HttpBackend(std::string endpoint, std::string auth_env);
    BackendResponse send(const ChatRequest& request) override;
    bool transient(const BackendResponse& r) const override;

  private:
    std::string base_;
    std::string path_;
    std::string auth_env_;
};

class LlmClient {
  public:
    explicit LlmClient(std::unique_ptr<Backend> backend, RetryPolicy retry = {},
                       bool deterministic = true);
    static LlmClient from_config(const BackendConfig& config);

    // Thread-safe; one audit record per call when a log is attached.
    ChatExchange complete(const ChatRequest& request);
    ChatExchange complete(TemplateId id, std::map<std::string, std::string> bindings,
                          const ChatParams& params = {});

    void set_audit_log(std::shared_ptr<AuditLog> log) { audit_ = std::move(log); }
    bool deterministic() const { return deterministic_; }

  private:
    std::unique_ptr<Backend> backend_;
    RetryPolicy retry_;
    bool deterministic_ = true;
    std::shared_ptr<AuditLog> audit_;
};

}  // namespace kgfuse
