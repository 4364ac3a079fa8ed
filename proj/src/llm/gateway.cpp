#include "kgfuse/llm/gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "kgfuse/extract/triplet_parse.hpp"
#include "kgfuse/util/error.hpp"
#include "kgfuse/util/hash.hpp"
#include "kgfuse/util/io.hpp"

namespace kgfuse {

std::string bindings_digest(const std::map<std::string, std::string>& bindings) {
    std::string framed;
    for (const auto& [name, value] : bindings) {
        framed += std::to_string(name.size());
        framed += ':';
        framed += name;
        framed += '=';
        framed += std::to_string(value.size());
        framed += ':';
        framed += value;
        framed += ';';
    }
    return hex_digest(framed);
}

ChatRequest make_request(TemplateId id, std::map<std::string, std::string> bindings,
                         const ChatParams& params) {
    ChatRequest req;
    req.template_id = id;
    req.rendered_prompt = render(id, bindings);
    req.bindings = std::move(bindings);
    req.params = params;
    return req;
}

std::string ChatExchange::ref() const {
    return std::string(template_id_name(template_id)) + ":" + bindings_digest;
}

std::string exchange_to_json(const ChatExchange& ex) {
    nlohmann::json rec;
    rec["template_id"] = std::string(template_id_name(ex.template_id));
    rec["bindings_digest"] = ex.bindings_digest;
    rec["rendered_prompt"] = ex.rendered_prompt;
    rec["params"] = {{"model_name", ex.params.model_name},
                     {"temperature", ex.params.temperature},
                     {"max_tokens", ex.params.max_tokens}};
    rec["raw_response"] = ex.raw_response;
    rec["latency_ms"] = ex.latency_ms;
    rec["attempt_count"] = ex.attempt_count;
    return rec.dump();
}

void BackendConfig::validate() const {
    std::vector<std::string> errors;
    if (kind == BackendKind::mock && fixtures_path.empty())
        errors.push_back("mock backend requires a fixture path");
    if (kind == BackendKind::http_chat && endpoint.empty())
        errors.push_back("http backend requires an endpoint");
    if (retry.max_attempts < 1) errors.push_back("retry.max_attempts must be >= 1");
    if (parallelism_cap < 1) errors.push_back("parallelism_cap must be >= 1");
    if (deterministic_mode && kind == BackendKind::http_chat)
        errors.push_back("deterministic mode requires the mock backend");
    if (!errors.empty()) {
        std::string msg = "invalid backend config:";
        for (const auto& e : errors) msg += "\n  - " + e;
        throw ConfigError(msg);
    }
}

AuditLog::AuditLog(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.has_parent_path())
        std::filesystem::create_directories(path_.parent_path());
}

void AuditLog::append(const ChatExchange& ex) {
    std::string line = exchange_to_json(ex) + "\n";
    std::lock_guard<std::mutex> lock(mu_);
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) throw Error("cannot open audit log: " + path_.string());
    out << line;
}

namespace {

std::string fixture_key(std::string_view template_name, std::string_view digest) {
    return std::string(template_name) + ":" + std::string(digest);
}

}  // namespace

MockBackend::MockBackend(const std::filesystem::path& fixtures_path, bool strict)
    : strict_(strict) {
    load_fixtures(fixtures_path);
}

void MockBackend::load_fixtures(const std::filesystem::path& fixtures_path) {
    std::string content = read_file(fixtures_path);
    std::istringstream ss(content);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object() || !rec.contains("template_id") ||
            !rec.contains("bindings_digest") || !rec.contains("response"))
            throw ConfigError("malformed fixture at " + fixtures_path.string() +
                              ":" + std::to_string(line_no));
        std::string tname = rec["template_id"].get<std::string>();
        if (!parse_template_id(tname))
            throw ConfigError("fixture with unknown template_id '" + tname + "' at " +
                              fixtures_path.string() + ":" + std::to_string(line_no));
        fixtures_[fixture_key(tname, rec["bindings_digest"].get<std::string>())] =
            rec["response"].get<std::string>();
    }
}

void MockBackend::add_fixture(TemplateId id, const std::string& digest,
                              std::string response) {
    fixtures_[fixture_key(template_id_name(id), digest)] = std::move(response);
}

std::string fallback_response(const ChatRequest& request) {
    switch (request.template_id) {
        case TemplateId::extraction:
            return "None";
        case TemplateId::fusion: {
            // Echo the union of both input graphs so fixtureless property
            // runs exercise the deterministic consolidation downstream.
            std::vector<Triplet> merged;
            std::set<TripletKey> seen;
            for (const char* slot : {"LLM-KG", "E-G"}) {
                auto it = request.bindings.find(slot);
                if (it == request.bindings.end()) continue;
                for (Triplet& t : parse_triplets(it->second).triplets) {
                    if (seen.insert(canonical_pair(t)).second)
                        merged.push_back(std::move(t));
                }
            }
            return format_triplets_as_prompt(merged);
        }
        case TemplateId::lp_plain:
        case TemplateId::lp_doc:
        case TemplateId::lp_con:
        case TemplateId::lp_wiki: {
            std::uint64_t h = fnv1a64(bindings_digest(request.bindings));
            return (h & 1) ? "YES" : "NO";
        }
        case TemplateId::lp_cot: {
            std::uint64_t h = fnv1a64(bindings_digest(request.bindings));
            return (h & 1) ? "Reasoning omitted. <result>YES</result>"
                           : "Reasoning omitted. <result>NO</result>";
        }
        case TemplateId::qa_command:
        case TemplateId::qa_answer:
            return "";
    }
    return "";
}

BackendResponse MockBackend::send(const ChatRequest& request) {
    std::string digest = bindings_digest(request.bindings);
    auto it = fixtures_.find(fixture_key(template_id_name(request.template_id), digest));
    BackendResponse resp;
    resp.transport_ok = true;
    resp.http_status = 200;
    if (it != fixtures_.end()) {
        resp.text = it->second;
        return resp;
    }
    if (strict_)
        throw FixtureMissError("no fixture for template '" +
                                   std::string(template_id_name(request.template_id)) +
                                   "' digest " + digest,
                               digest);
    resp.text = fallback_response(request);
    return resp;
}

HttpBackend::HttpBackend(std::string endpoint, std::string auth_env)
    : auth_env_(std::move(auth_env)) {
    std::size_t scheme = endpoint.find("://");
    if (scheme == std::string::npos)
        throw ConfigError("endpoint missing scheme: " + endpoint);
    std::size_t slash = endpoint.find('/', scheme + 3);
    if (slash == std::string::npos) {
        base_ = endpoint;
        path_ = "/v1/chat/completions";
    } else {
        base_ = endpoint.substr(0, slash);
        path_ = endpoint.substr(slash);
    }
}

BackendResponse HttpBackend::send(const ChatRequest& request) {
    nlohmann::json body;
    body["model"] = request.params.model_name;
    body["temperature"] = request.params.temperature;
    body["max_tokens"] = request.params.max_tokens;
    body["messages"] = nlohmann::json::array(
        {{{"role", "user"}, {"content", request.rendered_prompt}}});

    httplib::Client client(base_);
    client.set_connection_timeout(10);
    client.set_read_timeout(60);
    httplib::Headers headers;
    if (!auth_env_.empty()) {
        if (const char* secret = std::getenv(auth_env_.c_str()))
            headers.emplace("Authorization", std::string("Bearer ") + secret);
    }

    BackendResponse resp;
    auto result = client.Post(path_, headers, body.dump(), "application/json");
    if (!result) {
        resp.error = httplib::to_string(result.error());
        return resp;
    }
    resp.transport_ok = true;
    resp.http_status = result->status;
    if (result->status == 200) {
        nlohmann::json parsed = nlohmann::json::parse(result->body, nullptr, false);
        if (parsed.is_discarded()) {
            resp.error = "response body is not JSON";
            resp.transport_ok = false;
            return resp;
        }
        try {
            resp.text = parsed.at("choices").at(0).at("message").at("content")
                            .get<std::string>();
        } catch (const std::exception& e) {
            resp.error = std::string("unexpected response shape: ") + e.what();
            resp.transport_ok = false;
        }
    } else {
        resp.error = "http status " + std::to_string(result->status);
    }
    return resp;
}

bool HttpBackend::transient(const BackendResponse& r) const {
    if (!r.transport_ok) return true;
    return r.http_status == 429 || r.http_status >= 500;
}

LlmClient::LlmClient(std::unique_ptr<Backend> backend, RetryPolicy retry,
                     bool deterministic)
    : backend_(std::move(backend)), retry_(std::move(retry)),
      deterministic_(deterministic) {}

LlmClient LlmClient::from_config(const BackendConfig& config) {
    config.validate();
    std::unique_ptr<Backend> backend;
    if (config.kind == BackendKind::mock) {
        backend = std::make_unique<MockBackend>(config.fixtures_path,
                                                config.strict_fixtures);
    } else {
        backend = std::make_unique<HttpBackend>(config.endpoint, config.auth_env);
    }
    return LlmClient(std::move(backend), config.retry, config.deterministic_mode);
}

ChatExchange LlmClient::complete(const ChatRequest& request) {
    ChatExchange ex;
    ex.template_id = request.template_id;
    ex.bindings_digest = kgfuse::bindings_digest(request.bindings);
    ex.rendered_prompt = request.rendered_prompt;
    ex.params = request.params;

    auto start = std::chrono::steady_clock::now();
    BackendResponse last;
    int attempt = 0;
    while (true) {
        ++attempt;
        last = backend_->send(request);
        if (last.transport_ok && last.http_status == 200) break;
        if (attempt >= retry_.max_attempts || !backend_->transient(last)) {
            throw TransportError("llm call failed after " + std::to_string(attempt) +
                                     " attempt(s): " +
                                     (last.error.empty() ? "unknown error" : last.error),
                                 last.http_status);
        }
        int idx = std::min<int>(attempt - 1,
                                static_cast<int>(retry_.backoff_ms.size()) - 1);
        if (idx >= 0 && !retry_.backoff_ms.empty())
            std::this_thread::sleep_for(
                std::chrono::milliseconds(retry_.backoff_ms[idx]));
    }
    auto end = std::chrono::steady_clock::now();

    ex.raw_response = std::move(last.text);
    ex.attempt_count = attempt;
    ex.latency_ms =
        deterministic_
            ? 0
            : std::chrono::duration_cast<std::chrono::milliseconds>(end - start).count();
    if (audit_) audit_->append(ex);
    return ex;
}

ChatExchange LlmClient::complete(TemplateId id,
                                 std::map<std::string, std::string> bindings,
                                 const ChatParams& params) {
    return complete(make_request(id, std::move(bindings), params));
}

}  // namespace kgfuse
