#include "kgfuse/metrics/embedding.hpp"

#include <cmath>
#include <cstdlib>

#include "kgfuse/corpus/tokenizer.hpp"
#include "kgfuse/kernels/vec_kernels.hpp"
#include "kgfuse/util/error.hpp"
#include "kgfuse/util/hash.hpp"
#include "vendor/httplib.h"
#include "vendor/json.hpp"

namespace kgfuse {

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw MetricError("cosine: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
    if (a.empty()) throw MetricError("cosine: empty vectors");
    double na = std::sqrt(kernels::dot(a.data(), a.data(), a.size()));
    double nb = std::sqrt(kernels::dot(b.data(), b.data(), b.size()));
    if (na == 0.0 || nb == 0.0) throw MetricError("cosine: zero-norm vector");
    return kernels::dot(a.data(), b.data(), a.size()) / (na * nb);
}

HashedBowEmbedding::HashedBowEmbedding(std::size_t dim, std::uint64_t seed) : dim_(dim) {
    if (dim_ == 0) throw ConfigError("embedding dimension must be positive");
    basis_ = 0xcbf29ce484222325ull ^ (seed * 0x9e3779b97f4a7c15ull);
    name_ = "hashed-bow/d" + std::to_string(dim_) + "/s" + std::to_string(seed);
}

std::vector<double> HashedBowEmbedding::embed(const std::string& text) const {
    std::vector<double> v(dim_, 0.0);
    for (const auto& token : token_texts(text)) {
        std::uint64_t h = fnv1a64(token, basis_);
        double sign = (h >> 63) ? -1.0 : 1.0;
        v[h % dim_] += sign;
    }
    bool all_zero = true;
    for (double x : v)
        if (x != 0.0) {
            all_zero = false;
            break;
        }
    if (all_zero) v[fnv1a64(to_lower_ascii(text), basis_) % dim_] = 1.0;
    kernels::l2_normalize(v.data(), v.size());
    return v;
}

namespace {

// "http://host:port" or "http://host:port/path"
void split_endpoint(const std::string& endpoint, std::string& base, std::string& path,
                    const std::string& default_path) {
    std::size_t scheme = endpoint.find("://");
    if (scheme == std::string::npos)
        throw ConfigError("embedding endpoint must include a scheme: " + endpoint);
    std::size_t slash = endpoint.find('/', scheme + 3);
    if (slash == std::string::npos) {
        base = endpoint;
        path = default_path;
    } else {
        base = endpoint.substr(0, slash);
        path = endpoint.substr(slash);
    }
}

}  // namespace

HttpEmbedding::HttpEmbedding(std::string endpoint, std::string model, std::size_t dim,
                             std::string auth_env)
    : model_(std::move(model)), dim_(dim), auth_env_(std::move(auth_env)) {
    if (dim_ == 0) throw ConfigError("embedding dimension must be positive");
    split_endpoint(endpoint, base_, path_, "/v1/embeddings");
    name_ = "http/" + model_ + "/d" + std::to_string(dim_);
}

std::vector<double> HttpEmbedding::embed(const std::string& text) const {
    httplib::Client client(base_);
    client.set_connection_timeout(10);
    client.set_read_timeout(60);
    httplib::Headers headers;
    if (const char* key = std::getenv(auth_env_.c_str()); key && *key)
        headers.emplace("Authorization", std::string{"Bearer "} + key);
    nlohmann::json body;
    body["model"] = model_;
    body["input"] = std::vector<std::string>{text};
    auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) throw TransportError("embedding request failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw TransportError("embedding service returned HTTP " + std::to_string(res->status),
                             res->status);
    nlohmann::json j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.contains("data") || !j["data"].is_array() || j["data"].empty() ||
        !j["data"][0].contains("embedding") || !j["data"][0]["embedding"].is_array())
        throw TransportError("embedding response malformed");
    std::vector<double> v = j["data"][0]["embedding"].get<std::vector<double>>();
    if (v.size() != dim_)
        throw MetricError("embedding dimension mismatch: got " + std::to_string(v.size()) +
                          ", expected " + std::to_string(dim_));
    double norm = kernels::l2_normalize(v.data(), v.size());
    if (norm == 0.0) throw MetricError("embedding service returned a zero vector");
    return v;
}

}  // namespace kgfuse
