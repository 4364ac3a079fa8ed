#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace kgfuse {

// Deterministic per (name, text); embed returns an L2-unit vector.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::string name() const = 0;
    virtual std::size_t dimension() const = 0;
    virtual std::vector<double> embed(const std::string& text) const = 0;
};

double cosine(const std::vector<double>& a, const std::vector<double>& b);

// Seeded hashed bag of words with sign hashing. Texts with no tokens (or a
// fully cancelled accumulation) fall back to a single text-hash bucket so the
// output is never the zero vector.
class HashedBowEmbedding : public EmbeddingProvider {
public:
    explicit HashedBowEmbedding(std::size_t dim = 256, std::uint64_t seed = 42);

    std::string name() const override { return name_; }
    std::size_t dimension() const override { return dim_; }
    std::vector<double> embed(const std::string& text) const override;

private:
    std::size_t dim_;
    std::uint64_t basis_;
    std::string name_;
};

// Talks to an OpenAI-style /v1/embeddings endpoint. The declared dimension is
// enforced against responses; vectors are re-normalized on receipt.
class HttpEmbedding : public EmbeddingProvider {
public:
    HttpEmbedding(std::string endpoint, std::string model, std::size_t dim,
                  std::string auth_env = "KGFUSE_API_KEY");

    std::string name() const override { return name_; }
    std::size_t dimension() const override { return dim_; }
    std::vector<double> embed(const std::string& text) const override;

private:
    std::string base_;
    std::string path_;
    std::string model_;
    std::size_t dim_;
    std::string auth_env_;
    std::string name_;
};

}  // namespace kgfuse
