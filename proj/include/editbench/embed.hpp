#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "editbench/retry.hpp"

namespace editbench {

using Embedding = std::vector<float>;

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::size_t dim() const = 0;
    /// One unit-norm vector of length dim() per input text.
    virtual std::vector<Embedding> embed(const std::vector<std::string>& texts) = 0;

    Embedding embed_one(const std::string& text) { return embed({text}).front(); }
};

/// Deterministic hashed bag-of-words embedder: each normalized token adds 1 to
/// bucket fnv1a(token) % dim, then the vector is L2-normalized.
class StubEmbedder final : public Embedder {
public:
    explicit StubEmbedder(std::size_t dim = 256);
    std::size_t dim() const override { return dim_; }
    std::vector<Embedding> embed(const std::vector<std::string>& texts) override;

private:
    std::size_t dim_;
};

/// Remote embedder: POST {"texts": [...]} -> {"embeddings": [[...], ...]}.
class HttpEmbedder final : public Embedder {
public:
    HttpEmbedder(std::string endpoint, std::size_t dim, RetryPolicy retry = {});
    std::size_t dim() const override { return dim_; }
    std::vector<Embedding> embed(const std::vector<std::string>& texts) override;

private:
    std::string endpoint_;
    std::size_t dim_;
    RetryPolicy retry_;
};

std::uint64_t fnv1a(std::string_view s);

float dot(std::span<const float> a, std::span<const float> b);
float cosine(std::span<const float> a, std::span<const float> b);
/// Scales to unit L2 norm; leaves an all-zero vector untouched.
void normalize_in_place(std::span<float> v);

}  // namespace editbench
