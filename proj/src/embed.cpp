#include "editbench/embed.hpp"

#include <cmath>

#include "editbench/error.hpp"
#include "editbench/http.hpp"
#include "editbench/text.hpp"

namespace editbench {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

float dot(std::span<const float> a, std::span<const float> b) {
    double acc = 0.0;
    const auto n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) acc += static_cast<double>(a[i]) * b[i];
    return static_cast<float>(acc);
}

float cosine(std::span<const float> a, std::span<const float> b) {
    const double na = std::sqrt(static_cast<double>(dot(a, a)));
    const double nb = std::sqrt(static_cast<double>(dot(b, b)));
    if (na == 0.0 || nb == 0.0) return 0.0F;
    const double c = dot(a, b) / (na * nb);
    return static_cast<float>(std::clamp(c, -1.0, 1.0));
}

void normalize_in_place(std::span<float> v) {
    double sq = 0.0;
    for (float x : v) sq += static_cast<double>(x) * x;
    if (sq == 0.0) return;
    const double inv = 1.0 / std::sqrt(sq);
    for (auto& x : v) x = static_cast<float>(x * inv);
}

StubEmbedder::StubEmbedder(std::size_t dim) : dim_(dim) {
    if (dim_ == 0) throw ConfigError("rag.embed_dim", "must be positive");
}

std::vector<Embedding> StubEmbedder::embed(const std::vector<std::string>& texts) {
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        Embedding e(dim_, 0.0F);
        auto toks = text::tokens(t);
        if (toks.empty()) toks.emplace_back();
        for (const auto& tok : toks) e[fnv1a(tok) % dim_] += 1.0F;
        normalize_in_place(e);
        out.push_back(std::move(e));
    }
    return out;
}

HttpEmbedder::HttpEmbedder(std::string endpoint, std::size_t dim, RetryPolicy retry)
    : endpoint_(std::move(endpoint)), dim_(dim), retry_(retry) {
    if (endpoint_.empty()) throw ConfigError("rag.embed_endpoint", "required for the http embedder");
    if (dim_ == 0) throw ConfigError("rag.embed_dim", "must be positive");
}

std::vector<Embedding> HttpEmbedder::embed(const std::vector<std::string>& texts) {
    const nlohmann::json body{{"texts", texts}};
    auto reply = with_retries(retry_, [&] { return http::post_json(endpoint_, body); });
    auto it = reply.find("embeddings");
    if (it == reply.end() || !it->is_array() || it->size() != texts.size())
        throw ProviderError("embedding endpoint returned a malformed reply", false);
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& row : *it) {
        if (!row.is_array() || row.size() != dim_)
            throw ProviderError("embedding dimension mismatch: expected " + std::to_string(dim_), false);
        Embedding e = row.get<Embedding>();
        normalize_in_place(e);
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace editbench
