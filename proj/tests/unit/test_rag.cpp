#include <cmath>
#include <filesystem>
#include <map>
#include <random>

#include "doctest.h"
#include "editbench/error.hpp"
#include "editbench/rag.hpp"
#include "../support/oracles.hpp"

using namespace editbench;

namespace {

QaPair pair_of(const std::string& id, const std::string& q, const std::string& a) {
    QaPair p;
    p.id = id;
    p.question = q;
    p.answer = a;
    p.provenance = {id + "-fact"};
    return p;
}

/// Maps known texts to fixed vectors; anything else is an error.
class TableEmbedder final : public Embedder {
public:
    explicit TableEmbedder(std::map<std::string, Embedding> table) : table_(std::move(table)) {}
    std::size_t dim() const override { return table_.begin()->second.size(); }
    std::vector<Embedding> embed(const std::vector<std::string>& texts) override {
        std::vector<Embedding> out;
        for (const auto& t : texts) {
            auto it = table_.find(t);
            if (it == table_.end()) throw ProviderError("unknown text " + t, false);
            out.push_back(it->second);
        }
        return out;
    }

private:
    std::map<std::string, Embedding> table_;
};

std::vector<MemoryEntry> random_entries(std::mt19937_64& rng, std::size_t n, std::size_t dim,
                                        std::vector<std::vector<float>>* vectors) {
    std::vector<MemoryEntry> out;
    for (std::size_t i = 0; i < n; ++i) {
        MemoryEntry e;
        e.source_id = "s" + std::to_string(i);
        e.question = "q" + std::to_string(i);
        e.answer = "a" + std::to_string(i);
        e.embedding = oracle::random_unit(rng, dim);
        if (vectors) vectors->push_back(e.embedding);
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace

TEST_CASE("append-only growth") {
    StubEmbedder emb(64);
    RagMemory m;
    auto stats = m.add_entries({pair_of("a", "q one", "x"), pair_of("b", "q two", "y"), pair_of("c", "q three", "z")}, emb);
    CHECK(stats.added == 3);
    CHECK(m.size() == 3);
    m.add_entries({pair_of("a", "q one", "x"), pair_of("a", "q one", "x")}, emb);
    CHECK(m.size() == 5);
}

TEST_CASE("bulk load keeps every vector unit-norm") {
    std::mt19937_64 rng(1);
    RagMemory m;
    auto entries = random_entries(rng, 10000, 16, nullptr);
    for (auto& e : entries)
        for (auto& x : e.embedding) x *= 3.0F;  // not normalized on input
    m.add_embedded(entries);
    CHECK(m.size() == 10000);
    for (const auto& e : m.entries()) {
        double n = 0;
        for (float x : e->embedding) n += double(x) * x;
        CHECK(std::abs(std::sqrt(n) - 1.0) < 1e-6);
    }
}

TEST_CASE("stored question retrieves itself at rank 1 with similarity 1") {
    StubEmbedder emb(256);
    RagMemory m;
    m.add_entries({pair_of("a", "What is the color of Turnberry Lighthouse?", "white"),
                   pair_of("b", "Who owns Amber Harbor?", "Velmora Trust")},
                  emb);
    const auto r = m.retrieve("Who owns Amber Harbor?", 2, emb);
    REQUIRE(r.size() == 2);
    CHECK(r[0].entry->answer == "Velmora Trust");
    CHECK(r[0].similarity == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("orthogonal embeddings: the two overlapping entries, in score order") {
    TableEmbedder emb({{"e1", {1, 0, 0, 0}},
                       {"e2", {0, 1, 0, 0}},
                       {"e3", {0, 0, 1, 0}},
                       {"e4", {0, 0, 0, 1}},
                       {"query", {0, 0.6F, 0, 0.8F}}});
    RagMemory m;
    m.add_entries({pair_of("1", "e1", "a1"), pair_of("2", "e2", "a2"), pair_of("3", "e3", "a3"), pair_of("4", "e4", "a4")},
                  emb);
    const auto r = m.retrieve("query", 2, emb);
    REQUIRE(r.size() == 2);
    CHECK(r[0].entry->question == "e4");
    CHECK(r[1].entry->question == "e2");
    CHECK(r[0].similarity == doctest::Approx(0.8));
    CHECK(r[1].similarity == doctest::Approx(0.6));

    const auto all = m.retrieve("query", 4, emb);
    REQUIRE(all.size() == 4);
    for (std::size_t i = 1; i < all.size(); ++i) CHECK(all[i - 1].similarity >= all[i].similarity);
    CHECK(m.retrieve("query", 99, emb).size() == 4);
}

TEST_CASE("exact retrieval equals brute-force kNN") {
    std::mt19937_64 rng(7);
    std::vector<std::vector<float>> vectors;
    RagMemory m;
    m.add_embedded(random_entries(rng, 2000, 24, &vectors));
    for (int q = 0; q < 50; ++q) {
        const auto query = oracle::random_unit(rng, 24);
        for (std::size_t k : {1, 2, 10}) {
            const auto got = m.retrieve_vector(query, k);
            const auto want = oracle::brute_force_knn(vectors, query, k);
            REQUIRE(got.size() == want.size());
            for (std::size_t i = 0; i < k; ++i) CHECK(got[i].entry->id == want[i]);
        }
    }
}

TEST_CASE("approximate retrieval recall@2") {
    std::mt19937_64 rng(8);
    std::vector<std::vector<float>> vectors;
    RagConfig cfg;
    cfg.mode = RetrievalMode::Approximate;
    RagMemory m(cfg);
    m.add_embedded(random_entries(rng, 3000, 24, &vectors));
    std::size_t hit = 0;
    std::size_t total = 0;
    for (int q = 0; q < 200; ++q) {
        const auto query = oracle::random_unit(rng, 24);
        const auto want = oracle::brute_force_knn(vectors, query, 2);
        const auto got = m.retrieve_vector(query, 2);
        for (auto id : want) {
            ++total;
            for (const auto& g : got) hit += g.entry->id == id ? 1 : 0;
        }
    }
    CHECK(double(hit) / double(total) >= 0.95);
}

TEST_CASE("context rendering") {
    auto e1 = std::make_shared<MemoryEntry>(MemoryEntry{7, "s", "f", "q1", "a1", {}});
    auto e2 = std::make_shared<MemoryEntry>(MemoryEntry{3, "s", "f", "q2", "a2", {}});
    CHECK(build_context("q*", {{e1, 0.9F}}).text == "Q: q1\nA: a1\nQ: q*\nA:");
    CHECK(build_context("q*", {}).text == "Q: q*\nA:");
    const auto two = build_context("q*", {{e1, 0.9F}, {e2, 0.5F}});
    CHECK(two.text == "Q: q1\nA: a1\nQ: q2\nA: a2\nQ: q*\nA:");
    CHECK(two.ids == std::vector<std::uint64_t>{7, 3});
}

TEST_CASE("copy model answers from memory; empty memory leaves the bare question") {
    StubEmbedder emb(256);
    RagMemory m;
    CopyFirstAnswerModel copy;
    std::optional<std::string> seen;
    CallbackModel echo([&](const std::string& q, const std::optional<std::string>& ctx) {
        seen = ctx;
        return q;
    }, "echo");
    answer_with_rag(m, echo, "Who owns Amber Harbor?", 2, emb);
    REQUIRE(seen.has_value());
    CHECK(*seen == "Q: Who owns Amber Harbor?\nA:");
    CHECK(answer_with_rag(m, copy, "Who owns Amber Harbor?", 2, emb) == "unknown");

    m.add_entries({pair_of("a", "Who owns Amber Harbor?", "Velmora Trust"),
                   pair_of("b", "Who owns Birch Mill?", "Tarquin Guild"),
                   pair_of("c", "What is the color of Cedar Abbey?", "green")},
                  emb);
    CHECK(answer_with_rag(m, copy, "Who owns Amber Harbor?", 2, emb) == "Velmora Trust");
    CHECK(answer_with_rag(m, copy, "Who owns Birch Mill?", 2, emb) == "Tarquin Guild");
}

TEST_CASE("dimension mismatch is a config error") {
    RagMemory m({}, 8);
    MemoryEntry e;
    e.embedding = std::vector<float>(4, 0.5F);
    CHECK_THROWS_AS(m.add_embedded({e}), ConfigError);
}

TEST_CASE("embedding failures skip only the failing items") {
    TableEmbedder emb({{"known", {1, 0}}});
    RagMemory m;
    const auto stats = m.add_entries({pair_of("a", "known", "x"), pair_of("b", "unknown", "y")}, emb);
    CHECK(stats.added == 1);
    CHECK(stats.skipped == 1);
}

TEST_CASE("save and load round-trip") {
    const auto dir = std::filesystem::temp_directory_path() / "editbench-rag-rt";
    std::filesystem::remove_all(dir);
    std::mt19937_64 rng(3);
    RagMemory m;
    m.add_embedded(random_entries(rng, 100, 12, nullptr));
    m.save(dir);
    const auto back = RagMemory::load(dir);
    REQUIRE(back.size() == m.size());
    const auto a = m.entries();
    const auto b = back.entries();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(*a[i] == *b[i]);
    std::filesystem::remove_all(dir);
}
