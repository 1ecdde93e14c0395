#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "editbench/embed.hpp"
#include "editbench/hnsw.hpp"
#include "editbench/model.hpp"
#include "editbench/qa.hpp"

namespace editbench {

struct MemoryEntry {
    std::uint64_t id = 0;    // insertion sequence; breaks similarity ties
    std::string source_id;   // QaPair id
    std::string fact_id;     // provenance of the stored fact
    std::string question;
    std::string answer;
    Embedding embedding;     // unit norm

    bool operator==(const MemoryEntry&) const = default;
};

enum class RetrievalMode { Exact, Approximate };

std::string_view to_string(RetrievalMode mode);
std::optional<RetrievalMode> retrieval_mode_from_string(std::string_view name);

struct RagConfig {
    std::size_t k = 2;
    RetrievalMode mode = RetrievalMode::Exact;
    double recall_floor = 0.95;
    std::string separator = "\n";
    std::size_t embed_batch = 64;
    HnswParams hnsw{};
};

struct Retrieved {
    std::shared_ptr<const MemoryEntry> entry;
    float similarity = 0.0F;
};

struct AugmentedContext {
    std::string text;
    std::vector<std::uint64_t> ids;  // rank order
};

struct AddStats {
    std::size_t added = 0;
    std::size_t skipped = 0;
};

/// Append-only QA memory keyed by question embeddings. Readers work on an immutable
/// snapshot; writers build the next snapshot under a lock and publish it atomically.
class RagMemory {
public:
    explicit RagMemory(RagConfig config = {}, std::size_t dim = 0);
    RagMemory(RagMemory&& other) noexcept;

    /// Embeds each pair's question and stores (question, answer, embedding). Embedding
    /// failures fall back to per-item calls; items that still fail are skipped.
    AddStats add_entries(const std::vector<QaPair>& pairs, Embedder& embedder);

    /// Stores pre-embedded entries (ids are reassigned); vectors are normalized.
    void add_embedded(std::vector<MemoryEntry> entries);

    std::vector<Retrieved> retrieve(const std::string& query, std::size_t k, Embedder& embedder,
                                    std::optional<RetrievalMode> mode = std::nullopt) const;
    std::vector<Retrieved> retrieve_vector(std::span<const float> query, std::size_t k,
                                           std::optional<RetrievalMode> mode = std::nullopt) const;

    std::size_t size() const;
    std::size_t dim() const;
    const RagConfig& config() const { return config_; }
    std::vector<std::shared_ptr<const MemoryEntry>> entries() const;

    /// entries.jsonl, embeddings.f32 (little-endian float32, row-major) and header.json.
    void save(const std::filesystem::path& dir) const;
    static RagMemory load(const std::filesystem::path& dir, RagConfig config = {});

private:
    struct Snapshot {
        std::size_t dim = 0;
        std::vector<std::shared_ptr<const MemoryEntry>> entries;
        std::vector<float> matrix;
        std::shared_ptr<const HnswIndex> index;
    };

    std::shared_ptr<const Snapshot> snapshot() const;
    void publish(std::vector<MemoryEntry> entries, bool normalize = true);

    RagConfig config_;
    mutable std::mutex mutex_;
    std::shared_ptr<const Snapshot> snapshot_;
};

/// Renders "Q: <q_i><sep>A: <a_i><sep>" per retrieved entry in rank order, then
/// "Q: <query><sep>A:".
AugmentedContext build_context(const std::string& query, const std::vector<Retrieved>& retrieved,
                               const std::string& separator = "\n");

std::string answer_with_rag(const RagMemory& memory, ModelProvider& model, const std::string& query,
                            std::size_t k, Embedder& embedder);

/// Wraps a base model so every question is answered through the memory.
class RagModel final : public ModelProvider {
public:
    RagModel(std::shared_ptr<const RagMemory> memory, std::shared_ptr<ModelProvider> base,
             std::shared_ptr<Embedder> embedder, std::size_t k);
    std::string answer(const std::string& question, const std::optional<std::string>& context) override;
    std::string identity() const override;

private:
    std::shared_ptr<const RagMemory> memory_;
    std::shared_ptr<ModelProvider> base_;
    std::shared_ptr<Embedder> embedder_;
    std::size_t k_;
};

}  // namespace editbench
