#include "editbench/rag.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>

#include "editbench/error.hpp"
#include "editbench/serialize.hpp"

namespace editbench {

std::string_view to_string(RetrievalMode mode) {
    return mode == RetrievalMode::Exact ? "exact" : "approx";
}

std::optional<RetrievalMode> retrieval_mode_from_string(std::string_view name) {
    if (name == "exact") return RetrievalMode::Exact;
    if (name == "approx" || name == "approximate") return RetrievalMode::Approximate;
    return std::nullopt;
}

RagMemory::RagMemory(RagConfig config, std::size_t dim)
    : config_(std::move(config)) {
    auto s = std::make_shared<Snapshot>();
    s->dim = dim;
    snapshot_ = s;
}

RagMemory::RagMemory(RagMemory&& other) noexcept : config_(std::move(other.config_)), snapshot_(other.snapshot()) {}

std::shared_ptr<const RagMemory::Snapshot> RagMemory::snapshot() const {
    std::lock_guard lock(mutex_);
    return snapshot_;
}

std::size_t RagMemory::size() const { return snapshot()->entries.size(); }

std::size_t RagMemory::dim() const { return snapshot()->dim; }

std::vector<std::shared_ptr<const MemoryEntry>> RagMemory::entries() const { return snapshot()->entries; }

void RagMemory::publish(std::vector<MemoryEntry> entries, bool normalize) {
    if (entries.empty()) return;
    std::lock_guard lock(mutex_);
    auto next = std::make_shared<Snapshot>(*snapshot_);
    if (next->dim == 0) next->dim = entries.front().embedding.size();
    const auto dim = next->dim;
    for (const auto& e : entries) {
        if (e.embedding.size() != dim)
            throw ConfigError("rag.embed_dim", "embedding dimension " + std::to_string(e.embedding.size()) +
                                                   " does not match memory dimension " + std::to_string(dim));
    }
    std::shared_ptr<HnswIndex> index;
    if (config_.mode == RetrievalMode::Approximate) {
        index = next->index ? std::make_shared<HnswIndex>(*next->index) : std::make_shared<HnswIndex>(dim, config_.hnsw);
    }
    next->matrix.reserve(next->matrix.size() + entries.size() * dim);
    for (auto& e : entries) {
        e.id = next->entries.size();
        if (normalize) normalize_in_place(e.embedding);
        next->matrix.insert(next->matrix.end(), e.embedding.begin(), e.embedding.end());
        if (index) index->add(e.embedding);
        next->entries.push_back(std::make_shared<const MemoryEntry>(std::move(e)));
    }
    if (index) next->index = std::move(index);
    snapshot_ = std::move(next);
}

void RagMemory::add_embedded(std::vector<MemoryEntry> entries) { publish(std::move(entries)); }

AddStats RagMemory::add_entries(const std::vector<QaPair>& pairs, Embedder& embedder) {
    const auto current = dim();
    if (current != 0 && embedder.dim() != current)
        throw ConfigError("rag.embed_dim", "embedder dimension " + std::to_string(embedder.dim()) +
                                               " does not match memory dimension " + std::to_string(current));
    AddStats stats;
    std::vector<MemoryEntry> staged;
    staged.reserve(pairs.size());
    const auto batch = std::max<std::size_t>(config_.embed_batch, 1);
    for (std::size_t start = 0; start < pairs.size(); start += batch) {
        const auto stop = std::min(pairs.size(), start + batch);
        std::vector<std::string> texts;
        for (auto i = start; i < stop; ++i) texts.push_back(pairs[i].question);
        std::vector<std::optional<Embedding>> vectors(texts.size());
        try {
            auto got = embedder.embed(texts);
            if (got.size() != texts.size()) throw ProviderError("embedder returned the wrong number of vectors", false);
            for (std::size_t i = 0; i < got.size(); ++i) vectors[i] = std::move(got[i]);
        } catch (const ProviderError&) {
            for (std::size_t i = 0; i < texts.size(); ++i) {
                try {
                    vectors[i] = embedder.embed_one(texts[i]);
                } catch (const ProviderError&) {
                }
            }
        }
        for (auto i = start; i < stop; ++i) {
            auto& v = vectors[i - start];
            if (!v) {
                ++stats.skipped;
                continue;
            }
            const auto& qa = pairs[i];
            MemoryEntry e;
            e.source_id = qa.id;
            e.fact_id = qa.provenance.empty() ? qa.id : qa.provenance.front();
            e.question = qa.question;
            e.answer = qa.answer;
            e.embedding = std::move(*v);
            staged.push_back(std::move(e));
            ++stats.added;
        }
    }
    publish(std::move(staged));
    return stats;
}

std::vector<Retrieved> RagMemory::retrieve(const std::string& query, std::size_t k, Embedder& embedder,
                                           std::optional<RetrievalMode> mode) const {
    if (size() == 0) return {};
    return retrieve_vector(embedder.embed_one(query), k, mode);
}

std::vector<Retrieved> RagMemory::retrieve_vector(std::span<const float> query, std::size_t k,
                                                  std::optional<RetrievalMode> mode) const {
    const auto snap = snapshot();
    const auto n = snap->entries.size();
    if (n == 0 || k == 0) return {};
    if (query.size() != snap->dim)
        throw ConfigError("rag.embed_dim", "query dimension " + std::to_string(query.size()) +
                                               " does not match memory dimension " + std::to_string(snap->dim));
    k = std::min(k, n);
    const auto use = mode.value_or(config_.mode);

    std::vector<std::pair<float, std::uint32_t>> scored;
    if (use == RetrievalMode::Approximate && snap->index) {
        const auto ef = std::max(snap->index->params().ef_search, k);
        for (auto [id, sim] : snap->index->search(query, k, ef)) scored.emplace_back(std::clamp(sim, -1.0F, 1.0F), id);
    } else {
        scored.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::span<const float> row(snap->matrix.data() + i * snap->dim, snap->dim);
            scored[i] = {std::clamp(dot(row, query), -1.0F, 1.0F), static_cast<std::uint32_t>(i)};
        }
    }
    auto better = [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; };
    const auto keep = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(), better);
    std::vector<Retrieved> out;
    out.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) out.push_back({snap->entries[scored[i].second], scored[i].first});
    return out;
}

namespace {

void write_le_floats(std::ostream& out, std::span<const float> values) {
    for (float f : values) {
        auto bits = std::bit_cast<std::uint32_t>(f);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
        char buf[4];
        std::memcpy(buf, &bits, 4);
        out.write(buf, 4);
    }
}

}  // namespace

void RagMemory::save(const std::filesystem::path& dir) const {
    const auto snap = snapshot();
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "entries.jsonl", std::ios::binary);
        for (const auto& e : snap->entries) {
            ojson j;
            j["id"] = e->id;
            j["source_id"] = e->source_id;
            j["fact_id"] = e->fact_id;
            j["question"] = e->question;
            j["answer"] = e->answer;
            out << j.dump() << '\n';
        }
        if (!out) throw Error("cannot write " + (dir / "entries.jsonl").string());
    }
    {
        std::ofstream out(dir / "embeddings.f32", std::ios::binary);
        write_le_floats(out, snap->matrix);
        if (!out) throw Error("cannot write " + (dir / "embeddings.f32").string());
    }
    ojson header;
    header["dim"] = snap->dim;
    header["count"] = snap->entries.size();
    std::ofstream out(dir / "header.json", std::ios::binary);
    out << header.dump() << '\n';
}

RagMemory RagMemory::load(const std::filesystem::path& dir, RagConfig config) {
    std::ifstream hin(dir / "header.json", std::ios::binary);
    if (!hin) throw SchemaError("missing " + (dir / "header.json").string());
    auto header = nlohmann::json::parse(hin, nullptr, false);
    if (header.is_discarded() || !header.contains("dim") || !header.contains("count"))
        throw SchemaError("malformed " + (dir / "header.json").string());
    const auto dim = header["dim"].get<std::size_t>();
    const auto count = header["count"].get<std::size_t>();

    auto records = read_jsonl(dir / "entries.jsonl");
    if (records.size() != count) throw IntegrityError("entries.jsonl holds " + std::to_string(records.size()) +
                                                      " entries, header says " + std::to_string(count));
    std::ifstream ein(dir / "embeddings.f32", std::ios::binary);
    if (!ein) throw SchemaError("missing " + (dir / "embeddings.f32").string());
    std::vector<char> raw((std::istreambuf_iterator<char>(ein)), std::istreambuf_iterator<char>());
    if (raw.size() != count * dim * 4) throw IntegrityError("embeddings.f32 size does not match header");

    std::vector<MemoryEntry> entries(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto& j = records[i];
        auto& e = entries[i];
        try {
            e.source_id = j.at("source_id").get<std::string>();
            e.fact_id = j.at("fact_id").get<std::string>();
            e.question = j.at("question").get<std::string>();
            e.answer = j.at("answer").get<std::string>();
        } catch (const nlohmann::json::exception& ex) {
            throw SchemaError(std::string("malformed memory entry: ") + ex.what());
        }
        e.embedding.resize(dim);
        for (std::size_t d = 0; d < dim; ++d) {
            std::uint32_t bits;
            std::memcpy(&bits, raw.data() + (i * dim + d) * 4, 4);
            if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
            e.embedding[d] = std::bit_cast<float>(bits);
        }
    }
    RagMemory memory(std::move(config), dim);
    memory.publish(std::move(entries), false);
    return memory;
}

AugmentedContext build_context(const std::string& query, const std::vector<Retrieved>& retrieved,
                               const std::string& separator) {
    AugmentedContext ctx;
    for (const auto& r : retrieved) {
        ctx.text += "Q: " + r.entry->question + separator + "A: " + r.entry->answer + separator;
        ctx.ids.push_back(r.entry->id);
    }
    ctx.text += "Q: " + query + separator + "A:";
    return ctx;
}

std::string answer_with_rag(const RagMemory& memory, ModelProvider& model, const std::string& query,
                            std::size_t k, Embedder& embedder) {
    const auto retrieved = memory.retrieve(query, k, embedder);
    return model.answer(query, build_context(query, retrieved, memory.config().separator).text);
}

RagModel::RagModel(std::shared_ptr<const RagMemory> memory, std::shared_ptr<ModelProvider> base,
                   std::shared_ptr<Embedder> embedder, std::size_t k)
    : memory_(std::move(memory)), base_(std::move(base)), embedder_(std::move(embedder)), k_(k) {}

std::string RagModel::answer(const std::string& question, const std::optional<std::string>&) {
    return answer_with_rag(*memory_, *base_, question, k_, *embedder_);
}

std::string RagModel::identity() const { return "rag(k=" + std::to_string(k_) + "):" + base_->identity(); }

}  // namespace editbench
