#include "editbench/probes.hpp"

#include <algorithm>
#include <optional>
#include <unordered_map>

#include "editbench/error.hpp"
#include "editbench/text.hpp"

namespace editbench {

std::string locality_text(const Triplet& t) { return t.subject.label + " " + t.relation.label; }

bool distinct_objects(const ObjectValue& a, const ObjectValue& b) {
    if (object_key(a) == object_key(b)) return false;
    return text::normalize(object_text(a)) != text::normalize(object_text(b));
}

namespace {

std::vector<Embedding> embed_batched(Embedder& embedder, const std::vector<std::string>& texts,
                                     std::size_t batch) {
    std::vector<Embedding> out;
    out.reserve(texts.size());
    batch = std::max<std::size_t>(batch, 1);
    for (std::size_t i = 0; i < texts.size(); i += batch) {
        std::vector<std::string> chunk(texts.begin() + static_cast<std::ptrdiff_t>(i),
                                       texts.begin() + static_cast<std::ptrdiff_t>(std::min(texts.size(), i + batch)));
        auto part = embedder.embed(chunk);
        if (part.size() != chunk.size()) throw ProviderError("embedder returned wrong count", false);
        for (auto& e : part) out.push_back(std::move(e));
    }
    return out;
}

struct Best {
    std::size_t index;
    float similarity;
};

std::optional<Best> exact_best(const Embedding& query, const ObjectValue& changed_object,
                               const std::vector<Triplet>& static_set,
                               const std::vector<Embedding>& static_emb) {
    std::optional<Best> best;
    for (std::size_t s = 0; s < static_set.size(); ++s) {
        const float sim = cosine(query, static_emb[s]);
        if (best && sim <= best->similarity) continue;
        if (!distinct_objects(static_set[s].object, changed_object)) continue;
        best = Best{s, sim};
    }
    return best;
}

}  // namespace

LocalityResult build_locality_probes(const std::vector<ChangedTriplet>& changed,
                                     const std::vector<Triplet>& static_set, Embedder& embedder,
                                     const LocalityOptions& options) {
    LocalityResult result;
    if (static_set.empty()) {
        result.no_candidate = changed.size();
        return result;
    }
    std::vector<std::string> static_texts;
    static_texts.reserve(static_set.size());
    for (const auto& t : static_set) static_texts.push_back(locality_text(t));
    const auto static_emb = embed_batched(embedder, static_texts, options.embed_batch);

    std::optional<HnswIndex> index;
    if (options.approximate) {
        index.emplace(embedder.dim(), options.hnsw);
        for (const auto& e : static_emb) index->add(e);
    }

    std::vector<std::string> queries;
    queries.reserve(changed.size());
    for (const auto& c : changed) queries.push_back(locality_text(c.triplet));

    std::vector<std::optional<Embedding>> query_emb(changed.size());
    for (std::size_t i = 0; i < queries.size(); i += std::max<std::size_t>(options.embed_batch, 1)) {
        const auto end = std::min(queries.size(), i + std::max<std::size_t>(options.embed_batch, 1));
        try {
            std::vector<std::string> chunk(queries.begin() + static_cast<std::ptrdiff_t>(i),
                                           queries.begin() + static_cast<std::ptrdiff_t>(end));
            auto part = embedder.embed(chunk);
            for (std::size_t k = 0; k < part.size(); ++k) query_emb[i + k] = std::move(part[k]);
        } catch (const ProviderError&) {
            // Fall back to one request per item so a single bad text costs only itself.
            for (auto k = i; k < end; ++k) {
                try {
                    query_emb[k] = embedder.embed_one(queries[k]);
                } catch (const ProviderError&) {
                    ++result.errors;
                }
            }
        }
    }

    for (std::size_t i = 0; i < changed.size(); ++i) {
        if (!query_emb[i]) continue;
        const auto& query = *query_emb[i];
        const auto& changed_object = changed[i].triplet.object;
        std::optional<Best> best;
        if (index) {
            auto hits = index->search(query, options.approx_candidates,
                                      std::max(options.hnsw.ef_search, options.approx_candidates));
            std::stable_sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
                return a.second != b.second ? a.second > b.second : a.first < b.first;
            });
            for (const auto& [id, sim] : hits) {
                if (distinct_objects(static_set[id].object, changed_object)) {
                    best = Best{id, cosine(query, static_emb[id])};
                    break;
                }
            }
            if (!best) best = exact_best(query, changed_object, static_set, static_emb);
        } else {
            best = exact_best(query, changed_object, static_set, static_emb);
        }
        if (!best) {
            ++result.no_candidate;
            continue;
        }
        result.probes.push_back(LocalityProbe{triplet_id(changed[i].triplet), static_set[best->index],
                                              best->similarity});
    }
    std::stable_sort(result.probes.begin(), result.probes.end(),
                     [](const LocalityProbe& a, const LocalityProbe& b) { return a.changed_id < b.changed_id; });
    return result;
}

std::vector<MhopQuintuple> build_mhop_tuples(const std::vector<ChangedTriplet>& changed) {
    std::unordered_map<std::string, std::vector<std::size_t>> by_subject;
    for (std::size_t j = 0; j < changed.size(); ++j) by_subject[changed[j].triplet.subject.id].push_back(j);

    std::vector<MhopQuintuple> out;
    for (std::size_t i = 0; i < changed.size(); ++i) {
        const auto& first = changed[i].triplet;
        const auto* bridge = std::get_if<EntityRef>(&first.object);
        if (bridge == nullptr) continue;
        auto it = by_subject.find(bridge->id);
        if (it == by_subject.end()) continue;
        for (auto j : it->second) {
            if (j == i) continue;
            const auto& second = changed[j].triplet;
            const auto* tail = std::get_if<EntityRef>(&second.object);
            if (tail == nullptr || tail->id == first.subject.id) continue;
            out.push_back(MhopQuintuple{first.subject, first.relation, *bridge, second.relation, *tail,
                                        triplet_id(first), triplet_id(second)});
        }
    }
    std::sort(out.begin(), out.end(), [](const MhopQuintuple& a, const MhopQuintuple& b) {
        return a.first_id != b.first_id ? a.first_id < b.first_id : a.second_id < b.second_id;
    });
    return out;
}

}  // namespace editbench
