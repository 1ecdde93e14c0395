#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace editbench {

struct HnswParams {
    std::size_t max_links = 16;         // M; layer 0 allows 2*M
    std::size_t ef_construction = 200;
    std::size_t ef_search = 100;
    std::uint64_t seed = 42;
};

/// Hierarchical navigable small-world graph over unit-norm vectors, scored by
/// inner product (cosine similarity). Node ids are insertion positions.
class HnswIndex {
public:
    explicit HnswIndex(std::size_t dim, HnswParams params = {});

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return levels_.size(); }
    const HnswParams& params() const noexcept { return params_; }

    void add(std::span<const float> vec);

    /// Up to k (id, similarity) pairs, best first. `ef` of 0 uses params().ef_search.
    std::vector<std::pair<std::uint32_t, float>> search(std::span<const float> query, std::size_t k,
                                                        std::size_t ef = 0) const;

private:
    using Candidate = std::pair<float, std::uint32_t>;  // (distance, id)

    std::span<const float> vec(std::uint32_t id) const {
        return {data_.data() + static_cast<std::size_t>(id) * dim_, dim_};
    }
    float distance(std::span<const float> q, std::uint32_t id) const;
    std::vector<Candidate> search_layer(std::span<const float> q, std::uint32_t entry, std::size_t ef,
                                        int level) const;
    std::vector<std::uint32_t> select_neighbors(std::span<const float> q, std::vector<Candidate> candidates,
                                                std::size_t m) const;
    std::vector<std::uint32_t>& links(std::uint32_t id, int level) { return links_[id][level]; }
    std::size_t max_links_at(int level) const {
        return level == 0 ? 2 * params_.max_links : params_.max_links;
    }

    std::size_t dim_;
    HnswParams params_;
    double level_mult_;
    std::mt19937_64 rng_;
    std::vector<float> data_;
    std::vector<int> levels_;
    std::vector<std::vector<std::vector<std::uint32_t>>> links_;
    std::uint32_t entry_ = 0;
    int max_level_ = -1;
};

}  // namespace editbench
