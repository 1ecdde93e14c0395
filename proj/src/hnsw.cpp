#include "editbench/hnsw.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

#include "editbench/embed.hpp"

namespace editbench {

HnswIndex::HnswIndex(std::size_t dim, HnswParams params)
    : dim_(dim),
      params_(params),
      level_mult_(1.0 / std::log(static_cast<double>(std::max<std::size_t>(params.max_links, 2)))),
      rng_(params.seed) {
    if (dim_ == 0) throw std::invalid_argument("hnsw: dim must be positive");
}

float HnswIndex::distance(std::span<const float> q, std::uint32_t id) const {
    return 1.0F - dot(q, vec(id));
}

std::vector<HnswIndex::Candidate> HnswIndex::search_layer(std::span<const float> q, std::uint32_t entry,
                                                          std::size_t ef, int level) const {
    std::vector<bool> visited(size(), false);
    // Min-heap of candidates to expand; max-heap of current results.
    std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> frontier;
    std::priority_queue<Candidate> results;
    const float d0 = distance(q, entry);
    frontier.emplace(d0, entry);
    results.emplace(d0, entry);
    visited[entry] = true;
    while (!frontier.empty()) {
        const auto [d, node] = frontier.top();
        if (d > results.top().first && results.size() >= ef) break;
        frontier.pop();
        for (auto nb : links_[node][level]) {
            if (visited[nb]) continue;
            visited[nb] = true;
            const float dn = distance(q, nb);
            if (results.size() < ef || dn < results.top().first) {
                frontier.emplace(dn, nb);
                results.emplace(dn, nb);
                if (results.size() > ef) results.pop();
            }
        }
    }
    std::vector<Candidate> out;
    out.reserve(results.size());
    while (!results.empty()) {
        out.push_back(results.top());
        results.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
}

std::vector<std::uint32_t> HnswIndex::select_neighbors(std::span<const float> /*q*/,
                                                       std::vector<Candidate> candidates,
                                                       std::size_t m) const {
    // Diversity heuristic: keep a candidate only if it is closer to the query than to
    // every neighbor already kept.
    std::sort(candidates.begin(), candidates.end());
    std::vector<std::uint32_t> kept;
    std::vector<std::uint32_t> pruned;
    for (const auto& [d, id] : candidates) {
        if (kept.size() >= m) break;
        bool good = true;
        for (auto k : kept) {
            if (1.0F - dot(vec(id), vec(k)) < d) {
                good = false;
                break;
            }
        }
        (good ? kept : pruned).push_back(id);
    }
    for (auto id : pruned) {
        if (kept.size() >= m) break;
        kept.push_back(id);
    }
    return kept;
}

void HnswIndex::add(std::span<const float> v) {
    if (v.size() != dim_) throw std::invalid_argument("hnsw: dimension mismatch");
    const auto id = static_cast<std::uint32_t>(levels_.size());
    data_.insert(data_.end(), v.begin(), v.end());
    const double u = std::generate_canonical<double, 53>(rng_);
    const int level = static_cast<int>(std::floor(-std::log(std::max(u, 1e-12)) * level_mult_));
    levels_.push_back(level);
    links_.emplace_back(static_cast<std::size_t>(level) + 1);

    if (max_level_ < 0) {
        entry_ = id;
        max_level_ = level;
        return;
    }
    const auto q = vec(id);
    std::uint32_t cur = entry_;
    for (int l = max_level_; l > level; --l) {
        cur = search_layer(q, cur, 1, l).front().second;
    }
    for (int l = std::min(level, max_level_); l >= 0; --l) {
        auto candidates = search_layer(q, cur, params_.ef_construction, l);
        cur = candidates.front().second;
        auto chosen = select_neighbors(q, candidates, params_.max_links);
        links(id, l) = chosen;
        for (auto nb : chosen) {
            auto& nl = links(nb, l);
            nl.push_back(id);
            if (nl.size() > max_links_at(l)) {
                std::vector<Candidate> cands;
                cands.reserve(nl.size());
                for (auto x : nl) cands.emplace_back(1.0F - dot(vec(nb), vec(x)), x);
                nl = select_neighbors(vec(nb), std::move(cands), max_links_at(l));
            }
        }
    }
    if (level > max_level_) {
        max_level_ = level;
        entry_ = id;
    }
}

std::vector<std::pair<std::uint32_t, float>> HnswIndex::search(std::span<const float> query,
                                                               std::size_t k, std::size_t ef) const {
    std::vector<std::pair<std::uint32_t, float>> out;
    if (max_level_ < 0 || k == 0) return out;
    if (query.size() != dim_) throw std::invalid_argument("hnsw: dimension mismatch");
    std::uint32_t cur = entry_;
    for (int l = max_level_; l > 0; --l) cur = search_layer(query, cur, 1, l).front().second;
    const auto found = search_layer(query, cur, std::max({ef == 0 ? params_.ef_search : ef, k}), 0);
    for (std::size_t i = 0; i < found.size() && i < k; ++i)
        out.emplace_back(found[i].second, 1.0F - found[i].first);
    return out;
}

}  // namespace editbench
