#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "editbench/diff.hpp"
#include "editbench/embed.hpp"
#include "editbench/hnsw.hpp"
#include "editbench/types.hpp"

namespace editbench {

struct LocalityProbe {
    std::string changed_id;
    Triplet probe;
    float similarity = 0.0F;

    bool operator==(const LocalityProbe&) const = default;
};

/// Two changed triplets chained through a bridge entity: (e0, r1, e1) + (e1, r2, e2).
struct MhopQuintuple {
    EntityRef e0;
    PropertyRef r1;
    EntityRef e1;
    PropertyRef r2;
    EntityRef e2;
    std::string first_id;
    std::string second_id;

    Triplet first() const { return Triplet{e0, r1, e1}; }
    Triplet second() const { return Triplet{e1, r2, e2}; }
    bool operator==(const MhopQuintuple&) const = default;
};

struct LocalityOptions {
    bool approximate = false;
    std::size_t embed_batch = 64;
    HnswParams hnsw{};
    /// Neighbors fetched from the approximate index before the distinct-object check.
    std::size_t approx_candidates = 32;
};

struct LocalityResult {
    std::vector<LocalityProbe> probes;  // sorted by changed_id
    std::size_t no_candidate = 0;
    std::size_t errors = 0;
};

/// Text embedded to pair edits with static facts: "<subject label> <relation label>".
std::string locality_text(const Triplet& t);

/// True when the two objects differ both by identity and by normalized label.
bool distinct_objects(const ObjectValue& a, const ObjectValue& b);

/// Pairs each changed triplet with the most cosine-similar static triplet whose object
/// differs. Ties resolve to the earlier static triplet.
LocalityResult build_locality_probes(const std::vector<ChangedTriplet>& changed,
                                     const std::vector<Triplet>& static_set, Embedder& embedder,
                                     const LocalityOptions& options = {});

/// Every ordered pair (i, j), i != j, where changed[i].object is the subject of changed[j]
/// and e0 != e2. Sorted by (first_id, second_id).
std::vector<MhopQuintuple> build_mhop_tuples(const std::vector<ChangedTriplet>& changed);

}  // namespace editbench
