#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "editbench/serialize.hpp"

namespace editbench::synth {

/// Counts implied by the fixture's construction plan.
struct Expectations {
    std::size_t old_triplets = 0;
    std::size_t new_triplets = 0;
    std::size_t old_malformed = 0;
    std::size_t new_malformed = 0;
    std::size_t static_count = 0;
    std::size_t modified = 0;
    std::size_t added = 0;
    std::size_t ambiguous = 0;
    std::map<std::string, std::size_t> removed_by_rule;
    std::size_t kept_changed = 0;
    std::size_t mhop = 0;
    /// Per-kind QA counts with a provider that answers every prompt well-formed.
    std::map<std::string, std::size_t> qa_counts;

    std::size_t changed() const { return modified + added; }
    ojson to_json() const;
};

struct Fixture {
    std::string old_dump;  // line-delimited entity documents
    std::string new_dump;
    Expectations expected;
};

/// Snapshot pair over 200 entities with planted modifications, additions, deletions,
/// filter violations (one per rule) and multi-hop chains. The seed picks relations and
/// objects; the counts are fixed by the plan.
Fixture make_fixture(std::uint64_t seed = 7);

/// Writes old.json, new.json and expected.json into `dir`.
void write_fixture(const Fixture& fixture, const std::filesystem::path& dir);

}  // namespace editbench::synth
